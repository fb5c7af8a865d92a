# commands/experiments.py
import argparse


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _name_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _resolution(text: str) -> list[int]:
    try:
        width, height = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}")
    return [width, height]


def add_config_flags(parser: argparse.ArgumentParser) -> None:
    """One flag per config value; unset flags leave the config file's value alone."""
    parser.add_argument("--out", dest="out_dir", help="Output directory for run artifacts")
    parser.add_argument("--backend", choices=["http", "scripted"], help="LLM backend kind")
    parser.add_argument("--script", dest="script_path", help="Scripted backend fixture (JSON)")
    parser.add_argument("--base-url", help="OpenAI-compatible API base URL")
    parser.add_argument("--model", help="Chat model name")
    parser.add_argument("--temperature", type=float, help="Sampling temperature")
    parser.add_argument("--timeout", type=float, help="Seconds to wait for each backend request")
    parser.add_argument("--backend-retries", type=int, help="Attempts per backend request before giving up")
    parser.add_argument("--api-key-env", help="Environment variable holding the API key")
    parser.add_argument("--prompt-variant", choices=["voyager", "voyager_gpt4o", "voyagervision"])
    parser.add_argument("--screenshots", dest="send_images", action=argparse.BooleanOptionalAction, default=None,
                        help="Send POV screenshots to the agents")
    parser.add_argument("--seeds", type=_int_list, help="Comma-separated world seeds")
    parser.add_argument("--world-kind", choices=["flat", "regular"])
    parser.add_argument("--templates", type=_name_list, help="Comma-separated unit-test structures")
    parser.add_argument("--max-iterations", type=int)
    parser.add_argument("--max-retries", type=int, help="Action/critic rounds per iteration")
    parser.add_argument("--skill-top-k", type=int)
    parser.add_argument("--dirt-target", dest="dirt_scaffold_target", type=int,
                        help="Dirt the agent should hold before building")
    parser.add_argument("--parallelism", type=int, help="Trials run at once")
    parser.add_argument("--resolution", type=_resolution, help="Screenshot size, e.g. 320x240")
    parser.add_argument("--skills", dest="skills_path", help="Skill library to start every trial from")


def config_overrides(args: argparse.Namespace) -> dict:
    """Config dict built from whichever flags were given."""
    get = lambda name: getattr(args, name, None)  # noqa: E731
    seeds = get("seeds")
    if get("seed") is not None:
        seeds = (seeds or []) + [args.seed]
    return {
        "experiment": get("experiment"),
        "backend": {
            "kind": get("backend"),
            "script_path": get("script_path"),
            "base_url": get("base_url"),
            "model": get("model"),
            "temperature": get("temperature"),
            "timeout": get("timeout"),
            "max_retries": get("backend_retries"),
            "api_key_env": get("api_key_env"),
        },
        "prompt_variant": get("prompt_variant"),
        "send_images": get("send_images"),
        "seeds": seeds,
        "world_kind": get("world_kind"),
        "templates": get("templates"),
        "max_iterations": get("max_iterations"),
        "max_retries": get("max_retries"),
        "skill_top_k": get("skill_top_k"),
        "dirt_scaffold_target": get("dirt_scaffold_target"),
        "parallelism": get("parallelism"),
        "resolution": get("resolution"),
        "skills_path": get("skills_path"),
        "out_dir": get("out_dir"),
    }


def register_experiment_commands(
    subparsers,
    *,
    parents: list,                           # shared parsers (--config, --seed, --print-config)
    run_experiment,                          # callable(config) -> ExperimentOutcome
    format_report,                           # callable(report dict) -> str
):
    def _run(args, config) -> int:
        outcome = run_experiment(config)
        print(format_report(outcome.report))
        print(f"\n📁 Run directory: {outcome.run_dir}")
        if outcome.incomplete:
            print("⚠️ The run is incomplete: the backend became unreachable.")
            return 2
        return 0

    commands = [
        ("unit-tests", "unit_tests", "Run the five building unit tests on flat and regular worlds"),
        ("resources", "resources", "Open-ended run, tracking the pickaxe tiers reached"),
        ("building", "building", "Open-ended run, scoring building tasks and unique structures"),
    ]
    for name, experiment, help_text in commands:
        parser = subparsers.add_parser(name, parents=parents, help=help_text, description=help_text)
        add_config_flags(parser)
        parser.set_defaults(handler=_run, experiment=experiment)
