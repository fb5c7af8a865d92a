import argparse
import logging
import sys

from dotenv import load_dotenv

from commands.debug import register_debug_commands
from commands.experiments import config_overrides, register_experiment_commands
from helpers.actlang import ActlangError, compile_program, format_error
from helpers.config import ConfigError, load_config, log_level
from helpers.harness import HarnessError, replay, run_experiment
from helpers.interpreter import execute
from helpers.llm_backend import AgentError
from helpers.perception import PerceptionError, camera_for, render, write_image
from helpers.report_builder import format_report
from helpers.skills import SkillError, SkillLibrary
from helpers.snapshot import SnapshotError, load_snapshot, save_snapshot
from helpers.verify import VerifyError, shape_signature, verify_structure
from helpers.world import generate_world, spawn_agent, world_diff

# Load environment variables
load_dotenv()

VERSION = "1.0.0"

# Errors reported as "bad input" (exit 1) rather than as a traceback
USAGE_ERRORS = (ConfigError, SkillError, SnapshotError, HarnessError, AgentError, VerifyError, PerceptionError,
                OSError)


class UsageParser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; this CLI reserves 2 for incomplete experiments."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> UsageParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Config file (JSON); flags override its values")
    common.add_argument("--seed", type=int, help="World seed (added to --seeds for experiments)")
    common.add_argument("--print-config", action="store_true", help="Print the resolved config and exit")

    parser = UsageParser(prog="voyagervision", description="Voxel-world agent experiments and debugging tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")

    register_experiment_commands(
        subparsers,
        parents=[common],
        run_experiment=run_experiment,
        format_report=format_report,
    )
    register_debug_commands(
        subparsers,
        parents=[common],
        generate_world=generate_world,
        spawn_agent=spawn_agent,
        load_snapshot=load_snapshot,
        save_snapshot=save_snapshot,
        camera_for=camera_for,
        render=render,
        write_image=write_image,
        compile_program=compile_program,
        execute=execute,
        format_error=format_error,
        ActlangError=ActlangError,
        world_diff=world_diff,
        verify_structure=verify_structure,
        shape_signature=shape_signature,
        load_skills=SkillLibrary.load,
        replay=replay,
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=log_level(), format="%(asctime)s %(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1

    try:
        config = load_config(args.config, config_overrides(args))
        if args.print_config:
            print(config.canonical_json())
            return 0
        return args.handler(args, config)
    except USAGE_ERRORS as e:
        print(f"❌ {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
