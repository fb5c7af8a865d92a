# commands/debug.py
import json
import sys


def register_debug_commands(
    subparsers,
    *,
    parents: list,                           # shared parsers (--config, --seed, --print-config)
    generate_world,                          # callable(seed, kind) -> VoxelWorld
    spawn_agent,                             # callable(world) -> AgentState
    load_snapshot,                           # callable(path) -> (VoxelWorld, AgentState | None)
    save_snapshot,                           # callable(world, agent, path) -> None
    camera_for,                              # callable(agent, (w, h)) -> Camera
    render,                                  # callable(world, camera) -> Image
    write_image,                             # callable(image, path, png) -> path
    compile_program,                         # callable(source, library) -> Program
    execute,                                 # callable(program, world, agent, limits, library) -> ExecResult
    format_error,                            # callable(exception) -> str
    ActlangError,                            # exception type raised by compile_program
    world_diff,                              # callable(before, after) -> WorldDiff
    verify_structure,                        # callable(template, diff, world_after) -> VerifyReport
    shape_signature,                         # callable(diff) -> int
    load_skills,                             # callable(path) -> SkillLibrary
    replay,                                  # callable(path) -> dict
):
    def _world_and_agent(args):
        if args.snapshot:
            world, agent = load_snapshot(args.snapshot)
            return world, agent or spawn_agent(world)
        world = generate_world(args.seed if args.seed is not None else 1, args.world_kind)
        return world, spawn_agent(world)

    def _render(args, config) -> int:
        world, agent = _world_and_agent(args)
        if args.yaw is not None:
            agent.yaw = args.yaw
        if args.pitch is not None:
            agent.pitch = args.pitch
        width = args.width or config.resolution[0]
        height = args.height or config.resolution[1]
        image = render(world, camera_for(agent, (width, height)))
        print(f"✅ Wrote {write_image(image, args.image_out, args.png)} ({width}x{height})")
        return 0

    def _dsl_run(args, config) -> int:
        with open(args.file, "r", encoding="utf-8") as f:
            source = f.read()
        library = load_skills(args.skills).function_table() if args.skills else {}
        world, agent = _world_and_agent(args)
        try:
            program = compile_program(source, library)
        except ActlangError as e:
            print(f"❌ {format_error(e)}", file=sys.stderr)
            return 2
        result = execute(program, world, agent, None, library)
        print(json.dumps({**result.to_dict(), "agent": agent.to_dict()}, sort_keys=True, indent=2))
        if args.save_snapshot:
            save_snapshot(world, agent, args.save_snapshot)
        return 0 if result.ok else 2

    def _verify(args, config) -> int:
        before, _ = load_snapshot(args.before)
        after, _ = load_snapshot(args.after)
        diff = world_diff(before, after)
        report = verify_structure(args.template, diff, after).to_dict()
        report["signature"] = f"{shape_signature(diff):016x}" if diff.added else None
        print(json.dumps(report, sort_keys=True, indent=2))
        return 0

    def _inspect_skills(args, config) -> int:
        library = load_skills(args.path)
        for skill in library.skills:
            print(f"{skill.name} (iteration {skill.created_at_iteration}): {skill.description}")
        print(f"📋 {len(library)} skill(s)")
        return 0

    def _replay(args, config) -> int:
        result = replay(args.path)
        print(json.dumps(result, sort_keys=True, indent=2))
        if not result["match"]:
            print("❌ Replayed oracle verdicts differ from the recorded ones.", file=sys.stderr)
            return 2
        return 0

    parser = subparsers.add_parser("render", parents=parents, help="Write a POV screenshot of a world")
    parser.add_argument("--snapshot", help="World snapshot (JSON); otherwise the world from --seed")
    parser.add_argument("--world-kind", choices=["flat", "regular"], default="flat")
    parser.add_argument("--yaw", type=float)
    parser.add_argument("--pitch", type=float)
    parser.add_argument("--width", type=int)
    parser.add_argument("--height", type=int)
    parser.add_argument("--png", action="store_true", help="PNG instead of PPM")
    parser.add_argument("--out", dest="image_out", required=True, help="Image path")
    parser.set_defaults(handler=_render)

    parser = subparsers.add_parser("dsl-run", parents=parents, help="Execute an action program against a world")
    parser.add_argument("file", help="Program source")
    parser.add_argument("--snapshot", help="World snapshot (JSON); otherwise the world from --seed")
    parser.add_argument("--world-kind", choices=["flat", "regular"], default="flat")
    parser.add_argument("--skills", help="Skill library whose functions the program may call")
    parser.add_argument("--save-snapshot", help="Write the resulting world here")
    parser.set_defaults(handler=_dsl_run)

    parser = subparsers.add_parser("verify", parents=parents, help="Check a structure between two snapshots")
    parser.add_argument("--template", required=True, choices=["pole", "wall", "stairs", "pyramid", "portal"])
    parser.add_argument("--before", required=True)
    parser.add_argument("--after", required=True)
    parser.set_defaults(handler=_verify)

    parser = subparsers.add_parser("inspect-skills", parents=parents, help="List the skills of a library file")
    parser.add_argument("path")
    parser.set_defaults(handler=_inspect_skills)

    parser = subparsers.add_parser("replay", parents=parents,
                                   help="Re-execute a run's programs and recompute oracle verdicts")
    parser.add_argument("path", help="Run directory or its trials.json")
    parser.set_defaults(handler=_replay)
