# harness.py
"""Experiment runner: unit tests, open-ended resource gathering and building, outputs and replay."""
import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable

from helpers.actlang import ActlangError, compile_program
from helpers.agents import IterationRecord, MalformedVerdict, parse_verdict, run_iteration
from helpers.config import ConfigError, HarnessConfig
from helpers.interpreter import execute
from helpers.inventory import AgentState
from helpers.llm_backend import BackendUnavailable, HttpBackend, LlmBackend, ScriptedBackend
from helpers.observation import History
from helpers.perception import Image, write_image
from helpers.report_builder import PICKAXE_TIERS, compose_report, format_report, write_csv
from helpers.skills import SkillError, SkillLibrary
from helpers.verify import VerifyReport, shape_signature, verify_structure
from helpers.world import VoxelWorld, WorldDiff, generate_world, spawn_agent, world_diff, world_hash

logger = logging.getLogger(__name__)

BUILD_VERBS = ("create", "build", "construct")
TEMPLATE_KEYWORDS = (("pole", "pole"), ("wall", "wall"), ("stair", "stairs"), ("pyramid", "pyramid"),
                     ("portal", "portal"))
SCAFFOLD_BLOCKS = frozenset({"dirt"})
TRIALS_FORMAT_VERSION = 1

BackendFactory = Callable[[], LlmBackend]
WorldFactory = Callable[[int, str], VoxelWorld]


class HarnessError(Exception):
    pass


@dataclass(frozen=True)
class UnitTask:
    template: str
    task: str
    context: str
    inventory: dict[str, int]


UNIT_TASKS = {
    "pole": UnitTask("pole", "Create a wooden plank pole, 3 blocks high on the ground.", "",
                     {"oak_planks": 64, "dirt": 64}),
    "wall": UnitTask("wall", "Create a wooden wall 4 blocks high and 4 blocks long in a flat open space.", "",
                     {"oak_planks": 64, "dirt": 64}),
    "stairs": UnitTask(
        "stairs", "create a wooden staircase 3 blocks high.",
        "The stair case should be composed of 3 adjacent pillars, one 3 blocks high, one 2 blocks high and "
        "one 1 block high, use wooden planks.",
        {"oak_planks": 64, "dirt": 64}),
    "portal": UnitTask(
        "portal", "create a nether portal.",
        "The portal should be made of obsidian, the sides should be 5 blocks tall with the base 4 blocks wide, "
        "once you have completed the structure light the inside with your flint and steel to form a nether "
        "portal, ensure no dirt scaffolding remains inside the portal or else it will not light correctly.",
        {"obsidian": 14, "flint_and_steel": 1, "dirt": 64}),
    "pyramid": UnitTask(
        "pyramid", "create a three tier spruce plank pyramid.",
        "Begin with a 6x6 platform on the ground, on top of this platform centred on its middle 4x4 blocks add "
        "a 4x4 platform, finally on top of this 4x4 platform in its middle 2x2 blocks add 2x2 platform.",
        {"spruce_planks": 64, "dirt": 64}),
}


# ---------------- TASK CLASSIFICATION ----------------

def is_building_task(task: str) -> bool:
    words = task.strip().lower().split()
    return bool(words) and words[0] in BUILD_VERBS


def template_for_task(task: str) -> str | None:
    """Template named by the earliest structure keyword in the task text."""
    text = task.lower()
    hits = [(text.find(word), name) for word, name in TEMPLATE_KEYWORDS if word in text]
    return min(hits)[1] if hits else None


# ---------------- RECORDS ----------------

@dataclass(frozen=True)
class TrialSpec:
    trial_id: str
    world_kind: str
    seed: int
    iterations: int
    template: str | None = None


@dataclass
class IterationCheck:
    iteration: int
    task: str
    building: bool
    template: str | None
    reported: bool
    oracle: VerifyReport | None
    signature: int | None
    dirt_at_start: int = 0

    @property
    def true(self) -> bool | None:
        return self.oracle.success if self.oracle else None

    @property
    def confirmed(self) -> bool:
        """Oracle verdict when a template applies, otherwise the critic's."""
        return self.oracle.success if self.oracle else self.reported

    def to_dict(self) -> dict:
        return {
            "building": self.building,
            "confirmed": self.confirmed,
            "dirt_at_start": self.dirt_at_start,
            "iteration": self.iteration,
            "oracle": self.oracle.to_dict() if self.oracle else None,
            "reported": self.reported,
            "signature": f"{self.signature:016x}" if self.signature is not None else None,
            "task": self.task,
            "template": self.template,
            "true": self.true,
        }


@dataclass
class TrialResult:
    spec: TrialSpec
    provisioned: dict[str, int]
    start_hash: str
    iterations: list[IterationRecord] = field(default_factory=list)
    checks: list[IterationCheck] = field(default_factory=list)
    milestones: dict[str, int | None] = field(default_factory=lambda: {t: None for t in PICKAXE_TIERS})
    items_seen: set[str] = field(default_factory=set)
    incomplete: bool = False
    error: str | None = None

    def summary(self) -> dict:
        return {
            "checks": [c.to_dict() for c in self.checks],
            "error": self.error,
            "incomplete": self.incomplete,
            "items_seen": sorted(self.items_seen),
            "milestones": dict(self.milestones),
            "provisioned": dict(self.provisioned),
            "seed": self.spec.seed,
            "start_hash": self.start_hash,
            "template": self.spec.template,
            "trial_id": self.spec.trial_id,
            "world_kind": self.spec.world_kind,
        }

    def to_dict(self) -> dict:
        return {**self.summary(), "iterations": [r.to_dict() for r in self.iterations]}


@dataclass
class ExperimentOutcome:
    report: dict
    run_dir: str
    files: dict[str, str]

    @property
    def incomplete(self) -> bool:
        return self.report["incomplete"]


# ---------------- SETUP ----------------

def make_backend_factory(config: HarnessConfig) -> BackendFactory:
    """One fresh backend per trial, so scripted call indices restart for every trial."""
    backend = config.backend
    if backend.kind == "scripted":
        if not backend.script_path:
            raise ConfigError("the scripted backend needs a script path")
        path = backend.script_path
        ScriptedBackend.from_file(path)  # fail fast on a bad script
        return lambda: ScriptedBackend.from_file(path)
    api_key = config.api_key()
    if not api_key:
        logger.warning("⚠️ %s is not set; sending requests without an API key", backend.api_key_env)
    return lambda: HttpBackend(backend.base_url, backend.model, api_key=api_key, temperature=backend.temperature,
                               timeout=backend.timeout, max_retries=backend.max_retries)


def trial_specs(config: HarnessConfig) -> list[TrialSpec]:
    specs = []
    if config.experiment == "unit_tests":
        for template in config.templates:
            for kind in config.world_kinds():
                for seed in config.seeds_for(kind):
                    specs.append(TrialSpec(f"{template}-{kind}-{seed}", kind, seed, config.iterations(), template))
    else:
        for kind in config.world_kinds():
            for seed in config.seeds_for(kind):
                specs.append(TrialSpec(f"{kind}-{seed}", kind, seed, config.iterations()))
    return specs


def provision(agent: AgentState, items: dict[str, int]) -> None:
    for item, n in sorted(items.items()):
        agent.inventory.add(item, n)


def _fresh_library(config: HarnessConfig) -> SkillLibrary:
    if config.skills_path:
        return SkillLibrary.load(config.skills_path)
    return SkillLibrary()


def _screenshot_sink(run_dir: str, trial_dir: str) -> Callable[[Image, str], str]:
    def sink(image: Image, label: str) -> str:
        ref = f"{trial_dir}/{label}.ppm"
        write_image(image, os.path.join(run_dir, ref))
        return ref
    return sink


# ---------------- ONE TRIAL ----------------

def assess_iteration(record: IterationRecord, diff: WorldDiff, world_after: VoxelWorld,
                     template: str | None = None, dirt_at_start: int = 0) -> IterationCheck:
    """Ground-truth bookkeeping for one iteration: oracle verdict and structure signature."""
    building = template is not None or is_building_task(record.task)
    name = template or (template_for_task(record.task) if building else None)
    oracle = verify_structure(name, diff, world_after) if name else None
    check = IterationCheck(record.iteration, record.task, building, name, record.success, oracle, None, dirt_at_start)
    structure = frozenset((p, b) for p, b in diff.added if b not in SCAFFOLD_BLOCKS)
    if building and check.confirmed and structure:
        check.signature = shape_signature(WorldDiff(structure, frozenset()))
    if oracle is not None:
        logger.info("%s Oracle for %r: %s", "✅" if oracle.success else "❌", record.task, oracle.reason)
    return check


def _track_progress(result: TrialResult, agent: AgentState, iteration: int) -> None:
    held = agent.inventory.totals()
    result.items_seen.update(held)
    for tier in PICKAXE_TIERS:
        if result.milestones[tier] is None and held.get(f"{tier}_pickaxe", 0) > 0:
            result.milestones[tier] = iteration
            logger.info("✅ %s pickaxe reached at iteration %d", tier.capitalize(), iteration)


def run_trial(spec: TrialSpec, config: HarnessConfig, backend: LlmBackend, run_dir: str,
              world_factory: WorldFactory = generate_world) -> TrialResult:
    world = world_factory(spec.seed, spec.world_kind)
    agent = spawn_agent(world)
    unit = UNIT_TASKS[spec.template] if spec.template else None
    if unit:
        provision(agent, unit.inventory)
    result = TrialResult(spec, dict(unit.inventory) if unit else {}, world_hash(world))
    trial_dir = f"run_{spec.trial_id}"
    os.makedirs(os.path.join(run_dir, trial_dir), exist_ok=True)
    sink = _screenshot_sink(run_dir, trial_dir)
    skills = _fresh_library(config)
    history = History()
    agent_config = config.agent_config()
    logger.info("🔄 Trial %s started", spec.trial_id)

    for i in range(1, spec.iterations + 1):
        before = world.copy()
        dirt = agent.inventory.count("dirt")
        try:
            record = run_iteration(
                world, agent, agent_config, backend, skills, history, iteration=i,
                task=unit.task if unit else None, context=unit.context if unit else "",
                screenshot_sink=sink,
            )
        except BackendUnavailable as e:
            logger.error("🚨 Trial %s stopped at iteration %d: %s", spec.trial_id, i, e)
            result.incomplete, result.error = True, str(e)
            break
        result.iterations.append(record)
        check = assess_iteration(record, world_diff(before, world), world, spec.template, dirt)
        if check.building and dirt < config.dirt_scaffold_target:
            logger.info("⚠️ Building task %r started with %d dirt (target %d)", record.task, dirt,
                        config.dirt_scaffold_target)
        result.checks.append(check)
        _track_progress(result, agent, i)
        if unit and record.success:
            break

    skills.save(os.path.join(run_dir, trial_dir, "skills.json"))
    logger.info("✅ Trial %s finished after %d iteration(s)", spec.trial_id, len(result.iterations))
    return result


def run_trials(specs: list[TrialSpec], config: HarnessConfig, backend_factory: BackendFactory, run_dir: str,
               world_factory: WorldFactory = generate_world) -> list[TrialResult]:
    """Independent trials, up to `parallelism` at a time; results keep the order of `specs`."""
    if config.parallelism <= 1:
        return [run_trial(s, config, backend_factory(), run_dir, world_factory) for s in specs]
    results: dict[int, TrialResult] = {}
    with ThreadPoolExecutor(max_workers=config.parallelism) as executor:
        fut_to_idx = {
            executor.submit(run_trial, s, config, backend_factory(), run_dir, world_factory): idx
            for idx, s in enumerate(specs)
        }
        for fut in as_completed(fut_to_idx):
            results[fut_to_idx[fut]] = fut.result()
    return [results[idx] for idx in range(len(specs))]


# ---------------- OUTPUTS ----------------

def run_directory(config: HarnessConfig) -> str:
    digest = hashlib.sha256(config.canonical_json().encode("utf-8")).hexdigest()
    return os.path.join(config.output_dir(), f"{config.experiment}-{digest[:8]}")


def _prompt_hash(messages: list[dict]) -> str:
    return hashlib.sha256(json.dumps(messages, sort_keys=True).encode("utf-8")).hexdigest()


def transcript_events(results: list[TrialResult]) -> list[dict]:
    """One event per agent call, in trial, iteration and call order."""
    events = []
    for result in results:
        for record in result.iterations:
            for ex in record.exchanges:
                verdict = None
                if ex["agent"] == "critic":
                    try:
                        verdict = parse_verdict(ex["reply"]).to_dict()
                    except MalformedVerdict:
                        verdict = None
                images = [p["image"] for m in ex["messages"] for p in m["parts"] if "image" in p]
                events.append({
                    "agent": ex["agent"],
                    "images": images,
                    "iteration": record.iteration,
                    "prompt_sha256": _prompt_hash(ex["messages"]),
                    "response": ex["reply"],
                    "round": ex["round"],
                    "trial": result.spec.trial_id,
                    "verdict": verdict,
                })
    return events


def write_outputs(results: list[TrialResult], report: dict, run_dir: str, config: HarnessConfig) -> dict[str, str]:
    """Transcript, trial records, config and report files. IO errors propagate."""
    os.makedirs(run_dir, exist_ok=True)
    files = {name: os.path.join(run_dir, name) for name in
             ("config.json", "transcript.jsonl", "trials.json", "report.json", "report.csv", "report.txt")}

    with open(files["config.json"], "w", encoding="utf-8") as f:
        f.write(config.canonical_json() + "\n")

    lines = [json.dumps(e, sort_keys=True, ensure_ascii=False) for e in transcript_events(results)]
    transcript = ("\n".join(lines) + "\n" if lines else "").encode("utf-8")
    with open(files["transcript.jsonl"], "wb") as f:
        f.write(transcript)
    report["transcript_sha256"] = hashlib.sha256(transcript).hexdigest()

    with open(files["trials.json"], "w", encoding="utf-8") as f:
        json.dump({"experiment": config.experiment, "format_version": TRIALS_FORMAT_VERSION,
                   "trials": [r.to_dict() for r in results]}, f, sort_keys=True, indent=1)
    with open(files["report.json"], "w", encoding="utf-8") as f:
        json.dump(report, f, sort_keys=True, indent=2)
    write_csv(report, files["report.csv"])
    with open(files["report.txt"], "w", encoding="utf-8") as f:
        f.write(format_report(report) + "\n")
    logger.info("✅ Wrote %s report to %s", config.experiment, run_dir)
    return files


# ---------------- EXPERIMENTS ----------------

def run_experiment(config: HarnessConfig, *, backend_factory: BackendFactory | None = None,
                   world_factory: WorldFactory = generate_world) -> ExperimentOutcome:
    backend_factory = backend_factory or make_backend_factory(config)
    run_dir = run_directory(config)
    os.makedirs(run_dir, exist_ok=True)
    specs = trial_specs(config)
    logger.info("🔄 %s: %d trial(s) into %s", config.experiment, len(specs), run_dir)
    results = run_trials(specs, config, backend_factory, run_dir, world_factory)
    report = compose_report(config.experiment, [r.summary() for r in results])
    files = write_outputs(results, report, run_dir, config)
    if report["incomplete"]:
        logger.warning("⚠️ %s report is incomplete", config.experiment)
    return ExperimentOutcome(report, run_dir, files)


def run_unit_tests(config: HarnessConfig, **kwargs) -> ExperimentOutcome:
    return run_experiment(config.model_copy(update={"experiment": "unit_tests"}), **kwargs)


def run_open_ended_resources(config: HarnessConfig, **kwargs) -> ExperimentOutcome:
    return run_experiment(config.model_copy(update={"experiment": "resources"}), **kwargs)


def run_open_ended_building(config: HarnessConfig, **kwargs) -> ExperimentOutcome:
    return run_experiment(config.model_copy(update={"experiment": "building"}), **kwargs)


# ---------------- REPLAY ----------------

def load_trials(path: str) -> dict:
    if os.path.isdir(path):
        path = os.path.join(path, "trials.json")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        raise HarnessError(f"Failed to read trial records {path}: {e}") from e
    if data.get("format_version") != TRIALS_FORMAT_VERSION:
        raise HarnessError(f"Unsupported trial records version {data.get('format_version')!r}")
    return data


def replay_trial(trial: dict, world_factory: WorldFactory = generate_world) -> dict:
    """Re-run one trial's recorded programs from its seed and recompute every oracle verdict."""
    world = world_factory(trial["seed"], trial["world_kind"])
    if world_hash(world) != trial["start_hash"]:
        logger.warning("⚠️ Trial %s starts from a different world than recorded", trial["trial_id"])
    agent = spawn_agent(world)
    provision(agent, trial["provisioned"])
    skills = SkillLibrary()
    recorded = {c["iteration"]: c for c in trial["checks"]}
    out = []
    for it in trial["iterations"]:
        before = world.copy()
        library = skills.function_table()
        for rnd in it["rounds"]:
            if rnd["code"] is None:
                continue
            try:
                execute(compile_program(rnd["code"], library), world, agent, library=library)
            except ActlangError as e:
                raise HarnessError(f"Recorded program of iteration {it['iteration']} no longer compiles: {e}") from e
        record = IterationRecord(it["iteration"], it["task"], it["context"])
        if it["skill_name"]:
            try:
                skills.add(it["task"], next(r["code"] for r in reversed(it["rounds"]) if r["code"]), it["iteration"])
            except SkillError as e:
                logger.warning("⚠️ Replayed skill for %r not stored: %s", it["task"], e)
        check = assess_iteration(record, world_diff(before, world), world, trial["template"])
        old = recorded.get(it["iteration"], {})
        out.append({
            "iteration": it["iteration"],
            "match": check.true == old.get("true"),
            "recorded_true": old.get("true"),
            "replayed_true": check.true,
            "task": it["task"],
        })
    return {"iterations": out, "match": all(o["match"] for o in out), "trial_id": trial["trial_id"]}


def replay(path: str, world_factory: WorldFactory = generate_world) -> dict:
    data = load_trials(path)
    trials = [replay_trial(t, world_factory) for t in data["trials"]]
    logger.info("🔄 Replayed %d trial(s)", len(trials))
    return {"experiment": data["experiment"], "match": all(t["match"] for t in trials), "trials": trials}
