# agents.py
"""Curriculum, action and critic agents and the per-iteration loop that runs them."""
import json
import logging
import os
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

from helpers.actlang import ActlangError, NoCodeFound, Program, compile_program, extract_code, format_error
from helpers.config import AgentConfig
from helpers.interpreter import ExecLimits, ExecResult, execute
from helpers.inventory import AgentState
from helpers.llm_backend import AgentError, ImagePart, LlmBackend, Message, TextPart
from helpers.observation import History, Observation, build_observation
from helpers.perception import Image, capture_pov
from helpers.skills import Skill, SkillError, SkillLibrary
from helpers.world import VoxelWorld, nearby_blocks

logger = logging.getLogger(__name__)

PROMPTS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "prompts")
FIRST_TASK = "Obtain 1 wooden log"
NO_TASK = "(no task proposed)"  # stands in for a proposal that could not be parsed
VERDICT_KEYS = {"reasoning", "success", "critique"}

ScreenshotSink = Callable[[Image, str], str | None]


class MalformedProposal(AgentError):
    pass


class MalformedVerdict(AgentError):
    pass


# ---------------- PROMPTS ----------------

@lru_cache(maxsize=None)
def load_prompt(name: str) -> str:
    path = os.path.join(PROMPTS_DIR, f"{name}.txt")
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def system_prompt(role: str, variant: str) -> str:
    return load_prompt(f"{role}_{variant}")


def render_action_system(variant: str, skills: list[Skill]) -> str:
    """Action template with the language primer and retrieved skill sources in the programs slot."""
    programs = "\n\n".join([load_prompt("dsl_primer").rstrip("\n")] + [s.source.rstrip("\n") for s in skills])
    slots = {"programs": programs, "response_format": load_prompt("action_response_format").rstrip("\n")}
    # single pass, so slot contents are never re-scanned for placeholders
    return re.sub(r"\{(programs|response_format)\}", lambda m: slots[m.group(1)], system_prompt("action", variant))


def user_message(text: str, image: Image | None = None, image_ref: str | None = None) -> Message:
    parts: list = [TextPart(text)]
    if image is not None:
        parts.append(ImagePart(image, image_ref))
    return Message("user", parts)


def _ask(backend: LlmBackend, agent_role: str, messages: list[Message], task: str | None,
         log: list | None) -> str:
    reply = backend.complete(messages, agent_role, task=task)
    if log is not None:
        log.append({
            "agent": agent_role,
            "messages": [m.to_record() for m in messages],
            "reply": reply,
        })
    return reply


# ---------------- CURRICULUM ----------------

@dataclass(frozen=True)
class TaskProposal:
    reasoning: str
    task: str
    context: str = ""

    def to_dict(self) -> dict:
        return {"context": self.context, "reasoning": self.reasoning, "task": self.task}


_LINE_RE = {
    key: re.compile(rf"^\s*{key}\s*:\s*(.*)$", re.IGNORECASE | re.MULTILINE)
    for key in ("reasoning", "task", "context")
}


def parse_proposal(text: str) -> TaskProposal:
    fields = {}
    for key, pattern in _LINE_RE.items():
        match = pattern.search(text)
        fields[key] = match.group(1).strip() if match else ""
    if not fields["task"]:
        raise MalformedProposal("reply has no 'Task:' line")
    return TaskProposal(fields["reasoning"], fields["task"], fields["context"])


def propose_task(backend: LlmBackend, observation: Observation, image: Image | None = None, *,
                 variant: str = "voyagervision", image_ref: str | None = None,
                 log: list | None = None) -> TaskProposal:
    """Ask the curriculum agent for the next task; one re-ask on a malformed reply."""
    messages = [
        Message.text("system", system_prompt("curriculum", variant)),
        user_message(observation.render_curriculum(), image, image_ref),
    ]
    reply = _ask(backend, "curriculum", messages, None, log)
    try:
        return parse_proposal(reply)
    except MalformedProposal as e:
        logger.warning("⚠️ Curriculum reply unusable (%s), asking again", e)
    messages += [
        Message.text("assistant", reply),
        Message.text("user", "Your response did not follow the format. Respond with a 'Reasoning:' line "
                             "followed by a 'Task:' line."),
    ]
    reply = _ask(backend, "curriculum", messages, None, log)
    return parse_proposal(reply)


# ---------------- ACTION ----------------

def generate_program(backend: LlmBackend, task: str, observation: Observation, retrieved: list[Skill],
                     library: dict, image: Image | None = None, *, variant: str = "voyagervision",
                     image_ref: str | None = None, log: list | None = None) -> tuple[str, Program]:
    """
    Ask the action agent for a program and compile it against the skill library.
    A reply without usable code gets one re-ask carrying the error; a second failure raises NoCodeFound.
    """
    messages = [
        Message.text("system", render_action_system(variant, retrieved)),
        user_message(observation.render_action(), image, image_ref),
    ]
    reply = _ask(backend, "action", messages, task, log)
    try:
        source = extract_code(reply)
        return source, compile_program(source, library)
    except ActlangError as e:
        problem = format_error(e)
        logger.warning("⚠️ Action reply unusable (%s), asking again", problem)
    messages += [
        Message.text("assistant", reply),
        Message.text("user", f"Your code could not be used. {problem}\nFix it and respond in the required format."),
    ]
    reply = _ask(backend, "action", messages, task, log)
    try:
        source = extract_code(reply)
        return source, compile_program(source, library)
    except NoCodeFound:
        raise
    except ActlangError as e:
        raise NoCodeFound(f"no usable program after re-ask: {format_error(e)}") from e


# ---------------- CRITIC ----------------

@dataclass(frozen=True)
class Verdict:
    reasoning: str
    success: bool
    critique: str

    def to_dict(self) -> dict:
        return {"critique": self.critique, "reasoning": self.reasoning, "success": self.success}


_FENCED_RE = re.compile(r"```[^\n`]*\n?(.*?)```", re.DOTALL)
_TRAILING_COMMA_RE = re.compile(r",(\s*[}\]])")


def parse_verdict(text: str) -> Verdict:
    """Accepts bare JSON, fenced JSON and JSON surrounded by prose."""
    fenced = _FENCED_RE.search(text)
    body = fenced.group(1) if fenced else text
    start, end = body.find("{"), body.rfind("}")
    if start < 0 or end < start:
        raise MalformedVerdict("reply holds no JSON object")
    body = body[start:end + 1]
    try:
        data = json.loads(body)
    except ValueError:
        try:
            data = json.loads(_TRAILING_COMMA_RE.sub(r"\1", body))
        except ValueError as e:
            raise MalformedVerdict(f"reply is not valid JSON: {e}") from e
    if not isinstance(data, dict) or set(data) != VERDICT_KEYS:
        raise MalformedVerdict(f"verdict must have exactly the keys {sorted(VERDICT_KEYS)}")
    if not isinstance(data["success"], bool):
        raise MalformedVerdict("'success' must be a boolean")
    if not isinstance(data["reasoning"], str) or not isinstance(data["critique"], str):
        raise MalformedVerdict("'reasoning' and 'critique' must be strings")
    if not data["success"] and not data["critique"].strip():
        raise MalformedVerdict("a failed verdict needs a critique")
    return Verdict(data["reasoning"], data["success"], data["critique"])


def critique(backend: LlmBackend, task: str, observation: Observation, image: Image | None = None, *,
             variant: str = "voyagervision", image_ref: str | None = None,
             log: list | None = None) -> Verdict:
    messages = [
        Message.text("system", system_prompt("critic", variant)),
        user_message(observation.render_critic(), image, image_ref),
    ]
    reply = _ask(backend, "critic", messages, task, log)
    try:
        return parse_verdict(reply)
    except MalformedVerdict as e:
        logger.warning("⚠️ Critic reply unusable (%s), asking again", e)
    messages += [
        Message.text("assistant", reply),
        Message.text("user", "Respond only with the JSON object described above, starting with '{'."),
    ]
    reply = _ask(backend, "critic", messages, task, log)
    return parse_verdict(reply)


# ---------------- ITERATION ----------------

@dataclass
class RoundRecord:
    index: int
    code: str | None = None
    execution: ExecResult | None = None
    verdict: Verdict | None = None
    error: str | None = None  # agent-level failure of this round
    images: dict[str, str | None] = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.verdict is not None and self.verdict.success

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "error": self.error,
            "execution": self.execution.to_dict() if self.execution else None,
            "images": dict(self.images),
            "index": self.index,
            "verdict": self.verdict.to_dict() if self.verdict else None,
        }


@dataclass
class IterationRecord:
    iteration: int
    task: str
    context: str = ""
    proposal: TaskProposal | None = None
    rounds: list[RoundRecord] = field(default_factory=list)
    skill_name: str | None = None
    exchanges: list[dict] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return any(r.success for r in self.rounds)

    @property
    def final_code(self) -> str | None:
        for r in reversed(self.rounds):
            if r.code is not None:
                return r.code
        return None

    def to_dict(self) -> dict:
        return {
            "context": self.context,
            "exchanges": list(self.exchanges),
            "iteration": self.iteration,
            "proposal": self.proposal.to_dict() if self.proposal else None,
            "rounds": [r.to_dict() for r in self.rounds],
            "skill_name": self.skill_name,
            "success": self.success,
            "task": self.task,
        }


def _screenshot(world: VoxelWorld, agent: AgentState, config: AgentConfig, sink: ScreenshotSink | None,
                label: str) -> tuple[Image | None, str | None]:
    if not config.images_enabled:
        return None, None
    image = capture_pov(world, agent, config.resolution)
    return image, sink(image, label) if sink else None


def _play_round(world: VoxelWorld, agent: AgentState, config: AgentConfig, backend: LlmBackend,
                record: IterationRecord, rnd: RoundRecord, observation: Observation, retrieved: list[Skill],
                library: dict, limits: ExecLimits | None, sink: ScreenshotSink | None, log: list,
                history: History) -> None:
    label = f"iter_{record.iteration:03d}_r{rnd.index}"
    image, rnd.images["action"] = _screenshot(world, agent, config, sink, f"{label}_action")
    try:
        rnd.code, program = generate_program(backend, record.task, observation, retrieved, library, image,
                                             variant=config.prompt_variant, image_ref=rnd.images["action"],
                                             log=log)
    except NoCodeFound as e:
        rnd.error = f"action: {e}"
        logger.warning("⚠️ Iteration %d round %d: %s", record.iteration, rnd.index, rnd.error)
        return

    rnd.execution = execute(program, world, agent, limits, library)
    if not rnd.execution.ok:
        logger.info("❌ Iteration %d round %d: %s", record.iteration, rnd.index, rnd.execution.render_error())

    after = build_observation(world, agent, history, task=record.task, context=record.context)
    image, rnd.images["critic"] = _screenshot(world, agent, config, sink, f"{label}_critic")
    try:
        rnd.verdict = critique(backend, record.task, after, image, variant=config.prompt_variant,
                               image_ref=rnd.images["critic"], log=log)
    except MalformedVerdict as e:
        rnd.error = f"critic: {e}"
        logger.warning("⚠️ Iteration %d round %d: %s", record.iteration, rnd.index, rnd.error)


def run_iteration(world: VoxelWorld, agent: AgentState, config: AgentConfig, backend: LlmBackend,
                  skills: SkillLibrary, history: History, *, iteration: int, task: str | None = None,
                  context: str = "", limits: ExecLimits | None = None,
                  screenshot_sink: ScreenshotSink | None = None) -> IterationRecord:
    """
    One curriculum step and up to max_retries action/critic rounds. Agent-level failures are recorded
    in the returned record; BackendUnavailable propagates.
    """
    record = IterationRecord(iteration, task or "", context)

    if task is None:
        if iteration == 1:
            record.task = FIRST_TASK
        else:
            observation = build_observation(world, agent, history)
            image, ref = _screenshot(world, agent, config, screenshot_sink, f"iter_{iteration:03d}_r0_curriculum")
            log: list = []
            try:
                record.proposal = propose_task(backend, observation, image, variant=config.prompt_variant,
                                               image_ref=ref, log=log)
            except MalformedProposal as e:
                logger.error("❌ Iteration %d: no task proposed (%s)", iteration, e)
                record.task = NO_TASK
                record.rounds.append(RoundRecord(1, error=f"curriculum: {e}"))
                history.failed_tasks.append(NO_TASK)
                history.seen_blocks.append(nearby_blocks(world, agent.pos))
                return record
            finally:
                record.exchanges.extend({**ex, "round": 0} for ex in log)
            record.task, record.context = record.proposal.task, record.proposal.context
    logger.info("🔄 Iteration %d: %s", iteration, record.task)

    retrieved = skills.retrieve(f"{record.task} {record.context}".strip(), config.skill_top_k)
    library = skills.function_table()
    last: RoundRecord | None = None

    for k in range(1, config.max_retries + 1):
        observation = build_observation(world, agent, history, task=record.task, context=record.context)
        if last is not None:
            observation.last_code = last.code
            observation.last_error = last.error or (last.execution.render_error() if last.execution else None)
            observation.chat_log = list(last.execution.chat_log) if last.execution else []
            observation.critique = last.verdict.critique if last.verdict else None
        rnd = RoundRecord(k)
        record.rounds.append(rnd)
        log = []
        try:
            _play_round(world, agent, config, backend, record, rnd, observation, retrieved, library, limits,
                        screenshot_sink, log, history)
        finally:
            record.exchanges.extend({**ex, "round": k} for ex in log)
        if rnd.success:
            break
        last = rnd

    if record.success:
        try:
            record.skill_name = skills.add(record.task, record.final_code, iteration).name
        except SkillError as e:
            logger.warning("⚠️ Skill for %r not stored: %s", record.task, e)
        history.completed_tasks.append(record.task)
        logger.info("✅ Iteration %d succeeded after %d round(s)", iteration, len(record.rounds))
    else:
        history.failed_tasks.append(record.task)
        logger.info("❌ Iteration %d failed after %d round(s)", iteration, len(record.rounds))
    history.seen_blocks.append(nearby_blocks(world, agent.pos))
    return record
