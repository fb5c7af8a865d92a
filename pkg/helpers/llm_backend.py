# llm_backend.py
"""Chat-model backends: OpenAI-compatible HTTP endpoint and a scripted replay backend for offline runs."""
import base64
import json
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Protocol

import requests

from helpers.perception import Image, encode_png

logger = logging.getLogger(__name__)

MAX_RETRIES = 3
INITIAL_DELAY = 1  # seconds, doubled after every failed attempt
REQUEST_TIMEOUT = 60  # seconds per request
SCRIPT_FORMAT_VERSION = 1
ROLES = ("system", "user", "assistant")
AGENT_ROLES = ("curriculum", "action", "critic")


class AgentError(Exception):
    """Base class for agent-loop failures."""


class BackendUnavailable(AgentError):
    """The model could not be reached after every retry."""


class ScriptError(AgentError):
    """Unreadable or malformed scripted-backend file."""


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    image: Image
    ref: str | None = None  # screenshot path recorded in transcripts


@dataclass
class Message:
    role: str
    parts: list = field(default_factory=list)

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"Unknown message role {self.role!r}")
        if not self.parts:
            raise ValueError("A message needs at least one part")
        if self.role != "user" and any(isinstance(p, ImagePart) for p in self.parts):
            raise ValueError("Images may only appear in user messages")

    @classmethod
    def text(cls, role: str, text: str) -> "Message":
        return cls(role, [TextPart(text)])

    def text_content(self) -> str:
        return "\n".join(p.text for p in self.parts if isinstance(p, TextPart))

    def images(self) -> list[ImagePart]:
        return [p for p in self.parts if isinstance(p, ImagePart)]

    def to_record(self) -> dict:
        """Transcript form: text inline, images by reference."""
        parts = []
        for p in self.parts:
            if isinstance(p, TextPart):
                parts.append({"text": p.text})
            else:
                parts.append({"image": p.ref or f"<{p.image.width}x{p.image.height} image>"})
        return {"parts": parts, "role": self.role}


class LlmBackend(Protocol):
    identity: str

    def complete(self, messages: list[Message], agent_role: str, task: str | None = None) -> str:
        ...


# ---------------- HTTP ----------------

def post_with_retries(url: str, payload: dict, headers: dict, *, timeout: float = REQUEST_TIMEOUT,
                      max_retries: int = MAX_RETRIES, initial_delay: float = INITIAL_DELAY) -> dict:
    """POST JSON with exponential backoff. Raises BackendUnavailable once every attempt has failed."""
    delay = initial_delay
    for attempt in range(max_retries):
        try:
            response = requests.post(url, json=payload, headers=headers, timeout=timeout)
            response.raise_for_status()
            return response.json()
        except requests.exceptions.Timeout:
            logger.warning("⏳ Timeout (attempt %d): %s did not answer within %ss", attempt + 1, url, timeout)
        except (requests.exceptions.RequestException, ValueError) as e:
            logger.warning("❌ Request to %s failed (attempt %d): %s", url, attempt + 1, e)
        if attempt + 1 < max_retries:
            time.sleep(delay)
            delay *= 2
    logger.error("🚨 Max retries reached for %s", url)
    raise BackendUnavailable(f"{url} unreachable after {max_retries} attempts")


def image_data_url(image: Image) -> str:
    return "data:image/png;base64," + base64.b64encode(encode_png(image)).decode("ascii")


class HttpBackend:
    """OpenAI-compatible /chat/completions client."""

    def __init__(self, base_url: str, model: str, *, api_key: str | None = None, temperature: float = 0.0,
                 timeout: float = REQUEST_TIMEOUT, max_retries: int = MAX_RETRIES,
                 initial_delay: float = INITIAL_DELAY):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.temperature = temperature
        self.timeout = timeout
        self.max_retries = max_retries
        self.initial_delay = initial_delay
        self.identity = f"http:{model}"

    def payload(self, messages: list[Message]) -> dict:
        wire = []
        for m in messages:
            content = []
            for p in m.parts:
                if isinstance(p, TextPart):
                    content.append({"type": "text", "text": p.text})
                else:
                    content.append({"type": "image_url", "image_url": {"url": image_data_url(p.image)}})
            wire.append({"role": m.role, "content": content})
        return {"model": self.model, "messages": wire, "temperature": self.temperature}

    def complete(self, messages: list[Message], agent_role: str, task: str | None = None) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        data = post_with_retries(
            f"{self.base_url}/chat/completions", self.payload(messages), headers,
            timeout=self.timeout, max_retries=self.max_retries, initial_delay=self.initial_delay,
        )
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise BackendUnavailable(f"Malformed completion payload: {e}") from e


# ---------------- SCRIPTED ----------------

def code_reply(source: str) -> str:
    """Wrap a program as an Explain/Plan/Code reply."""
    if not source.endswith("\n"):
        source += "\n"
    return f"Explain: None\nPlan: Run the stored program.\nCode:\n```\n{source}```\n"


class ScriptedBackend:
    """
    Replays canned replies per agent role. File format:
      {"format_version": 1, "roles": {role: [reply, ...]}, "by_task": {task: {role: [reply, ...]}}}
    A reply is a string or {"code_file": path relative to the script}. Lists clamp to their last entry.
    """

    def __init__(self, data: dict, base_dir: str = ".", identity: str = "scripted"):
        if data.get("format_version") != SCRIPT_FORMAT_VERSION:
            raise ScriptError(f"Unsupported script version {data.get('format_version')!r}")
        self.roles: dict[str, list] = data.get("roles", {})
        self.by_task: dict[str, dict[str, list]] = data.get("by_task", {})
        self.base_dir = base_dir
        self.identity = identity
        self.counters: dict[tuple[str | None, str], int] = {}
        self.calls: list[tuple[str, str | None]] = []

    @classmethod
    def from_file(cls, path: str) -> "ScriptedBackend":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, ValueError) as e:
            raise ScriptError(f"Failed to read script {path}: {e}") from e
        return cls(data, os.path.dirname(os.path.abspath(path)), f"scripted:{os.path.basename(path)}")

    def reset(self) -> None:
        self.counters.clear()
        self.calls.clear()

    def _resolve(self, entry) -> str:
        if isinstance(entry, str):
            return entry
        if isinstance(entry, dict) and "code_file" in entry:
            path = os.path.join(self.base_dir, entry["code_file"])
            try:
                with open(path, "r", encoding="utf-8") as f:
                    return code_reply(f.read())
            except OSError as e:
                raise ScriptError(f"Missing code file {path}: {e}") from e
        raise ScriptError(f"Unsupported script entry {entry!r}")

    def complete(self, messages: list[Message], agent_role: str, task: str | None = None) -> str:
        key: str | None = None
        replies = None
        if task is not None and agent_role in self.by_task.get(task, {}):
            key, replies = task, self.by_task[task][agent_role]
        elif agent_role in self.roles:
            replies = self.roles[agent_role]
        if not replies:
            raise BackendUnavailable(f"Script has no {agent_role} replies for task {task!r}")
        n = self.counters.get((key, agent_role), 0)
        self.counters[(key, agent_role)] = n + 1
        self.calls.append((agent_role, task))
        return self._resolve(replies[min(n, len(replies) - 1)])
