# skills.py
"""Skill library: successful programs, trigram embeddings, cosine retrieval, JSON persistence."""
import heapq
import json
import logging
import re
from dataclasses import dataclass, field

import numpy as np

from helpers.actlang import ActlangError, Call, FnDef, If, Program, Repeat, Str, compile_program
from helpers.llm_backend import post_with_retries

logger = logging.getLogger(__name__)

EMBED_DIM = 512
FNV_OFFSET = 0x811C9DC5
FNV_PRIME = 0x01000193
SKILLS_FORMAT_VERSION = 1
DEFAULT_TOP_K = 5
NORM_TOLERANCE = 1e-9


class SkillError(Exception):
    pass


class EmptyText(SkillError):
    def __init__(self):
        super().__init__("Cannot embed empty text")


class InvalidSource(SkillError):
    pass


class CorruptFile(SkillError):
    def __init__(self, message: str, index: int | None = None):
        self.index = index
        where = f" (entry {index})" if index is not None else ""
        super().__init__(f"{message}{where}")


# ---------------- EMBEDDING ----------------

def fnv1a_32(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & 0xFFFFFFFF
    return h


def trigrams(text: str) -> list[str]:
    text = text.lower()
    if not text:
        return []
    if len(text) < 3:
        return [text]
    return [text[i:i + 3] for i in range(len(text) - 2)]


class TrigramEmbedder:
    """Hashed character-trigram counts, L2-normalised."""
    identity = f"trigram-fnv1a-{EMBED_DIM}"

    def embed(self, text: str) -> np.ndarray:
        grams = trigrams(text)
        if not grams:
            raise EmptyText()
        vec = np.zeros(EMBED_DIM)
        for g in grams:
            vec[fnv1a_32(g.encode("utf-8")) % EMBED_DIM] += 1.0
        return vec / np.linalg.norm(vec)


class HttpEmbedder:
    """OpenAI-compatible /embeddings endpoint behind the same contract."""

    def __init__(self, base_url: str, model: str, api_key: str | None = None, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.identity = f"http:{model}"

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise EmptyText()
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        data = post_with_retries(f"{self.base_url}/embeddings", {"model": self.model, "input": text}, headers,
                                 timeout=self.timeout)
        vec = np.asarray(data["data"][0]["embedding"], dtype=np.float64)
        return vec / np.linalg.norm(vec)


DEFAULT_EMBEDDER = TrigramEmbedder()


def embed(text: str, embedder=DEFAULT_EMBEDDER) -> np.ndarray:
    return embedder.embed(text)


def embed_or_zero(text: str, embedder=DEFAULT_EMBEDDER) -> np.ndarray:
    """Query-side embedding: empty text maps to the zero vector, which scores 0 against everything."""
    try:
        return embedder.embed(text)
    except EmptyText:
        return np.zeros(EMBED_DIM)


# ---------------- SKILLS ----------------

def _first_chat(program: Program) -> str | None:
    found = []

    def walk(body):
        for stmt in body:
            if isinstance(stmt, Call) and stmt.name == "chat" and stmt.args and isinstance(stmt.args[0], Str):
                found.append((stmt.loc, stmt.args[0].value))
            elif isinstance(stmt, Repeat):
                walk(stmt.body)
            elif isinstance(stmt, If):
                walk(stmt.then)
                walk(stmt.orelse)

    for fn in program.functions:
        walk(fn.body)
    walk(program.body)
    return min(found)[1] if found else None


def _slug(task: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", task.lower()).strip("_") or "skill"


@dataclass
class Skill:
    name: str
    description: str
    source: str
    embedding: np.ndarray
    created_at_iteration: int
    task: str = ""
    functions: tuple[FnDef, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "created_at_iteration": self.created_at_iteration,
            "description": self.description,
            "embedding": [float(v) for v in self.embedding],
            "name": self.name,
            "source": self.source,
            "task": self.task,
        }

    def __eq__(self, other) -> bool:
        return (isinstance(other, Skill)
                and (self.name, self.description, self.source, self.created_at_iteration, self.task)
                == (other.name, other.description, other.source, other.created_at_iteration, other.task)
                and np.array_equal(self.embedding, other.embedding))


class SkillLibrary:
    def __init__(self, embedder=DEFAULT_EMBEDDER):
        self.skills: list[Skill] = []
        self.embedder = embedder

    def __len__(self) -> int:
        return len(self.skills)

    def __eq__(self, other) -> bool:
        return isinstance(other, SkillLibrary) and self.skills == other.skills

    def names(self) -> list[str]:
        return [s.name for s in self.skills]

    def function_table(self, skills: list[Skill] | None = None) -> dict[str, FnDef]:
        """Functions callable from new programs; later skills shadow earlier ones of the same name."""
        table: dict[str, FnDef] = {}
        for skill in self.skills if skills is None else skills:
            for fn in skill.functions:
                table[fn.name] = fn
        return table

    def _unique_name(self, base: str) -> str:
        taken = set(self.names())
        if base not in taken:
            return base
        n = 2
        while f"{base}-{n}" in taken:
            n += 1
        return f"{base}-{n}"

    def add(self, task: str, source: str, iteration: int) -> Skill:
        """Store a successful program. Raises InvalidSource if it does not parse or check."""
        try:
            program = compile_program(source, self.function_table())
        except ActlangError as e:
            raise InvalidSource(f"Skill for {task!r} does not compile: {e}") from e
        base = program.functions[-1].name if program.functions else _slug(task)
        chat = _first_chat(program)
        description = f"{task} {chat}" if chat else task
        skill = Skill(self._unique_name(base), description, source, self.embedder.embed(description),
                      iteration, task, program.functions)
        self.skills.append(skill)
        logger.info("✅ Stored skill %s (%d in library)", skill.name, len(self.skills))
        return skill

    def retrieve(self, query: str, k: int = DEFAULT_TOP_K) -> list[Skill]:
        """Top-k by cosine similarity, descending; ties keep insertion order."""
        if k < 0:
            raise ValueError("k must be non-negative")
        if k == 0 or not self.skills:
            return []
        q = embed_or_zero(query, self.embedder)
        scores = [float(np.dot(q, s.embedding)) for s in self.skills]
        best = heapq.nsmallest(k, range(len(scores)), key=lambda i: (-scores[i], i))
        return [self.skills[i] for i in best]

    # ---------------- persistence ----------------

    def to_dict(self) -> dict:
        return {
            "embedder": self.embedder.identity,
            "format_version": SKILLS_FORMAT_VERSION,
            "skills": [s.to_dict() for s in self.skills],
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, sort_keys=True, indent=1)
        logger.info("✅ Saved %d skills to %s", len(self.skills), path)

    @classmethod
    def from_dict(cls, data: dict, embedder=DEFAULT_EMBEDDER) -> "SkillLibrary":
        if data.get("format_version") != SKILLS_FORMAT_VERSION:
            raise CorruptFile(f"Unsupported skill library version {data.get('format_version')!r}")
        lib = cls(embedder)
        for index, entry in enumerate(data.get("skills", [])):
            try:
                program = compile_program(entry["source"], lib.function_table())
                vec = np.asarray(entry["embedding"], dtype=np.float64)
                if vec.shape != (EMBED_DIM,) and embedder.identity == TrigramEmbedder.identity:
                    raise CorruptFile("embedding has the wrong dimension", index)
                if abs(float(np.linalg.norm(vec)) - 1.0) > NORM_TOLERANCE:
                    raise CorruptFile("embedding is not unit length", index)
                lib.skills.append(Skill(
                    entry["name"], entry["description"], entry["source"], vec,
                    int(entry["created_at_iteration"]), entry.get("task", ""), program.functions,
                ))
            except CorruptFile:
                raise
            except ActlangError as e:
                raise CorruptFile(f"Skill source does not compile: {e}", index) from e
            except (KeyError, TypeError, ValueError) as e:
                raise CorruptFile(f"Malformed skill entry: {e}", index) from e
        return lib

    @classmethod
    def load(cls, path: str, embedder=DEFAULT_EMBEDDER) -> "SkillLibrary":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, ValueError) as e:
            raise CorruptFile(f"Failed to read {path}: {e}") from e
        return cls.from_dict(data, embedder)
