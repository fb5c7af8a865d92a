# config.py
"""Run configuration: pydantic models, config-file loading, environment defaults and CLI overrides."""
import json
import logging
import os

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

load_dotenv()

logger = logging.getLogger(__name__)

API_KEY_ENV = "LLM_API_KEY"
LOG_LEVEL_ENV = "VOYAGER_LOG_LEVEL"
OUT_DIR_ENV = "VOYAGER_OUT_DIR"
DEFAULT_OUT_DIR = "runs"
DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_MODEL = "gpt-4o"

EXPERIMENTS = ("unit_tests", "resources", "building")
PROMPT_VARIANTS = ("voyager", "voyager_gpt4o", "voyagervision")
BACKEND_KINDS = ("http", "scripted")
WORLD_KINDS = ("flat", "regular")
TEMPLATE_NAMES = ("pole", "wall", "stairs", "pyramid", "portal")
UNIT_TEST_SEEDS = {"flat": [1, 2, 3, 4, 5], "regular": [7, 8, 9, 10, 11]}

# experiment -> default iterations per trial
DEFAULT_MAX_ITERATIONS = {"unit_tests": 1, "resources": 30, "building": 50}


class ConfigError(Exception):
    """Invalid configuration; reported as a usage error."""


class BackendConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str = "scripted"
    base_url: str = DEFAULT_BASE_URL
    model: str = DEFAULT_MODEL
    temperature: float = Field(default=0.0, ge=0.0, le=2.0)
    script_path: str | None = None
    timeout: float = Field(default=60.0, gt=0)
    max_retries: int = Field(default=3, ge=1)
    api_key_env: str = API_KEY_ENV

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, v: str) -> str:
        if v not in BACKEND_KINDS:
            raise ValueError(f"backend kind must be one of {BACKEND_KINDS}")
        return v


class AgentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_retries: int = Field(default=3, ge=1)
    skill_top_k: int = Field(default=5, ge=0)
    dirt_scaffold_target: int = Field(default=16, ge=0)
    prompt_variant: str = "voyagervision"
    send_images: bool | None = None  # None: only the voyagervision prompts get screenshots
    resolution: tuple[int, int] = (320, 240)

    @field_validator("prompt_variant")
    @classmethod
    def _known_variant(cls, v: str) -> str:
        if v not in PROMPT_VARIANTS:
            raise ValueError(f"prompt_variant must be one of {PROMPT_VARIANTS}")
        return v

    @property
    def images_enabled(self) -> bool:
        return self.prompt_variant == "voyagervision" if self.send_images is None else self.send_images


class HarnessConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    experiment: str = "unit_tests"
    backend: BackendConfig = Field(default_factory=BackendConfig)
    prompt_variant: str = "voyagervision"
    send_images: bool | None = None
    seeds: list[int] | None = None
    world_kind: str | None = None  # None: both kinds for unit tests, regular for resources, flat for building
    templates: list[str] = Field(default_factory=lambda: list(TEMPLATE_NAMES))
    max_iterations: int | None = Field(default=None, ge=1)
    max_retries: int = Field(default=3, ge=1)
    skill_top_k: int = Field(default=5, ge=0)
    dirt_scaffold_target: int = Field(default=16, ge=0)
    parallelism: int = Field(default=1, ge=1)
    out_dir: str | None = None
    resolution: tuple[int, int] = (320, 240)
    skills_path: str | None = None

    @field_validator("experiment")
    @classmethod
    def _known_experiment(cls, v: str) -> str:
        if v not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        return v

    @field_validator("prompt_variant")
    @classmethod
    def _known_variant(cls, v: str) -> str:
        if v not in PROMPT_VARIANTS:
            raise ValueError(f"prompt_variant must be one of {PROMPT_VARIANTS}")
        return v

    @field_validator("world_kind")
    @classmethod
    def _known_world(cls, v: str | None) -> str | None:
        if v is not None and v not in WORLD_KINDS:
            raise ValueError(f"world_kind must be one of {WORLD_KINDS}")
        return v

    @field_validator("templates")
    @classmethod
    def _known_templates(cls, v: list[str]) -> list[str]:
        unknown = [t for t in v if t not in TEMPLATE_NAMES]
        if unknown:
            raise ValueError(f"unknown templates {unknown}; expected a subset of {TEMPLATE_NAMES}")
        return v

    @field_validator("resolution")
    @classmethod
    def _min_resolution(cls, v: tuple[int, int]) -> tuple[int, int]:
        if v[0] < 16 or v[1] < 16:
            raise ValueError("resolution must be at least 16x16")
        return v

    def agent_config(self) -> AgentConfig:
        return AgentConfig(
            max_retries=self.max_retries,
            skill_top_k=self.skill_top_k,
            dirt_scaffold_target=self.dirt_scaffold_target,
            prompt_variant=self.prompt_variant,
            send_images=self.send_images,
            resolution=self.resolution,
        )

    def iterations(self) -> int:
        return self.max_iterations or DEFAULT_MAX_ITERATIONS[self.experiment]

    def world_kinds(self) -> list[str]:
        if self.world_kind:
            return [self.world_kind]
        return {"unit_tests": ["flat", "regular"], "resources": ["regular"], "building": ["flat"]}[self.experiment]

    def seeds_for(self, kind: str) -> list[int]:
        if self.seeds:
            return list(self.seeds)
        if self.experiment == "unit_tests":
            return list(UNIT_TEST_SEEDS[kind])
        return [1, 2, 3]

    def output_dir(self) -> str:
        return self.out_dir or os.getenv(OUT_DIR_ENV) or DEFAULT_OUT_DIR

    def api_key(self) -> str | None:
        return os.getenv(self.backend.api_key_env)

    def canonical_json(self) -> str:
        data = self.model_dump(mode="json")
        data["out_dir"] = self.output_dir()
        return json.dumps(data, sort_keys=True, indent=2)


def _merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict):
            current = out.get(key)
            out[key] = _merge(current if isinstance(current, dict) else {}, value)
        else:
            out[key] = value
    return out


def load_config(path: str | None = None, overrides: dict | None = None) -> HarnessConfig:
    """Built-in defaults < config file < CLI overrides (None values are ignored). Raises ConfigError."""
    data: dict = {}
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, ValueError) as e:
            raise ConfigError(f"Failed to read config {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config {path} must hold a JSON object")
    data = _merge(data, overrides or {})
    try:
        return HarnessConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def log_level() -> str:
    return os.getenv(LOG_LEVEL_ENV, "INFO").upper()
