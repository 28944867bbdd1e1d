"""
Bridge Lab Settings

Environment-driven settings (worker threads, block size, log level, progress
bars) loaded from the process environment and an optional .env file, and the
flat run configuration shared by the command-line flags and JSON config files.
"""

import json
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .logic.constants import DEFAULT_BLOCK_SIZE, DEFAULT_GATE, DEFAULT_REGION_GRID, DEFAULT_REPS, DEFAULT_SEED, DEFAULT_STEPS
from .logic.errors import DomainError

load_dotenv()


class Settings(BaseModel):
    """Process-wide settings from BRIDGELAB_* environment variables."""
    threads: int = Field(default=1, ge=1)
    block_size: int = Field(default=DEFAULT_BLOCK_SIZE, ge=1)
    log_level: str = "INFO"
    progress: bool = False

    @field_validator("log_level")
    @classmethod
    def _upper(cls, v: str) -> str:
        return v.upper()


def _env_flag(name: str) -> bool:
    return os.getenv(name, "").strip().lower() in ("1", "true", "yes", "on")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    threads = os.getenv("BRIDGELAB_THREADS")
    return Settings(
        threads=max(1, int(threads)) if threads else max(1, os.cpu_count() or 1),
        block_size=int(os.getenv("BRIDGELAB_BLOCK_SIZE", DEFAULT_BLOCK_SIZE)),
        log_level=os.getenv("BRIDGELAB_LOG_LEVEL", "INFO"),
        progress=_env_flag("BRIDGELAB_PROGRESS"),
    )


class RunConfig(BaseModel):
    """Flat run configuration; keys mirror the command-line flags."""
    model_config = ConfigDict(extra="forbid")

    kind: Optional[str] = None
    process: str = "wiener"
    q: Optional[float] = None
    sigma: float = 1.0
    a: float = 0.0
    b: float = 0.0
    d: Optional[float] = None
    T: float = 1.0
    steps: int = DEFAULT_STEPS
    reps: int = DEFAULT_REPS
    seed: int = DEFAULT_SEED
    out: Optional[str] = None
    suite: Optional[str] = None
    grid: int = DEFAULT_REGION_GRID
    gate: float = DEFAULT_GATE


def load_run_config(path: Path) -> Dict[str, Any]:
    """Validated key/value pairs of a JSON config file, keyed like the CLI parameters."""
    with Path(path).open(encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise DomainError(f"config file {path} must hold a JSON object")
    config = RunConfig(**raw)
    return config.model_dump(include=set(raw))
