# src/config.py
import os
import logging
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError as PydanticValidationError

from src.errors import ConfigError
from src.utils import load_config

load_dotenv()

logger = logging.getLogger(__name__)

# --------- Env & defaults ----------
CONFIG_PATH = Path(os.getenv("CAUSAL_FORGE_CONFIG", "config/config.yaml"))
OUTPUT_DIR = Path(os.getenv("CAUSAL_FORGE_OUTPUT_DIR", "outputs"))
LOG_LEVEL = os.getenv("CAUSAL_FORGE_LOG_LEVEL", "INFO").upper()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")


THREADS = max(1, _env_int("CAUSAL_FORGE_THREADS", 1))


# --------- Engine settings (config/config.yaml) ----------
class MultiwaySettings(BaseModel):
    max_states: int = Field(200_000, ge=1)
    join_state_budget: int = Field(20_000, ge=1)


class InvarianceSettings(BaseModel):
    max_event_sets: int = Field(100_000, ge=1)


class TransportSettings(BaseModel):
    float_threshold: int = Field(64, ge=1)
    laziness: float = Field(0.0, ge=0.0, lt=1.0)


class BoostSettings(BaseModel):
    tie_tolerance: float = Field(1e-9, gt=0.0)


class DimensionSettings(BaseModel):
    spatial_offset: float = 0.0
    causal_offset: float = 0.0
    min_radius: int = Field(2, ge=1)
    max_nfev: int = Field(200, ge=1)
    gtol: float = Field(1e-10, gt=0.0)


class EngineSettings(BaseModel):
    random_seed: int = 0
    threads: int = 1
    output_dir: str = "outputs"
    multiway: MultiwaySettings = MultiwaySettings()
    invariance: InvarianceSettings = InvarianceSettings()
    transport: TransportSettings = TransportSettings()
    boost: BoostSettings = BoostSettings()
    dimension: DimensionSettings = DimensionSettings()


def _read_yaml(path: Path) -> Dict[str, Any]:
    if not path.exists():
        logger.warning(f"Config file {path} not found, using built-in defaults")
        return {}
    data = load_config(str(path))
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping at top level")
    return data


def build_settings(path: Optional[Path] = None) -> EngineSettings:
    raw = _read_yaml(Path(path) if path else CONFIG_PATH)
    paths = raw.pop("paths", {}) or {}
    raw.setdefault("output_dir", os.getenv("CAUSAL_FORGE_OUTPUT_DIR") or paths.get("output_dir", "outputs"))
    raw["threads"] = THREADS
    try:
        return EngineSettings(**raw)
    except PydanticValidationError as e:
        raise ConfigError(f"Invalid engine config: {e}")


@lru_cache(maxsize=1)
def get_settings() -> EngineSettings:
    """Process-wide settings, read once."""
    settings = build_settings()
    logger.debug(f"Engine settings loaded from {CONFIG_PATH}: threads={settings.threads}")
    return settings
