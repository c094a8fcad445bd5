import json
import logging
from pathlib import Path
from typing import Union

from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)


class LabSettings(BaseModel):
    """Numerical tolerances and run defaults shared by every module."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    mass_tolerance: float = Field(1e-9, gt=0)
    tail_tolerance: float = Field(1e-12, gt=0)
    d_max: int = Field(10_000, ge=1)
    integer_tolerance: float = Field(1e-9, gt=0)
    bisection_max_iter: int = Field(200, ge=1)
    bisection_residual: float = Field(1e-12, gt=0)
    search_tolerance: float = Field(1e-6, gt=0)
    oracle_max_horizon: int = Field(14, ge=1)
    warmup: int = Field(10_000, ge=0)
    batches: int = Field(30, ge=2)
    confidence: float = Field(0.95, gt=0, lt=1)
    workers: int = Field(1, ge=1)


_active = LabSettings()


def get_settings() -> LabSettings:
    return _active


def use_settings(settings: LabSettings) -> LabSettings:
    """Install `settings` as the active settings and return the previous ones."""
    global _active
    previous = _active
    _active = settings
    logger.debug("Active settings: %s", settings)
    return previous


def load_settings(path: Union[str, Path]) -> LabSettings:
    with open(path, "r") as f:
        data = json.load(f)
    settings = LabSettings.model_validate(data)
    logger.info("Settings loaded from %s", path)
    return settings
