"""Finite probability mass functions on positive-integer slot counts.

Service times (coupled servers) and inter-dump times (decoupled servers) are both
described by a :class:`FinitePmf`. Only durations with positive mass are stored.
"""

import json
import logging
import math
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .errors import (
    DuplicateDuration,
    InvalidTau,
    NegativeProbability,
    NonPositiveDuration,
    ParameterError,
    TailTooHeavy,
    UnnormalizedMass,
)
from .settings import get_settings

logger = logging.getLogger(__name__)

Entry = Tuple[int, float]


def _check_entries(entries: Sequence[Entry]) -> Tuple[Entry, ...]:
    """Validate raw (duration, probability) pairs and return them sorted, zero masses dropped."""
    if len(entries) == 0:
        raise UnnormalizedMass("entries", "A pmf needs at least one entry")

    seen = set()
    for duration, prob in entries:
        if isinstance(duration, bool) or int(duration) != duration or duration < 1:
            raise NonPositiveDuration("entries", f"Duration {duration} must be a positive integer")
        if not math.isfinite(prob) or prob < 0:
            raise NegativeProbability("entries", f"Probability {prob} at duration {duration} must be >= 0")
        if duration in seen:
            raise DuplicateDuration("entries", f"Duration {duration} appears more than once")
        seen.add(duration)

    total = math.fsum(prob for _, prob in entries)
    tolerance = get_settings().mass_tolerance
    if abs(total - 1.0) > tolerance:
        raise UnnormalizedMass("entries", f"Probabilities sum to {total!r}, expected 1 within {tolerance}")

    return tuple(sorted((int(d), float(p)) for d, p in entries if p > 0))


class FinitePmf(BaseModel):
    """PMF with finite support on {1, 2, ...}, entries sorted by duration."""

    model_config = ConfigDict(frozen=True)

    entries: Tuple[Entry, ...]

    @model_validator(mode="after")
    def validate_entries(self) -> "FinitePmf":
        normalized = _check_entries(self.entries)
        if normalized != self.entries:
            raise ValueError("entries must be sorted by duration and carry positive mass only")
        return self

    @property
    def durations(self) -> np.ndarray:
        return np.array([d for d, _ in self.entries], dtype=np.int64)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.entries], dtype=float)

    @property
    def s_min(self) -> int:
        return self.entries[0][0]

    @property
    def d_max(self) -> int:
        return self.entries[-1][0]

    def prob(self, duration: int) -> float:
        for d, p in self.entries:
            if d == duration:
                return p
        return 0.0

    def __len__(self) -> int:
        return len(self.entries)


class Moments(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean: float
    second_moment: float
    variance: float


def make_pmf(entries: Iterable[Entry]) -> FinitePmf:
    normalized = _check_entries(list(entries))
    return FinitePmf(entries=normalized)


def pmf_moments(pmf: FinitePmf) -> Moments:
    mean = math.fsum(d * p for d, p in pmf.entries)
    second = math.fsum(d * d * p for d, p in pmf.entries)
    return Moments(mean=mean, second_moment=second, variance=second - mean * mean)


def is_smp(pmf: FinitePmf) -> Tuple[bool, int]:
    """Shortest-most-probable check: the minimum duration carries the largest mass."""
    head = pmf.entries[0][1]
    return all(head >= p for _, p in pmf.entries), pmf.s_min


def tail_probability(pmf: FinitePmf, n: int) -> float:
    """P(D > n)."""
    return math.fsum(p for d, p in pmf.entries if d > n)


def pgf(pmf: FinitePmf, z: float) -> float:
    """E[z^{-D}]."""
    return float(np.dot(pmf.probabilities, np.exp(-pmf.durations * math.log(z))))


def geometric_pmf(mu: float, d_max: Optional[int] = None, *, allow_heavy_tail: bool = False) -> FinitePmf:
    """Geometric(mu) on {1, 2, ...} truncated at d_max, the tail folded onto d_max.

    Folding keeps g(1) = mu exact. Without an explicit d_max the shortest support
    meeting the tail tolerance is used.
    """
    if not 0 < mu <= 1:
        raise ParameterError("mu", f"Geometric parameter {mu} must lie in (0, 1]")

    settings = get_settings()
    if mu == 1:
        return make_pmf([(1, 1.0)])

    if d_max is None:
        needed = math.ceil(math.log(settings.tail_tolerance) / math.log1p(-mu))
        d_max = max(1, needed)
        if d_max > settings.d_max:
            if not allow_heavy_tail:
                raise TailTooHeavy("mu", f"Truncation needs d_max={d_max}, above the cap {settings.d_max}")
            d_max = settings.d_max

    if d_max < 1:
        raise NonPositiveDuration("d_max", f"d_max={d_max} must be >= 1")

    tail = (1 - mu) ** d_max
    if tail > settings.tail_tolerance and not allow_heavy_tail:
        raise TailTooHeavy("mu", f"Tail mass {tail:.3e} beyond d_max={d_max} exceeds {settings.tail_tolerance}")
    if tail > settings.tail_tolerance:
        logger.warning("Geometric(mu=%s) truncated at d_max=%s folds tail mass %.3e", mu, d_max, tail)

    durations = np.arange(1, d_max + 1)
    probs = mu * np.power(1 - mu, durations - 1)
    probs[-1] += tail
    return make_pmf((int(d), float(p)) for d, p in zip(durations, probs) if p > 0)


def uniform_pmf(k: int) -> FinitePmf:
    if k < 1:
        raise NonPositiveDuration("k", f"Uniform support size {k} must be >= 1")
    return make_pmf((d, 1.0 / k) for d in range(1, k + 1))


def deterministic_pmf(tau: int) -> FinitePmf:
    return make_pmf([(tau, 1.0)])


def shift_pmf(pmf: FinitePmf, offset: int) -> FinitePmf:
    if offset < 0 or pmf.s_min + offset < 1:
        raise NonPositiveDuration("offset", f"Shift by {offset} leaves non-positive durations")
    return FinitePmf(entries=tuple((d + offset, p) for d, p in pmf.entries))


def two_point_pmf(tau: float) -> FinitePmf:
    """Pmf on floor(tau), ceil(tau) with mean tau; a point mass when tau is integral."""
    if not math.isfinite(tau) or tau < 1:
        raise InvalidTau("tau", f"Mean period {tau} must be >= 1")
    nearest = round(tau)
    if abs(tau - nearest) <= get_settings().integer_tolerance:
        return deterministic_pmf(int(nearest))
    i = math.floor(tau)
    p_j = tau - i
    return make_pmf([(i, 1.0 - p_j), (i + 1, p_j)])


def pmf_to_json(pmf: FinitePmf) -> str:
    return json.dumps({"entries": [[d, p] for d, p in pmf.entries]})


def pmf_from_json(text: str) -> FinitePmf:
    data = json.loads(text)
    return make_pmf((int(d), float(p)) for d, p in data["entries"])
