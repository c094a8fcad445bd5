"""Slot-accurate simulation of source -> server -> monitor.

Per slot: an arrival (timestamp t-1) enters, the server acts, a transmission
delivers. Every run draws from one seeded generator, so a config fully
determines its statistics.
"""

import logging
import multiprocessing
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from .dist import FinitePmf
from .errors import InvalidConfig
from .policies import FcfsPolicy, LcfsPolicy, Policy, RadPolicy
from .settings import get_settings
from .sources import BernoulliSource, MarkovSource, SourceModel

logger = logging.getLogger(__name__)


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    policy: Optional[Policy] = None
    source: SourceModel
    horizon: int = Field(gt=0)
    warmup: Optional[int] = Field(None, ge=0)
    seed: int = Field(0, ge=0, lt=2**64)
    batches: Optional[int] = Field(None, ge=2)
    fake_updates: bool = False


class SimStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean_age: float = Field(ge=1)
    ci_half_width: float = Field(ge=0)
    delivered: int = Field(ge=0)
    output_rate: float = Field(ge=0, le=1)
    source_rate: float = Field(ge=0, le=1)
    age_pmf: Optional[Dict[int, float]] = None
    backlog_trend: Optional[float] = None


class _Deliveries(NamedTuple):
    """Delivery slots with the timestamps they carry, plus server counters."""

    slots: np.ndarray
    stamps: np.ndarray
    delivered: int
    transmissions: int
    backlog_trend: Optional[float] = None


def _resolve(cfg: SimConfig) -> Tuple[int, int]:
    settings = get_settings()
    warmup = settings.warmup if cfg.warmup is None else cfg.warmup
    batches = settings.batches if cfg.batches is None else cfg.batches
    if warmup >= cfg.horizon:
        raise InvalidConfig("warmup", f"Warmup {warmup} must be shorter than the horizon {cfg.horizon}")
    if cfg.horizon - warmup < batches:
        raise InvalidConfig("batches", f"{cfg.horizon - warmup} measured slots cannot fill {batches} batches")
    return warmup, batches


def _arrival_slots(source: SourceModel, horizon: int, rng: np.random.Generator) -> np.ndarray:
    """Sorted slots 1..horizon in which an update arrives."""
    if isinstance(source, BernoulliSource):
        return np.flatnonzero(rng.random(horizon) < source.lam) + 1
    return _markov_active_slots(source, horizon, rng)


def _markov_active_slots(source: MarkovSource, horizon: int, rng: np.random.Generator) -> np.ndarray:
    # alternating geometric run lengths; the first run starts from the stationary law
    active = bool(rng.random() < source.effective_rate)
    mean_cycle = 1 / source.p01 + 1 / source.p10
    runs: List[np.ndarray] = []
    states: List[np.ndarray] = []
    covered = 0
    while covered < horizon:
        pairs = int((horizon - covered) / mean_cycle) + 16
        first = rng.geometric(source.p10 if active else source.p01, size=pairs)
        second = rng.geometric(source.p01 if active else source.p10, size=pairs)
        chunk = np.empty(2 * pairs, dtype=np.int64)
        chunk[0::2], chunk[1::2] = first, second
        flags = np.tile(np.array([active, not active]), pairs)
        runs.append(chunk)
        states.append(flags)
        covered += int(chunk.sum())
    path = np.repeat(np.concatenate(states), np.concatenate(runs))[:horizon]
    return np.flatnonzero(path) + 1


def _draw(pmf: FinitePmf, size: int, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(pmf.durations, size=size, p=pmf.probabilities)


def _lcfs(policy: LcfsPolicy, arrivals: np.ndarray, horizon: int, rng: np.random.Generator) -> _Deliveries:
    service = _draw(policy.service_pmf, len(arrivals), rng)
    departures = arrivals + service - 1
    # an arrival in the departure slot preempts
    next_arrival = np.append(arrivals[1:], np.iinfo(np.int64).max)
    done = (departures < next_arrival) & (departures <= horizon)
    return _Deliveries(
        slots=departures[done],
        stamps=arrivals[done] - 1,
        delivered=int(done.sum()),
        transmissions=int(done.sum()),
    )


def _fcfs(policy: FcfsPolicy, arrivals: np.ndarray, horizon: int, rng: np.random.Generator) -> _Deliveries:
    admitted = arrivals[rng.random(len(arrivals)) < policy.alpha]
    service = _draw(policy.service_pmf, len(admitted), rng)
    # Lindley recursion: c_k = max(a_k + S_k - 1, c_{k-1} + S_k), unrolled with a running max
    served = np.cumsum(service)
    before = served - service
    departures = served + np.maximum.accumulate(admitted - 1 - before)
    done = departures <= horizon

    tail = np.arange(horizon - horizon // 10, horizon + 1)
    backlog = np.searchsorted(admitted, tail, side="right") - np.searchsorted(departures, tail, side="right")
    trend = float(np.polyfit(tail, backlog, 1)[0]) if len(tail) > 1 else 0.0
    return _Deliveries(
        slots=departures[done],
        stamps=admitted[done] - 1,
        delivered=int(done.sum()),
        transmissions=int(done.sum()),
        backlog_trend=trend,
    )


def _dump_attempts(pmf: FinitePmf, horizon: int, rng: np.random.Generator) -> np.ndarray:
    mean = float(np.dot(pmf.durations, pmf.probabilities))
    chunks: List[np.ndarray] = []
    last = 0
    while last < horizon:
        draws = _draw(pmf, int((horizon - last) / mean) + 16, rng)
        attempts = last + np.cumsum(draws)
        chunks.append(attempts)
        last = int(attempts[-1])
    attempts = np.concatenate(chunks)
    return attempts[attempts <= horizon]


def _rad(
    policy: RadPolicy, arrivals: np.ndarray, horizon: int, rng: np.random.Generator, fake_updates: bool
) -> _Deliveries:
    attempts = _dump_attempts(policy.dump_pmf, horizon, rng)
    latest = np.searchsorted(arrivals, attempts, side="right") - 1
    previous = np.concatenate(([0], attempts[:-1]))
    # the freshest update that arrived after the previous attempt, if any
    fresh = latest >= 0
    fresh[fresh] = arrivals[latest[fresh]] > previous[fresh]
    stamps = np.full(len(attempts), -1, dtype=np.int64)
    stamps[fresh] = arrivals[latest[fresh]] - 1
    real = int(fresh.sum())
    if fake_updates:
        # empty attempts resend the previous dump, which never refreshes the monitor
        resent = np.maximum.accumulate(np.where(fresh, stamps, 0))
        return _Deliveries(slots=attempts, stamps=resent, delivered=real, transmissions=len(attempts))
    return _Deliveries(slots=attempts[fresh], stamps=stamps[fresh], delivered=real, transmissions=real)


def _monitor_ages(deliveries: _Deliveries, horizon: int) -> np.ndarray:
    """A(t) = t - freshest timestamp delivered by the end of slot t-1, for t = 1..horizon."""
    freshest = np.zeros(horizon + 1, dtype=np.int64)
    np.maximum.at(freshest, deliveries.slots, deliveries.stamps)
    freshest = np.maximum.accumulate(freshest)
    return np.arange(1, horizon + 1) - freshest[:horizon]


def _batch_means(samples: np.ndarray, batches: int) -> Tuple[float, float]:
    means = np.array([chunk.mean() for chunk in np.array_split(samples, batches)])
    spread = float(means.std(ddof=1))
    if spread == 0:
        return float(samples.mean()), 0.0
    quantile = stats.t.ppf((1 + get_settings().confidence) / 2, batches - 1)
    return float(samples.mean()), float(quantile * spread / np.sqrt(batches))


def simulate(cfg: SimConfig) -> SimStats:
    if cfg.policy is None:
        raise InvalidConfig("policy", "A monitor simulation needs a server policy")
    warmup, batches = _resolve(cfg)
    rng = np.random.default_rng(cfg.seed)
    horizon = cfg.horizon

    arrivals = _arrival_slots(cfg.source, horizon, rng)
    policy = cfg.policy
    if isinstance(policy, LcfsPolicy):
        deliveries = _lcfs(policy, arrivals, horizon, rng)
    elif isinstance(policy, FcfsPolicy):
        deliveries = _fcfs(policy, arrivals, horizon, rng)
    else:
        deliveries = _rad(policy, arrivals, horizon, rng, cfg.fake_updates)

    ages = _monitor_ages(deliveries, horizon)[warmup:]
    mean_age, half_width = _batch_means(ages, batches)
    logger.debug(
        "Simulated %s under %s for %d slots: age %.6f +- %.6f",
        policy.tag,
        cfg.source.label,
        horizon,
        mean_age,
        half_width,
    )
    return SimStats(
        mean_age=mean_age,
        ci_half_width=half_width,
        delivered=deliveries.delivered,
        output_rate=deliveries.transmissions / horizon,
        source_rate=len(arrivals) / horizon,
        backlog_trend=deliveries.backlog_trend,
    )


def simulate_markov(cfg: SimConfig) -> SimStats:
    if not isinstance(cfg.source, MarkovSource):
        raise InvalidConfig("source", "Expected a two-state Markov source")
    return simulate(cfg)


def empirical_source_age(cfg: SimConfig) -> SimStats:
    """Age of the freshest update at the server input; 1 in every arrival slot."""
    warmup, batches = _resolve(cfg)
    rng = np.random.default_rng(cfg.seed)
    horizon = cfg.horizon
    arrivals = _arrival_slots(cfg.source, horizon, rng)

    latest = np.zeros(horizon + 1, dtype=np.int64)
    latest[arrivals] = arrivals
    latest = np.maximum.accumulate(latest)
    ages = (np.arange(1, horizon + 1) - latest[1:] + 1)[warmup:]

    mean_age, half_width = _batch_means(ages, batches)
    counts = np.bincount(ages)
    age_pmf = {int(a): float(c) / len(ages) for a, c in enumerate(counts) if c > 0}
    return SimStats(
        mean_age=mean_age,
        ci_half_width=half_width,
        delivered=0,
        output_rate=0.0,
        source_rate=len(arrivals) / horizon,
        age_pmf=age_pmf,
    )


def spawn_seeds(seed: int, count: int) -> List[int]:
    """Independent child seeds, one per run index."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, np.uint64)[0]) for child in children]


def simulate_many(configs: Sequence[SimConfig], workers: Optional[int] = None) -> List[SimStats]:
    """Run independent configs, concurrently when workers > 1; results keep input order."""
    workers = get_settings().workers if workers is None else workers
    if workers <= 1 or len(configs) <= 1:
        return [simulate(cfg) for cfg in configs]
    with multiprocessing.Pool(processes=min(workers, len(configs))) as pool:
        return pool.map(simulate, configs)
