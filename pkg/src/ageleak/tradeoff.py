"""Age / leakage-time trade-off curves.

Each policy family maps a scalar parameter (beta, tau, mu or a target rate) to one
:class:`TradeoffPoint`. Curves are compared on the (delta, leak_time) plane.
"""

import csv
import io
import logging
import math
from pathlib import Path
from typing import IO, TYPE_CHECKING, Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union
from uuid import UUID, uuid4

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .age import (
    fcfs_age,
    geometric_rad_age,
    lcfs_age,
    markov_monitor_age,
    mbt_age,
    rad_age,
    uniform_rad_age,
    zero_delay_age,
)
from .dist import FinitePmf, deterministic_pmf, geometric_pmf, uniform_pmf
from .errors import BaselinePoint, NoFeasibleAlpha, NoOverlap, ParameterError, TooFewPoints, Unstable
from .leakage import geometric_rad_rate, leakage_time, smp_finite_rate, uniform_rad_rate
from .optimizer import ddad_policy, greedy_smp_pmf, optimal_alpha_for_fcfs, shifted_greedy_pmf
from .policies import BasePolicy, FcfsPolicy, LcfsPolicy, RadPolicy
from .settings import get_settings
from .simulator import SimConfig, simulate_many, spawn_seeds
from .sources import BernoulliSource, MarkovSource, SourceModel

if TYPE_CHECKING:
    from .results import ResultHistory

logger = logging.getLogger(__name__)

Family = Literal[
    "lcfs-greedy",
    "lcfs-greedy-shifted",
    "lcfs-geo",
    "fcfs-greedy",
    "fcfs-greedy-thinned",
    "fcfs-geo",
    "mbt",
    "dad",
    "ddad",
    "rad-geo",
    "rad-uniform",
]

CSV_COLUMNS = [
    "policy_tag",
    "param",
    "lambda",
    "source",
    "delta",
    "rate_bits",
    "leak_time",
    "eta",
    "sim_delta",
    "sim_ci",
]


def grid_values(start: float, stop: float, step: float) -> List[float]:
    """Inclusive arithmetic grid, rounded so that decimal steps land on decimal values."""
    if step <= 0:
        raise ParameterError("step", f"Grid step {step} must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(max(count, 0))]


class TradeoffPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    policy_tag: str
    param: float
    lam: float
    source: str = ""
    delta: float
    rate_bits: float = Field(ge=0)
    leak_time: float
    eta: Optional[float] = None
    sim_delta: Optional[float] = None
    sim_ci: Optional[float] = None

    @model_validator(mode="after")
    def validate_leak_time(self) -> "TradeoffPoint":
        if self.rate_bits > 0 and abs(self.leak_time - 1 / self.rate_bits) > 1e-12 * max(1.0, self.leak_time):
            raise ValueError(f"leak_time {self.leak_time} does not match 1/rate_bits = {1 / self.rate_bits}")
        return self


class SweepSpec(BaseModel):
    """A policy family swept over a parameter grid for one source."""

    model_config = ConfigDict(frozen=True)

    family: Family
    grid: Optional[List[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    step: Optional[float] = Field(None, gt=0)
    source: SourceModel = BernoulliSource(lam=0.5)
    simulate: bool = False
    sim_horizon: int = Field(1_000_000, gt=0)
    seed: int = Field(0, ge=0)
    alpha: Optional[float] = Field(None, gt=0, le=1)
    s_min: int = Field(2, ge=1)
    finite_n: int = Field(10_000, ge=1)

    @model_validator(mode="after")
    def validate_grid(self) -> "SweepSpec":
        if self.grid is None and None in (self.start, self.stop, self.step):
            raise ValueError("Either an explicit grid or start/stop/step is required")
        if not self.values():
            raise ValueError("Parameter grid is empty")
        return self

    def values(self) -> List[float]:
        if self.grid is not None:
            return list(self.grid)
        assert self.start is not None and self.stop is not None and self.step is not None
        return grid_values(self.start, self.stop, self.step)


def _bernoulli_only(source: SourceModel, family: str) -> float:
    if not isinstance(source, BernoulliSource):
        raise ParameterError("source", f"No closed-form age for {family} under a Markov source")
    return source.lam


def _age(source: SourceModel, policy: Union[LcfsPolicy, RadPolicy], bernoulli: Callable[[float], float]) -> float:
    """Closed-form age: renewal sampling for a Markov source, the given formula otherwise."""
    if isinstance(source, MarkovSource):
        return markov_monitor_age(source, policy).delta
    return bernoulli(source.lam)


def _bernoulli_age(source: SourceModel, formula: Callable[[float], float]) -> Optional[float]:
    """Queueing formulas need Bernoulli arrivals; Markov points fall back to simulation."""
    if isinstance(source, MarkovSource):
        return None
    return formula(source.lam)


def _thinning(spec: SweepSpec, pmf: FinitePmf) -> Tuple[float, float]:
    lam = _bernoulli_only(spec.source, spec.family)
    if spec.alpha is not None:
        return lam, spec.alpha
    return lam, optimal_alpha_for_fcfs(lam, pmf)[0]


def evaluate(spec: SweepSpec, param: float) -> Tuple[Optional[float], float, float, BasePolicy]:
    """(analytic delta or None, rate, leak time, policy) of one grid value."""
    family, source = spec.family, spec.source

    if family == "lcfs-greedy-shifted":
        pmf = shifted_greedy_pmf(param, spec.s_min)
        rate = smp_finite_rate(spec.s_min, param, spec.finite_n)
        delta = _bernoulli_age(source, lambda lam: lcfs_age(lam, pmf).delta)
        return delta, rate, leakage_time(rate), LcfsPolicy(service_pmf=pmf)

    if family in ("lcfs-greedy", "fcfs-greedy", "fcfs-greedy-thinned"):
        pmf = greedy_smp_pmf(param)
        rate = math.log2(1 + param)
        if family == "lcfs-greedy":
            delta = _bernoulli_age(source, lambda lam: lcfs_age(lam, pmf).delta)
            return delta, rate, leakage_time(rate), LcfsPolicy(service_pmf=pmf)
        if family == "fcfs-greedy":
            delta = _bernoulli_age(source, lambda lam: fcfs_age(lam, pmf).delta)
            return delta, rate, leakage_time(rate), FcfsPolicy(service_pmf=pmf)
        lam, alpha = _thinning(spec, pmf)
        return fcfs_age(lam, pmf, alpha).delta, rate, leakage_time(rate), FcfsPolicy(service_pmf=pmf, alpha=alpha)

    if family in ("lcfs-geo", "fcfs-geo", "mbt", "rad-geo"):
        mu = 1 / param
        pmf = geometric_pmf(mu, allow_heavy_tail=True)
        rate = geometric_rad_rate(param)
        if family == "lcfs-geo":
            lcfs = LcfsPolicy(service_pmf=pmf)
            return _age(source, lcfs, lambda lam: lcfs_age(lam, pmf).delta), rate, leakage_time(rate), lcfs
        if family == "rad-geo":
            rad = RadPolicy(dump_pmf=pmf)
            return _age(source, rad, lambda lam: geometric_rad_age(lam, param).delta), rate, leakage_time(rate), rad
        if family == "fcfs-geo":
            delta = _bernoulli_age(source, lambda lam: fcfs_age(lam, pmf).delta)
            return delta, rate, leakage_time(rate), FcfsPolicy(service_pmf=pmf)
        lam, alpha = _thinning(spec, pmf)
        return mbt_age(alpha, mu, lam).delta, rate, leakage_time(rate), FcfsPolicy(service_pmf=pmf, alpha=alpha)

    if family == "dad":
        tau = int(round(param))
        if abs(tau - param) > get_settings().integer_tolerance or tau < 1:
            raise ParameterError("tau", f"DAD period {param} must be a positive integer")
        rad = RadPolicy(dump_pmf=deterministic_pmf(tau), schedule="dad")
        # leak time is exactly tau
        return _age(source, rad, lambda lam: rad_age(lam, rad.dump_pmf).delta), 1 / tau, float(tau), rad

    if family == "ddad":
        rad = RadPolicy(dump_pmf=ddad_policy(param).dump_pmf(), schedule="ddad")
        return _age(source, rad, lambda lam: rad_age(lam, rad.dump_pmf).delta), param, leakage_time(param), rad

    # rad-uniform: uniform dumps on {1, ..., 2 tau - 1}
    rate = uniform_rad_rate(param)
    rad = RadPolicy(dump_pmf=uniform_pmf(int(round(2 * param - 1))))
    return _age(source, rad, lambda lam: uniform_rad_age(lam, param).delta), rate, leakage_time(rate), rad


def efficiency(point: TradeoffPoint, lam: float, baseline: Optional[float] = None) -> float:
    """eta = (T - 1) / (delta - delta_1), delta_1 = 1 + 1/lambda unless a baseline is given."""
    base = 1 + 1 / lam if baseline is None else baseline
    if abs(point.delta - base) <= 1e-12:
        raise BaselinePoint("point", f"Age {point.delta} equals the zero-delay age {base}")
    return (point.leak_time - 1) / (point.delta - base)


def sweep(
    spec: SweepSpec,
    workers: Optional[int] = None,
    history: Optional["ResultHistory"] = None,
    run_id: Optional[UUID] = None,
) -> List[TradeoffPoint]:
    """One point per grid value in grid order; unstable or infeasible values are skipped.

    When a history is given the points are stored in it as one sweep record named after the family.
    """
    source = spec.source
    lam = source.effective_rate
    baseline = zero_delay_age(source)

    evaluated: List[Tuple[float, Optional[float], float, float, BasePolicy]] = []
    for param in spec.values():
        try:
            delta, rate, leak, policy = evaluate(spec, param)
        except (Unstable, NoFeasibleAlpha) as exc:
            logger.warning("Skipping %s at %s: %s", spec.family, param, exc)
            continue
        logger.debug("%s at %s: delta=%s rate=%s", spec.family, param, delta, rate)
        evaluated.append((param, delta, rate, leak, policy))

    sims: Dict[int, Tuple[float, float]] = {}
    needs_sim = [k for k, item in enumerate(evaluated) if spec.simulate or item[1] is None]
    if needs_sim:
        seeds = spawn_seeds(spec.seed, len(evaluated))
        configs = [
            SimConfig(policy=evaluated[k][4], source=source, horizon=spec.sim_horizon, seed=seeds[k])  # type: ignore
            for k in needs_sim
        ]
        for k, stats in zip(needs_sim, simulate_many(configs, workers)):
            sims[k] = (stats.mean_age, stats.ci_half_width)

    points: List[TradeoffPoint] = []
    for k, (param, delta, rate, leak, policy) in enumerate(evaluated):
        sim_delta, sim_ci = sims.get(k, (None, None))
        value = delta if delta is not None else sim_delta
        assert value is not None
        point = TradeoffPoint(
            policy_tag=spec.family,
            param=param,
            lam=lam,
            source=source.label,
            delta=value,
            rate_bits=rate,
            leak_time=leak,
            sim_delta=sim_delta,
            sim_ci=sim_ci,
        )
        try:
            point = point.model_copy(update={"eta": efficiency(point, lam, baseline)})
        except BaselinePoint:
            pass
        points.append(point)
    logger.info("Sweep %s produced %d of %d points", spec.family, len(points), len(spec.values()))
    if history is not None:
        from .results import SweepRecord

        record = SweepRecord(name=spec.family, run_id=run_id or uuid4(), spec=spec, points=points)
        history.add_record(record)
    return points


def _curve(series: Sequence[TradeoffPoint]) -> Tuple[np.ndarray, np.ndarray]:
    ordered = sorted(series, key=lambda p: p.delta)
    return np.array([p.delta for p in ordered]), np.array([p.leak_time for p in ordered])


def dominance_check(
    series_a: Sequence[TradeoffPoint],
    series_b: Sequence[TradeoffPoint],
    delta_range: Optional[Tuple[float, float]] = None,
    tolerance: float = 1e-9,
) -> bool:
    """True iff curve a's leak time is >= curve b's at every common age grid point."""
    if not series_a or not series_b:
        raise NoOverlap("series", "Both series need at least one point")
    delta_a, leak_a = _curve(series_a)
    delta_b, leak_b = _curve(series_b)
    low, high = max(delta_a[0], delta_b[0]), min(delta_a[-1], delta_b[-1])
    if delta_range is not None:
        low, high = max(low, delta_range[0]), min(high, delta_range[1])
    if low > high:
        raise NoOverlap("series", f"Age ranges do not overlap (low {low}, high {high})")

    grid = np.union1d(delta_a, delta_b)
    grid = np.union1d(grid[(grid >= low) & (grid <= high)], [low, high])
    gap = np.interp(grid, delta_a, leak_a) - np.interp(grid, delta_b, leak_b)
    worst = int(np.argmin(gap))
    if gap[worst] < -tolerance:
        logger.info("Dominance fails at delta=%.6f by %.3e", grid[worst], -gap[worst])
        return False
    return True


def asymptotic_slope(series: Sequence[TradeoffPoint], tail_fraction: float = 0.2) -> float:
    """Least-squares slope of leak time against age over the largest-age tail of the curve."""
    if len(series) < 10:
        raise TooFewPoints("series", f"{len(series)} points; at least 10 are needed")
    if not 0 < tail_fraction <= 1:
        raise ParameterError("tail_fraction", f"Tail fraction {tail_fraction} must lie in (0, 1]")
    delta, leak = _curve(series)
    count = max(2, math.ceil(tail_fraction * len(delta)))
    return float(np.polyfit(delta[-count:], leak[-count:], 1)[0])


def _cell(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def write_points(points: Sequence[TradeoffPoint], out: Union[str, Path, IO[str]]) -> None:
    """CSV with a fixed header; undefined values are empty fields."""
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="") as f:
            write_points(points, f)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for p in points:
        writer.writerow(
            [
                p.policy_tag,
                _cell(p.param),
                _cell(p.lam),
                p.source,
                _cell(p.delta),
                _cell(p.rate_bits),
                _cell(p.leak_time),
                _cell(p.eta),
                _cell(p.sim_delta),
                _cell(p.sim_ci),
            ]
        )


def _parse(value: str) -> Optional[float]:
    return None if value == "" else float(value)


def read_points(source: Union[str, Path, IO[str]]) -> List[TradeoffPoint]:
    if isinstance(source, (str, Path)):
        with open(source, "r", newline="") as f:
            return read_points(f)
    reader = csv.DictReader(source)
    if reader.fieldnames != CSV_COLUMNS:
        raise ParameterError("header", f"Unexpected CSV header {reader.fieldnames}")
    return [
        TradeoffPoint(
            policy_tag=row["policy_tag"],
            param=float(row["param"]),
            lam=float(row["lambda"]),
            source=row["source"],
            delta=float(row["delta"]),
            rate_bits=float(row["rate_bits"]),
            leak_time=float(row["leak_time"]),
            eta=_parse(row["eta"]),
            sim_delta=_parse(row["sim_delta"]),
            sim_ci=_parse(row["sim_ci"]),
        )
        for row in reader
    ]


def points_to_csv(points: Sequence[TradeoffPoint]) -> str:
    buffer = io.StringIO()
    write_points(points, buffer)
    return buffer.getvalue()
