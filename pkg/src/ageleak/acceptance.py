"""End-to-end checks tying closed forms, the oracle, the optimizer and the simulator together."""

import logging
import math
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple
from uuid import uuid4

import numpy as np

from .age import fcfs_age, lcfs_age, markov_monitor_age, mbt_age, rad_age, uniform_rad_age
from .dist import deterministic_pmf, geometric_pmf, make_pmf, pgf, uniform_pmf
from .errors import AgeLeakError
from .leakage import fibonacci_counts, rad_leakage_bits, rad_rate, rad_root, smp_finite_rate, smp_leakage_bits
from .optimizer import ddad_policy, dinkelbach_certify, greedy_smp_pmf, shifted_greedy_pmf, verify_two_point_optimality
from .oracle import brute_force_maxl
from .policies import FcfsPolicy, LcfsPolicy, RadPolicy, dad_policy
from .results import CheckRecord, InMemoryResults, ResultHistory
from .simulator import SimConfig, simulate
from .sources import BernoulliSource, MarkovSource
from .tradeoff import SweepSpec, asymptotic_slope, dominance_check, efficiency, sweep

logger = logging.getLogger(__name__)

Outcome = Tuple[bool, str]

LOG2_PHI = math.log2((1 + math.sqrt(5)) / 2)
SIM_HORIZON = 1_000_000


def _within(simulated: float, half_width: float, expected: float) -> bool:
    return abs(simulated - expected) <= max(3 * half_width, 0.02 * expected)


def check_coupled_oracle() -> Outcome:
    worst = 0.0
    for beta in (0.3, 0.5, 1.0):
        pmf = greedy_smp_pmf(beta)
        for n in range(1, 11):
            closed = smp_leakage_bits(n, 1, beta).bits
            for policy in (LcfsPolicy(service_pmf=pmf), FcfsPolicy(service_pmf=pmf)):
                worst = max(worst, abs(brute_force_maxl(policy, n).bits - closed))
    return worst <= 1e-9, f"max deviation {worst:.3e} bits"


def check_decoupled_oracle() -> Outcome:
    pmfs = [deterministic_pmf(tau) for tau in (1, 2, 3)]
    pmfs += [uniform_pmf(k) for k in (2, 3)]
    pmfs.append(geometric_pmf(0.5))
    worst = 0.0
    for pmf in pmfs:
        policy = RadPolicy(dump_pmf=pmf)
        for n in range(1, 13):
            worst = max(worst, abs(brute_force_maxl(policy, n).bits - rad_leakage_bits(n, pmf).bits))
    return worst <= 1e-9, f"max deviation {worst:.3e} bits"


def check_fibonacci() -> Outcome:
    counts = fibonacci_counts(30, 2)
    recurrence = counts[1] == 1 and counts[2] == 2
    recurrence &= all(counts[n] == counts[n - 1] + counts[n - 2] for n in range(3, 31))
    closed = all(
        abs(smp_leakage_bits(n, 2, 1.0).bits - math.log2(counts[n])) <= 1e-9 for n in range(1, 31)
    )
    rate = smp_finite_rate(2, 1.0, 10_000)
    ok = recurrence and closed and abs(rate - LOG2_PHI) <= 1e-3
    return ok, f"rate at n=10000 is {rate:.6f}, log2(phi) = {LOG2_PHI:.6f}"


def check_rate_identities() -> Outcome:
    worst_rate, worst_residual = 0.0, 0.0
    for tau in range(1, 101):
        for pmf, expected in ((deterministic_pmf(tau), 1 / tau), (geometric_pmf(1 / tau), math.log2(1 + 1 / tau))):
            worst_rate = max(worst_rate, abs(rad_rate(pmf) - expected))
            worst_residual = max(worst_residual, abs(pgf(pmf, rad_root(pmf)) - 0.5))
    ok = worst_rate <= 1e-10 and worst_residual <= 1e-12
    return ok, f"rate error {worst_rate:.3e}, root residual {worst_residual:.3e}"


def check_age_simulation(horizon: int = SIM_HORIZON) -> Outcome:
    lam = 0.5
    source = BernoulliSource(lam=lam)
    cases = [
        ("lcfs-geo", LcfsPolicy(service_pmf=geometric_pmf(0.25)), lcfs_age(lam, geometric_pmf(0.25)).delta),
        ("dad", dad_policy(5), rad_age(lam, deterministic_pmf(5)).delta),
        ("rad-uniform", RadPolicy(dump_pmf=uniform_pmf(3)), uniform_rad_age(lam, 2).delta),
        ("mbt", FcfsPolicy(service_pmf=geometric_pmf(0.5), alpha=0.5), mbt_age(0.5, 0.5, lam).delta),
        ("fcfs-geo", FcfsPolicy(service_pmf=geometric_pmf(0.75)), fcfs_age(lam, geometric_pmf(0.75)).delta),
    ]
    failures = []
    for seed, (name, policy, expected) in enumerate(cases):
        stats = simulate(SimConfig(policy=policy, source=source, horizon=horizon, seed=seed))
        if not _within(stats.mean_age, stats.ci_half_width, expected):
            failures.append(f"{name}: {stats.mean_age:.4f} vs {expected:.4f}")
    return not failures, "; ".join(failures) or f"{len(cases)} policies agree"


def check_markov(horizon: int = SIM_HORIZON) -> Outcome:
    slow, fast = MarkovSource(p01=0.05, p10=0.2), MarkovSource(p01=0.2, p10=0.05)
    rates_ok = abs(slow.effective_rate - 0.2) <= 1e-15 and abs(fast.effective_rate - 0.8) <= 1e-15
    policy = dad_policy(5)
    expected = markov_monitor_age(slow, policy).delta
    stats = simulate(SimConfig(policy=policy, source=slow, horizon=horizon, seed=7))
    ok = rates_ok and abs(expected - 20.0) <= 1e-12 and _within(stats.mean_age, stats.ci_half_width, expected)
    return ok, f"simulated {stats.mean_age:.4f} +- {stats.ci_half_width:.4f}, analytic {expected:.4f}"


def random_smp_pmf(beta: float, rng: np.random.Generator) -> List[Tuple[int, float]]:
    """Random pmf with g(1) = beta and no later mass above beta."""
    entries = [(1, beta)]
    remaining = 1 - beta
    duration = 2
    while remaining > beta:
        mass = float(rng.uniform(0.05, 1.0)) * beta
        entries.append((duration, mass))
        remaining -= mass
        duration += 1
    if remaining > 0:
        entries.append((duration, remaining))
    return entries


def check_greedy_exchange(seed: int = 2024) -> Outcome:
    rng = np.random.default_rng(seed)
    lam = 0.5
    for beta in (0.25, 0.4):
        best = lcfs_age(lam, greedy_smp_pmf(beta)).delta
        for _ in range(200):
            competitor = lcfs_age(lam, make_pmf(random_smp_pmf(beta, rng))).delta
            if competitor < best - 1e-12:
                return False, f"beta={beta}: competitor age {competitor} below greedy {best}"
        for s_min in (2, 3):
            if lcfs_age(lam, shifted_greedy_pmf(beta, s_min)).delta <= best:
                return False, f"beta={beta}: shift to s_min={s_min} does not increase the age"
    return True, "greedy pmf minimises LCFS age against 400 competitors"


def check_ddad() -> Outcome:
    dither = ddad_policy(0.4)
    certificate = dinkelbach_certify(dither)
    achieved = rad_rate(dither.dump_pmf())
    ok = (
        (dither.i, dither.j) == (2, 3)
        and dither.constraint_residual <= 1e-9
        and abs(achieved - 0.4) <= 1e-9
        and 2 < certificate.gamma_star < 3
        and certificate.residual <= 1e-9
        and verify_two_point_optimality(0.4, 8)
    )
    return ok, f"p_i={dither.p_i:.6f}, gamma*={certificate.gamma_star:.6f}, rate={achieved:.12f}"


def check_efficiency_and_slopes() -> Outcome:
    dad = sweep(SweepSpec(family="dad", start=2, stop=100, step=1))
    eta_ok = all(efficiency(p, 0.5) == 2.0 for p in dad)
    geo_slope = asymptotic_slope(sweep(SweepSpec(family="lcfs-geo", start=1, stop=200, step=1)), 0.2)
    fcfs_slope = asymptotic_slope(sweep(SweepSpec(family="fcfs-greedy", start=0.3, stop=1.0, step=0.01)), 0.2)
    ok = eta_ok and abs(geo_slope - math.log(2)) <= 0.02 and abs(fcfs_slope) <= 0.05
    return ok, f"LCFS-geo slope {geo_slope:.4f}, FCFS-greedy slope {fcfs_slope:.4f}"


def check_dominance() -> Outcome:
    window = (3.1, 30.0)
    ddad = sweep(SweepSpec(family="ddad", start=0.015, stop=1.0, step=0.005))
    lcfs = sweep(SweepSpec(family="lcfs-greedy", start=0.01, stop=1.0, step=0.01))
    thinned = sweep(SweepSpec(family="fcfs-greedy-thinned", start=0.01, stop=1.0, step=0.01))
    decoupled = dominance_check(ddad, lcfs, window)
    coupled = dominance_check(lcfs, thinned, window)
    return decoupled and coupled, f"D-DAD over LCFS: {decoupled}, LCFS over thinned FCFS: {coupled}"


CHECKS: Dict[str, Callable[[], Outcome]] = {
    "coupled-oracle": check_coupled_oracle,
    "decoupled-oracle": check_decoupled_oracle,
    "fibonacci": check_fibonacci,
    "rate-identities": check_rate_identities,
    "age-simulation": check_age_simulation,
    "markov": check_markov,
    "greedy-exchange": check_greedy_exchange,
    "ddad": check_ddad,
    "efficiency-slopes": check_efficiency_and_slopes,
    "dominance": check_dominance,
}


def run_checks(names: Optional[Sequence[str]] = None, history: Optional[ResultHistory] = None) -> List[CheckRecord]:
    """Run the named checks (all by default) under one run id."""
    history = history if history is not None else InMemoryResults()
    run_id = uuid4()
    records = []
    for name in names or list(CHECKS):
        if name not in CHECKS:
            raise KeyError(f"Unknown check '{name}'")
        started = time.perf_counter()
        try:
            passed, detail = CHECKS[name]()
        except AgeLeakError as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        record = CheckRecord(
            name=name, run_id=run_id, passed=passed, detail=detail, seconds=time.perf_counter() - started
        )
        level = logging.INFO if passed else logging.WARNING
        logger.log(level, "Check %s %s in %.1fs: %s", name, "passed" if passed else "FAILED", record.seconds, detail)
        history.add_record(record)
        records.append(record)
    return records
