import pytest

from ageleak.age import fcfs_age, lcfs_age, mbt_age
from ageleak.dist import deterministic_pmf, geometric_pmf
from ageleak.errors import InvalidConfig
from ageleak.optimizer import optimal_alpha_for_fcfs
from ageleak.policies import FcfsPolicy, LcfsPolicy, RadPolicy
from ageleak.simulator import SimConfig, simulate
from ageleak.sources import BernoulliSource

HORIZON = 200_000
HALF = BernoulliSource(lam=0.5)


def _close(stats, expected):
    return abs(stats.mean_age - expected) <= max(4 * stats.ci_half_width, 0.05 * expected)


# Agreement Tests
def test_lcfs_geometric_matches_closed_form():
    policy = LcfsPolicy(service_pmf=geometric_pmf(0.25))
    stats = simulate(SimConfig(policy=policy, source=HALF, horizon=HORIZON, seed=0))
    assert _close(stats, lcfs_age(0.5, geometric_pmf(0.25)).delta)
    assert stats.output_rate <= stats.source_rate


def test_fcfs_geometric_matches_closed_form():
    policy = FcfsPolicy(service_pmf=geometric_pmf(0.75))
    stats = simulate(SimConfig(policy=policy, source=HALF, horizon=HORIZON, seed=1))
    assert _close(stats, fcfs_age(0.5, geometric_pmf(0.75)).delta)


def test_thinned_fcfs_matches_mbt():
    policy = FcfsPolicy(service_pmf=geometric_pmf(0.5), alpha=0.5)
    stats = simulate(SimConfig(policy=policy, source=HALF, horizon=HORIZON, seed=2))
    assert _close(stats, mbt_age(0.5, 0.5, 0.5).delta)
    assert stats.output_rate == pytest.approx(0.25, abs=0.01)


def test_lcfs_and_rad_geometric_ages_agree():
    pmf = geometric_pmf(0.25)
    lcfs = simulate(SimConfig(policy=LcfsPolicy(service_pmf=pmf), source=HALF, horizon=HORIZON, seed=11))
    rad = simulate(SimConfig(policy=RadPolicy(dump_pmf=pmf), source=HALF, horizon=HORIZON, seed=12))
    spread = 3 * (lcfs.ci_half_width + rad.ci_half_width)
    assert abs(lcfs.mean_age - rad.mean_age) <= max(spread, 0.05 * rad.mean_age)


def test_zero_delay_full_rate_age_is_two():
    policy = LcfsPolicy(service_pmf=deterministic_pmf(1))
    stats = simulate(SimConfig(policy=policy, source=BernoulliSource(lam=1.0), horizon=5_000, warmup=10))
    assert stats.mean_age == 2.0
    assert stats.ci_half_width == 0.0
    assert stats.delivered == 5_000


# Behaviour Tests
def test_same_seed_same_statistics():
    cfg = SimConfig(policy=LcfsPolicy(service_pmf=geometric_pmf(0.3)), source=HALF, horizon=20_000, seed=42)
    assert simulate(cfg) == simulate(cfg)


def test_different_seeds_differ():
    policy = LcfsPolicy(service_pmf=geometric_pmf(0.3))
    first = simulate(SimConfig(policy=policy, source=HALF, horizon=20_000, seed=1))
    second = simulate(SimConfig(policy=policy, source=HALF, horizon=20_000, seed=2))
    assert first.mean_age != second.mean_age


def test_overloaded_fcfs_backlog_grows():
    policy = FcfsPolicy(service_pmf=deterministic_pmf(3))
    stats = simulate(SimConfig(policy=policy, source=HALF, horizon=50_000, seed=3))
    assert stats.backlog_trend is not None
    assert stats.backlog_trend > 0.1


def test_stable_fcfs_backlog_is_flat():
    policy = FcfsPolicy(service_pmf=deterministic_pmf(1))
    stats = simulate(SimConfig(policy=policy, source=HALF, horizon=50_000, seed=3))
    assert abs(stats.backlog_trend) < 0.01


def test_fcfs_at_optimal_admission_is_stable():
    pmf = geometric_pmf(0.3)
    alpha, _ = optimal_alpha_for_fcfs(0.5, pmf)
    policy = FcfsPolicy(service_pmf=pmf, alpha=alpha)
    stats = simulate(SimConfig(policy=policy, source=HALF, horizon=50_000, seed=13))
    assert abs(stats.backlog_trend) < 0.01


# Config Tests
def test_warmup_must_be_shorter_than_horizon():
    cfg = SimConfig(policy=LcfsPolicy(service_pmf=deterministic_pmf(1)), source=HALF, horizon=100, warmup=100)
    with pytest.raises(InvalidConfig):
        simulate(cfg)


def test_batches_must_fit():
    cfg = SimConfig(
        policy=LcfsPolicy(service_pmf=deterministic_pmf(1)), source=HALF, horizon=100, warmup=90, batches=30
    )
    with pytest.raises(InvalidConfig):
        simulate(cfg)


def test_monitor_simulation_needs_policy():
    with pytest.raises(InvalidConfig):
        simulate(SimConfig(source=HALF, horizon=1_000, warmup=0))


def test_config_rejects_non_positive_horizon():
    with pytest.raises(Exception):
        SimConfig(source=HALF, horizon=0)
