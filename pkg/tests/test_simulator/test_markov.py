import pytest

from ageleak.age import markov_monitor_age, markov_source_age
from ageleak.dist import geometric_pmf
from ageleak.errors import InvalidConfig
from ageleak.policies import LcfsPolicy, dad_policy
from ageleak.simulator import SimConfig, empirical_source_age, simulate, simulate_many, simulate_markov, spawn_seeds
from ageleak.sources import BernoulliSource, MarkovSource

SLOW = MarkovSource(p01=0.05, p10=0.2)


# Markov Source Tests
def test_markov_dad_matches_renewal_formula():
    stats = simulate_markov(SimConfig(policy=dad_policy(5), source=SLOW, horizon=400_000, seed=7))
    assert stats.mean_age == pytest.approx(markov_monitor_age(SLOW, dad_policy(5)).delta, rel=0.05)
    assert stats.source_rate == pytest.approx(0.2, abs=0.01)


def test_markov_effective_rate_of_busy_source():
    fast = MarkovSource(p01=0.2, p10=0.05)
    policy = LcfsPolicy(service_pmf=geometric_pmf(0.5))
    stats = simulate_markov(SimConfig(policy=policy, source=fast, horizon=200_000, seed=11))
    assert stats.source_rate == pytest.approx(0.8, abs=0.01)
    assert stats.mean_age == pytest.approx(4.0, rel=0.05)


def test_simulate_markov_needs_markov_source():
    cfg = SimConfig(policy=dad_policy(2), source=BernoulliSource(lam=0.5), horizon=1_000, warmup=0)
    with pytest.raises(InvalidConfig):
        simulate_markov(cfg)


# Source Age Tests
def test_empirical_bernoulli_source_age():
    stats = empirical_source_age(SimConfig(source=BernoulliSource(lam=0.5), horizon=200_000, seed=12))
    assert stats.mean_age == pytest.approx(2.0, rel=0.02)
    assert stats.age_pmf[1] == pytest.approx(0.5, abs=0.01)
    assert sum(stats.age_pmf.values()) == pytest.approx(1.0)
    assert stats.delivered == 0


def test_empirical_markov_source_age():
    stats = empirical_source_age(SimConfig(source=SLOW, horizon=400_000, seed=13))
    assert stats.mean_age == pytest.approx(markov_source_age(SLOW).delta, rel=0.05)


# Seeding Tests
def test_spawn_seeds():
    seeds = spawn_seeds(0, 5)
    assert seeds == spawn_seeds(0, 5)
    assert len(set(seeds)) == 5
    assert seeds != spawn_seeds(1, 5)


def test_simulate_many_keeps_order():
    configs = [
        SimConfig(policy=dad_policy(tau), source=BernoulliSource(lam=0.5), horizon=20_000, seed=seed)
        for tau, seed in zip((2, 4), spawn_seeds(3, 2))
    ]
    sequential = simulate_many(configs, workers=1)
    assert sequential == [simulate(cfg) for cfg in configs]
    assert simulate_many(configs, workers=2) == sequential
