from uuid import UUID

import numpy as np
import pytest

from ageleak.acceptance import (
    CHECKS,
    check_age_simulation,
    check_coupled_oracle,
    check_ddad,
    check_decoupled_oracle,
    check_dominance,
    check_efficiency_and_slopes,
    check_fibonacci,
    check_greedy_exchange,
    check_markov,
    check_rate_identities,
    random_smp_pmf,
    run_checks,
)
from ageleak.dist import is_smp, make_pmf
from ageleak.errors import ConvergenceFailure
from ageleak.results import InMemoryResults


def test_random_smp_pmf_is_smp():
    rng = np.random.default_rng(0)
    for beta in (0.2, 0.45):
        pmf = make_pmf(random_smp_pmf(beta, rng))
        assert pmf.prob(1) == beta
        assert is_smp(pmf) == (True, 1)


# Check Tests
@pytest.mark.parametrize("check", [check_fibonacci, check_rate_identities, check_greedy_exchange, check_ddad])
def test_fast_checks_pass(check):
    passed, detail = check()
    assert passed, detail


@pytest.mark.slow
@pytest.mark.parametrize(
    "check", [check_coupled_oracle, check_decoupled_oracle, check_efficiency_and_slopes, check_dominance]
)
def test_slow_checks_pass(check):
    passed, detail = check()
    assert passed, detail


@pytest.mark.slow
@pytest.mark.parametrize("check", [check_age_simulation, check_markov])
def test_simulation_checks_pass_on_short_horizon(check):
    passed, detail = check(horizon=200_000)
    assert passed, detail


# Runner Tests
def test_run_checks_records_one_run():
    history = InMemoryResults()
    records = run_checks(["fibonacci", "ddad"], history)
    assert [r.name for r in records] == ["fibonacci", "ddad"]
    assert all(r.passed and r.seconds >= 0 for r in records)
    assert isinstance(records[0].run_id, UUID)
    assert records[0].run_id == records[1].run_id
    assert list(history.get_latest_run_records()) == ["fibonacci", "ddad"]


def test_run_checks_reports_raising_check_as_failure(monkeypatch):
    def diverging():
        raise ConvergenceFailure("bisection", 200, 1e-3)

    monkeypatch.setitem(CHECKS, "fibonacci", diverging)
    history = InMemoryResults()
    records = run_checks(["fibonacci", "ddad"], history)
    assert [r.passed for r in records] == [False, True]
    assert records[0].detail.startswith("ConvergenceFailure")
    assert [r.name for r in history.failed_checks()] == ["fibonacci"]


def test_run_checks_unknown_name():
    with pytest.raises(KeyError):
        run_checks(["nonexistent"])


def test_every_check_is_registered():
    assert len(CHECKS) == 10
