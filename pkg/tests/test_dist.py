import math

import numpy as np
import pytest

from ageleak.acceptance import random_smp_pmf
from ageleak.dist import (
    deterministic_pmf,
    geometric_pmf,
    is_smp,
    make_pmf,
    pgf,
    pmf_from_json,
    pmf_moments,
    pmf_to_json,
    shift_pmf,
    tail_probability,
    two_point_pmf,
    uniform_pmf,
)
from ageleak.errors import (
    DuplicateDuration,
    InvalidTau,
    NegativeProbability,
    NonPositiveDuration,
    ParameterError,
    TailTooHeavy,
    UnnormalizedMass,
)


# make_pmf Tests
def test_make_pmf_sorts_and_drops_zero_mass():
    pmf = make_pmf([(3, 0.25), (1, 0.75), (2, 0.0)])
    assert pmf.entries == ((1, 0.75), (3, 0.25))
    assert pmf.s_min == 1
    assert pmf.d_max == 3
    assert len(pmf) == 2


@pytest.mark.parametrize(
    "entries",
    [[(3, 0.25), (1, 0.75), (2, 0.0)], [(5, 0.1), (2, 0.2), (9, 0.7)], [(4, 1.0)]],
)
def test_make_pmf_is_idempotent(entries):
    pmf = make_pmf(entries)
    assert make_pmf(pmf.entries) == pmf
    assert make_pmf(make_pmf(pmf.entries).entries).entries == pmf.entries


@pytest.mark.parametrize(
    "entries, error",
    [
        ([(1, 0.5), (2, 0.6)], UnnormalizedMass),
        ([(1, -0.1), (2, 1.1)], NegativeProbability),
        ([(0, 1.0)], NonPositiveDuration),
        ([(1.5, 1.0)], NonPositiveDuration),
        ([(1, 0.5), (1, 0.5)], DuplicateDuration),
        ([], UnnormalizedMass),
    ],
)
def test_make_pmf_rejects_invalid_entries(entries, error):
    with pytest.raises(error):
        make_pmf(entries)


def test_parameter_errors_name_the_parameter():
    with pytest.raises(ParameterError) as excinfo:
        make_pmf([(1, 0.5)])
    assert excinfo.value.name == "entries"
    assert "for 'entries'" in str(excinfo.value)


def test_mass_tolerance_accepts_rounding():
    pmf = make_pmf([(1, 0.1)] + [(d, 0.1) for d in range(2, 11)])
    assert pmf_moments(pmf).mean == pytest.approx(5.5)


# Moments Tests
def test_greedy_like_moments():
    pmf = make_pmf([(1, 0.5), (2, 0.5)])
    moments = pmf_moments(pmf)
    assert moments.mean == 1.5
    assert moments.second_moment == 2.5
    assert moments.variance == pytest.approx(0.25)


def test_deterministic_moments():
    moments = pmf_moments(deterministic_pmf(5))
    assert (moments.mean, moments.second_moment, moments.variance) == (5.0, 25.0, 0.0)


# Geometric Tests
def test_geometric_is_truncated_to_tail_tolerance():
    pmf = geometric_pmf(0.5)
    assert pmf.d_max == 40
    assert pmf.prob(1) == 0.5
    assert math.fsum(pmf.probabilities) == pytest.approx(1.0, abs=1e-12)
    assert pmf_moments(pmf).mean == pytest.approx(2.0, abs=1e-9)


def test_geometric_with_explicit_support_folds_tail():
    pmf = geometric_pmf(0.5, d_max=3, allow_heavy_tail=True)
    assert pmf.entries == ((1, 0.5), (2, 0.25), (3, 0.25))


def test_geometric_heavy_tail_is_rejected():
    with pytest.raises(TailTooHeavy):
        geometric_pmf(0.5, d_max=3)
    with pytest.raises(TailTooHeavy):
        geometric_pmf(1e-4)


def test_geometric_mu_one_is_point_mass():
    assert geometric_pmf(1.0).entries == ((1, 1.0),)


def test_geometric_invalid_mu():
    with pytest.raises(ParameterError):
        geometric_pmf(0.0)
    with pytest.raises(ParameterError):
        geometric_pmf(1.5)


# Other Families Tests
def test_uniform_pmf():
    pmf = uniform_pmf(3)
    assert pmf.durations.tolist() == [1, 2, 3]
    assert pmf_moments(pmf).second_moment == pytest.approx(14 / 3)
    with pytest.raises(NonPositiveDuration):
        uniform_pmf(0)


def test_two_point_pmf():
    pmf = two_point_pmf(2.5)
    assert pmf.entries == ((2, 0.5), (3, 0.5))
    assert two_point_pmf(4.0).entries == ((4, 1.0),)
    assert pmf_moments(two_point_pmf(2.25)).mean == pytest.approx(2.25)
    with pytest.raises(InvalidTau):
        two_point_pmf(0.5)


def test_shift_pmf():
    shifted = shift_pmf(make_pmf([(1, 0.5), (2, 0.5)]), 2)
    assert shifted.entries == ((3, 0.5), (4, 0.5))
    with pytest.raises(NonPositiveDuration):
        shift_pmf(deterministic_pmf(1), -1)


# Queries Tests
def test_is_smp():
    assert is_smp(make_pmf([(2, 0.5), (3, 0.3), (5, 0.2)])) == (True, 2)
    assert is_smp(make_pmf([(1, 0.2), (2, 0.8)]))[0] is False


@pytest.mark.parametrize("offset", [1, 2, 7])
def test_is_smp_survives_shift(offset):
    rng = np.random.default_rng(offset)
    for beta in (0.2, 0.35, 0.6):
        pmf = make_pmf(random_smp_pmf(beta, rng))
        assert is_smp(shift_pmf(pmf, offset)) == (True, 1 + offset)


def test_tail_probability():
    pmf = uniform_pmf(4)
    assert tail_probability(pmf, 0) == pytest.approx(1.0)
    assert tail_probability(pmf, 2) == pytest.approx(0.5)
    assert tail_probability(pmf, 4) == 0.0


def test_pgf():
    pmf = deterministic_pmf(2)
    assert pgf(pmf, 1.0) == pytest.approx(1.0)
    assert pgf(pmf, math.sqrt(2)) == pytest.approx(0.5)


def test_pmf_json_round_trip():
    pmf = make_pmf([(2, 0.3), (5, 0.7)])
    assert pmf_from_json(pmf_to_json(pmf)) == pmf


def test_pmf_json_is_validated():
    with pytest.raises(UnnormalizedMass):
        pmf_from_json('{"entries": [[1, 0.4]]}')
