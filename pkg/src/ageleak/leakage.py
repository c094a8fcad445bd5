"""Maximal leakage of the server output about the arrival sequence.

Finite-horizon values are in bits; asymptotic rates in bits/slot.
"""

import logging
import math
from typing import Callable, List

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.optimize import bisect
from scipy.special import gammaln, logsumexp

from .dist import FinitePmf, pgf
from .errors import ConvergenceFailure, InvalidBeta, InvalidTau, NonHalfIntegerTau, ParameterError, ZeroRate
from .settings import get_settings

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
# Window values are rescaled by 2**-RESCALE_BITS whenever they exceed 2**RESCALE_BITS.
RESCALE_BITS = 512


class LeakageResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    bits: float
    n: int

    @model_validator(mode="after")
    def validate_bits(self) -> "LeakageResult":
        if self.bits < 0 or self.bits > self.n + 1e-9:
            raise ValueError(f"{self.bits} bits over {self.n} slots is outside [0, n]")
        return self

    @property
    def rate(self) -> float:
        return self.bits / self.n if self.n else 0.0


class RateBounds(BaseModel):
    model_config = ConfigDict(frozen=True)

    lower: float
    upper: float

    @model_validator(mode="after")
    def validate_order(self) -> "RateBounds":
        if not 0 <= self.lower <= self.upper <= 1:
            raise ValueError(f"Bounds ({self.lower}, {self.upper}) must satisfy 0 <= lower <= upper <= 1")
        return self


def _check_beta(beta: float) -> None:
    if not 0 < beta <= 1:
        raise InvalidBeta("beta", f"Leakage constraint {beta} must lie in (0, 1]")


def _check_horizon(n: int) -> None:
    if n < 0:
        raise ParameterError("n", f"Horizon {n} must be >= 0")


def smp_leakage_bits(n: int, s1: int, beta: float) -> LeakageResult:
    """log2 of sum_k C(n - k(s1-1), k) beta^k, the MaxL of FCFS/LCFS servers with SMP service."""
    _check_beta(beta)
    _check_horizon(n)
    if s1 < 1:
        raise ParameterError("s1", f"Minimum service time {s1} must be >= 1")
    if n == 0:
        return LeakageResult(bits=0.0, n=0)
    if s1 == 1:
        # binomial theorem
        return LeakageResult(bits=n * math.log2(1 + beta), n=n)

    k = np.arange(0, n // s1 + 1, dtype=float)
    m = n - k * (s1 - 1)
    log_binom = gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1)
    total = logsumexp(log_binom + k * math.log(beta))
    bits = min(max(float(total) / LN2, 0.0), float(n))
    return LeakageResult(bits=bits, n=n)


def smp_rate_bounds(s1: int, beta: float) -> RateBounds:
    _check_beta(beta)
    if s1 < 1:
        raise ParameterError("s1", f"Minimum service time {s1} must be >= 1")
    upper = math.log2(1 + beta)
    return RateBounds(lower=upper / s1, upper=upper)


def smp_finite_rate(s1: int, beta: float, n: int = 10_000) -> float:
    """Finite-horizon leakage ratio L(n)/n; the asymptotic rate is not known in closed form for s1 > 1."""
    return smp_leakage_bits(n, s1, beta).rate


def fibonacci_counts(n: int, s1: int) -> List[int]:
    """Exact number of achievable outputs N_0..N_n under deterministic service g(s1)=1."""
    counts = [1] * min(s1, n + 1)
    for t in range(s1, n + 1):
        counts.append(counts[t - 1] + counts[t - s1])
    return counts


def dad_leakage_bits(n: int, tau: int) -> LeakageResult:
    _check_horizon(n)
    if tau < 1:
        raise InvalidTau("tau", f"Dump period {tau} must be >= 1")
    return LeakageResult(bits=float(n // tau), n=n)


def rad_leakage_bits(n: int, dump_pmf: FinitePmf) -> LeakageResult:
    """log2 m(n) with m(n) = 2 sum_d g(d) m(n-d) + P(D > n), m(0) = 1.

    Only the last d_max values of m are kept. They share one power-of-two scale
    factor so the recursion never overflows.
    """
    _check_horizon(n)
    if n == 0:
        return LeakageResult(bits=0.0, n=0)

    durations = dump_pmf.durations
    probs = dump_pmf.probabilities
    width = dump_pmf.d_max + 1
    window = np.zeros(width)
    window[0] = 1.0
    # P(D > t) for t < d_max; zero afterwards
    tails = 1.0 - np.concatenate(([0.0], np.cumsum(np.bincount(durations, weights=probs))))[1:width]
    tails = np.clip(tails, 0.0, 1.0)

    offset = 0  # window holds m(t) * 2**-offset
    full = len(durations)
    active = int(np.searchsorted(durations, 1, side="right"))
    for t in range(1, n + 1):
        while active < full and durations[active] <= t:
            active += 1
        lags = durations[:active]
        value = 2.0 * float(np.dot(probs[:active], window[(t - lags) % width]))
        if t < width - 1:
            value += tails[t] * 2.0**-offset
        window[t % width] = value
        if value > 2.0**RESCALE_BITS:
            window *= 2.0**-RESCALE_BITS
            offset += RESCALE_BITS

    bits = math.log2(window[n % width]) + offset
    return LeakageResult(bits=min(max(bits, 0.0), float(n)), n=n)


def _half_root(f: Callable[[float], float], name: str) -> float:
    """Root of f(z) = 1/2 on (1, 2] for a strictly decreasing f with f(1) = 1."""
    settings = get_settings()

    def shifted(z: float) -> float:
        return f(z) - 0.5

    try:
        root, info = bisect(
            shifted, 1.0, 2.0, xtol=1e-15, maxiter=settings.bisection_max_iter, full_output=True, disp=False
        )
    except RuntimeError as exc:
        raise ConvergenceFailure(name, settings.bisection_max_iter, float("nan")) from exc
    residual = abs(shifted(root))
    if not info.converged:
        raise ConvergenceFailure(name, info.iterations, residual)
    if residual > settings.bisection_residual:
        logger.warning("Root for %s has residual %.3e above %.1e", name, residual, settings.bisection_residual)
    logger.debug("Root for %s: z0=%r after %d iterations", name, root, info.iterations)
    return root


def rad_root(dump_pmf: FinitePmf) -> float:
    """The unique root z0 in (1, 2] of E[z^{-D}] = 1/2."""
    return _half_root(lambda z: pgf(dump_pmf, z), "dump_pmf")


def rad_rate(dump_pmf: FinitePmf) -> float:
    return math.log2(rad_root(dump_pmf))


def geometric_rad_rate(tau: float) -> float:
    if tau < 1:
        raise InvalidTau("tau", f"Mean dump period {tau} must be >= 1")
    return math.log2(1 + 1 / tau)


def uniform_rad_rate(tau: float) -> float:
    """Rate of uniform dumps on {1, ..., 2 tau - 1}."""
    if tau < 1:
        raise InvalidTau("tau", f"Mean dump period {tau} must be >= 1")
    k = 2 * tau - 1
    if abs(k - round(k)) > get_settings().integer_tolerance:
        raise NonHalfIntegerTau("tau", f"2*tau - 1 = {k} is not an integer")
    k = int(round(k))

    def uniform_pgf(z: float) -> float:
        if z == 1.0:
            return 1.0
        return -math.expm1(-k * math.log(z)) / (k * (z - 1))

    return math.log2(_half_root(uniform_pgf, "tau"))


def leakage_time(rate: float) -> float:
    if rate <= 0:
        raise ZeroRate("rate", f"Leakage rate {rate} must be positive")
    return 1.0 / rate
