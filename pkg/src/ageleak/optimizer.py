"""Optimal server policies under a leakage constraint.

Coupled servers: the greedy SMP service pmf. Decoupled servers: Dithering DAD,
certified through the Dinkelbach transform of min E[D^2]/E[D].
"""

import logging
import math
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, model_validator
from scipy.optimize import minimize_scalar

from .age import AgeResult, fcfs_age
from .dist import FinitePmf, deterministic_pmf, make_pmf, pmf_moments, shift_pmf
from .errors import ConvergenceFailure, InvalidBeta, InvalidLambda, InvalidRate, NoFeasibleAlpha, ParameterError
from .settings import get_settings

logger = logging.getLogger(__name__)

MAX_SEARCH_SUPPORT = 12
# Tolerance for a single-point pmf to count as meeting E[z0^-D] = 1/2.
POINT_CONSTRAINT_TOLERANCE = 1e-6


class DitherPolicy(BaseModel):
    """Dump pmf on i and j = i + 1 meeting E[z0^-D] = 1/2 with z0 = 2**target_rate."""

    model_config = ConfigDict(frozen=True)

    i: int
    j: int
    p_i: float
    p_j: float
    z0: float
    target_rate: float

    @model_validator(mode="after")
    def validate_constraint(self) -> "DitherPolicy":
        if self.i < 1 or self.j != self.i + 1:
            raise ValueError(f"Support ({self.i}, {self.j}) must be consecutive positive integers")
        if not 0 < self.p_i <= 1 or abs(self.p_i + self.p_j - 1) > 1e-12:
            raise ValueError(f"Probabilities ({self.p_i}, {self.p_j}) must sum to 1 with p_i in (0, 1]")
        if self.constraint_residual > 1e-9:
            raise ValueError(f"Leakage constraint residual {self.constraint_residual:.3e} exceeds 1e-9")
        return self

    @property
    def constraint_residual(self) -> float:
        return abs(self.p_i * self.z0 ** (-self.i) + self.p_j * self.z0 ** (-self.j) - 0.5)

    @property
    def mean(self) -> float:
        return self.i * self.p_i + self.j * self.p_j

    def dump_pmf(self) -> FinitePmf:
        if self.p_j == 0:
            return deterministic_pmf(self.i)
        return make_pmf([(self.i, self.p_i), (self.j, self.p_j)])


class DinkelbachCertificate(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma_star: float
    residual: float
    sandwich_ok: bool
    convex_ok: bool


def _check_rate(rate: float) -> None:
    if not 0 < rate <= 1:
        raise InvalidRate("target_rate", f"Leakage rate {rate} must lie in (0, 1]")


def greedy_smp_pmf(beta: float) -> FinitePmf:
    """g(s) = beta for s <= k = floor(1/beta), the remainder 1 - k*beta at k + 1."""
    if not 0 < beta <= 1:
        raise InvalidBeta("beta", f"Leakage constraint {beta} must lie in (0, 1]")
    tol = get_settings().integer_tolerance
    k = math.floor(1 / beta + tol)
    remainder = 1 - k * beta
    entries = [(s, beta) for s in range(1, k + 1)]
    if remainder > tol:
        entries.append((k + 1, remainder))
    return make_pmf(entries)


def shifted_greedy_pmf(beta: float, s_min: int) -> FinitePmf:
    if s_min < 1:
        raise ParameterError("s_min", f"Minimum service time {s_min} must be >= 1")
    return shift_pmf(greedy_smp_pmf(beta), s_min - 1)


def ddad_policy(target_rate: float) -> DitherPolicy:
    _check_rate(target_rate)
    z0 = 2.0**target_rate
    period = 1 / target_rate
    nearest = round(period)
    if abs(period - nearest) <= get_settings().integer_tolerance:
        i = int(nearest)
        return DitherPolicy(i=i, j=i + 1, p_i=1.0, p_j=0.0, z0=2.0 ** (1 / i), target_rate=target_rate)

    i = math.floor(period)
    x_i = 2.0 ** (-target_rate * i)
    x_j = 2.0 ** (-target_rate * (i + 1))
    p_i = (0.5 - x_j) / (x_i - x_j)
    logger.debug("D-DAD for rate %s: i=%d p_i=%.12f", target_rate, i, p_i)
    return DitherPolicy(i=i, j=i + 1, p_i=p_i, p_j=1 - p_i, z0=z0, target_rate=target_rate)


def dinkelbach_certify(policy: DitherPolicy) -> DinkelbachCertificate:
    moments = pmf_moments(policy.dump_pmf())
    gamma = moments.second_moment / moments.mean
    residual = abs(moments.second_moment - gamma * moments.mean)
    if policy.p_j > 0:
        sandwich = policy.i < gamma < policy.j
    else:
        sandwich = abs(gamma - policy.i) <= 1e-12 * policy.i
    convex = gamma < 2 + 2 / math.log2(policy.z0)
    return DinkelbachCertificate(gamma_star=gamma, residual=residual, sandwich_ok=sandwich, convex_ok=convex)


def _vertices(z0: float, d_max: int) -> List[Tuple[Tuple[int, float], ...]]:
    """Extreme points of {g on 1..d_max : sum g(d) z0^-d = 1/2, sum g = 1, g >= 0}."""
    x = {d: z0 ** (-d) for d in range(1, d_max + 1)}
    found: List[Tuple[Tuple[int, float], ...]] = []
    for a in range(1, d_max + 1):
        if abs(x[a] - 0.5) <= POINT_CONSTRAINT_TOLERANCE:
            found.append(((a, 1.0),))
        for b in range(a + 1, d_max + 1):
            if x[a] > 0.5 > x[b]:
                g_a = (0.5 - x[b]) / (x[a] - x[b])
                found.append(((a, g_a), (b, 1.0 - g_a)))
    return found


def _ratio(vertex: Tuple[Tuple[int, float], ...]) -> Tuple[float, float]:
    first = math.fsum(d * p for d, p in vertex)
    second = math.fsum(d * d * p for d, p in vertex)
    return second, first


def dinkelbach_solve(target_rate: float, d_max: int, max_iter: int = 100) -> Tuple[float, FinitePmf]:
    """min E[D^2]/E[D] over pmfs on {1..d_max} meeting the rate, by Dinkelbach iteration.

    Each step minimises the linear cost sum g(d) (d^2 - gamma d) over the two-constraint
    LP, whose optimum sits at a vertex with at most two support points.
    """
    _check_rate(target_rate)
    vertices = _vertices(2.0**target_rate, d_max)
    if not vertices:
        raise ParameterError("d_max", f"No pmf on 1..{d_max} meets leakage rate {target_rate}")

    second, first = _ratio(vertices[-1])
    gamma = second / first
    for iteration in range(max_iter):
        costs = [(s - gamma * f, s, f, v) for v in vertices for s, f in [_ratio(v)]]
        cost, second, first, best = min(costs, key=lambda item: item[0])
        logger.debug("Dinkelbach iteration %d: gamma=%.15g J=%.3e", iteration, gamma, cost)
        if cost >= -1e-12:
            return gamma, make_pmf(best)
        gamma = second / first
    raise ConvergenceFailure("dinkelbach", max_iter, abs(cost))


def verify_two_point_optimality(target_rate: float, search_d_max: int) -> bool:
    """Exhaustively confirm no pmf on {1..search_d_max} beats D-DAD at the same leakage rate."""
    _check_rate(target_rate)
    if not 1 <= search_d_max <= MAX_SEARCH_SUPPORT:
        raise ParameterError("search_d_max", f"Search support {search_d_max} must lie in [1, {MAX_SEARCH_SUPPORT}]")

    reference = dinkelbach_certify(ddad_policy(target_rate)).gamma_star
    vertices = _vertices(2.0**target_rate, search_d_max)
    if not vertices:
        # no pmf on the search support reaches the rate, so none can beat D-DAD
        return True
    for vertex in vertices:
        second, first = _ratio(vertex)
        if second / first < reference - 1e-9:
            logger.info("Pmf %s beats D-DAD: %.12f < %.12f", vertex, second / first, reference)
            return False

    gamma, _ = dinkelbach_solve(target_rate, search_d_max)
    return gamma >= reference - 1e-9


def optimal_alpha_for_fcfs(lam: float, service_pmf: FinitePmf) -> Tuple[float, AgeResult]:
    """Admission probability minimising the thinned FCFS age."""
    if not 0 < lam <= 1:
        raise InvalidLambda("lambda", f"Arrival rate {lam} must lie in (0, 1]")
    settings = get_settings()
    eps = settings.search_tolerance
    mean = pmf_moments(service_pmf).mean
    upper = min(1.0, (1 - eps) / (lam * mean))
    if upper <= eps:
        raise NoFeasibleAlpha("alpha", f"No admission probability keeps lambda*E[S]={lam * mean} stable")

    def objective(alpha: float) -> float:
        return fcfs_age(lam, service_pmf, alpha).delta

    result = minimize_scalar(objective, bounds=(eps, upper), method="bounded", options={"xatol": eps})
    alpha = float(result.x)
    best = objective(alpha)
    at_upper = objective(upper)
    if at_upper <= best:
        alpha, best = upper, at_upper
    logger.debug("Optimal alpha for lambda=%s, E[S]=%s: %s (age %s)", lam, mean, alpha, best)
    return alpha, AgeResult(delta=best)
