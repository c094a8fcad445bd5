"""Closed-form average Age of Information at the monitor.

Timing convention: an update generated in slot t-1 reaches the server at the start
of slot t; if it is delivered at the end of slot t its age at slot t+1 is 2.
"""

import logging
import math
from typing import Dict, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .dist import FinitePmf, Moments, pmf_moments
from .errors import InvalidLambda, InvalidTau, ParameterError, Unstable
from .policies import LcfsPolicy, RadPolicy
from .settings import get_settings
from .sources import BernoulliSource, MarkovSource

logger = logging.getLogger(__name__)

Source = Union[BernoulliSource, MarkovSource]


class AgeResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta: float = Field(ge=1)


def _check_lambda(lam: float) -> None:
    if not 0 < lam <= 1:
        raise InvalidLambda("lambda", f"Arrival rate {lam} must lie in (0, 1]")


def lcfs_age(lam: float, service_pmf: FinitePmf) -> AgeResult:
    """Preemptive LCFS Ber/G/1: 1 + 1 / (lam * E[(1-lam)^(S-1)])."""
    _check_lambda(lam)
    survive = float(np.dot(service_pmf.probabilities, np.power(1 - lam, service_pmf.durations - 1)))
    if survive <= 0:
        raise Unstable("service_pmf", "Every update is preempted before it departs")
    return AgeResult(delta=1 + 1 / (lam * survive))


def lcfs_gg1_age(interarrival_pmf: FinitePmf, service_pmf: FinitePmf) -> AgeResult:
    """Preemptive LCFS with i.i.d. interarrival X and service S, both of finite support."""
    x, fx = interarrival_pmf.durations, interarrival_pmf.probabilities
    s, gs = service_pmf.durations, service_pmf.probabilities
    weights = np.outer(fx, gs)
    delivered = float(np.sum(weights * (s[None, :] <= x[:, None])))
    if delivered <= 0:
        raise Unstable("service_pmf", "Every update is preempted before it departs")
    busy = float(np.sum(weights * np.minimum(x[:, None], s[None, :])))
    moments = pmf_moments(interarrival_pmf)
    return AgeResult(delta=moments.second_moment / (2 * moments.mean) + busy / delivered + 0.5)


def fcfs_age(lam: float, service_pmf: FinitePmf, alpha: float = 1.0) -> AgeResult:
    """FCFS Ber/G/1 with Bernoulli(alpha) admission, evaluated at the thinned rate alpha*lam."""
    _check_lambda(lam)
    if not 0 < alpha <= 1:
        raise ParameterError("alpha", f"Admission probability {alpha} must lie in (0, 1]")
    lam_eff = alpha * lam
    moments = pmf_moments(service_pmf)
    load = lam_eff * moments.mean
    if load >= 1:
        raise Unstable("service_pmf", f"Load {load:.6g} = alpha*lambda*E[S] must stay below 1")
    m_g = float(np.dot(service_pmf.probabilities, np.power(1 - lam_eff, service_pmf.durations)))
    delta = (
        1
        + moments.mean
        + (1 - lam_eff) * (1 - load) / (lam_eff * m_g)
        + lam_eff * (moments.second_moment - moments.mean) / (2 * (1 - load))
    )
    return AgeResult(delta=delta)


def mbt_age(alpha: float, mu: float, lam: float) -> AgeResult:
    """FCFS with Bernoulli thinning and geometric(mu) service."""
    _check_lambda(lam)
    if not 0 < alpha <= 1:
        raise ParameterError("alpha", f"Admission probability {alpha} must lie in (0, 1]")
    if not 0 < mu <= 1:
        raise ParameterError("mu", f"Service rate {mu} must lie in (0, 1]")
    lam_eff = alpha * lam
    if mu <= lam_eff:
        raise Unstable("mu", f"Service rate {mu} must exceed alpha*lambda = {lam_eff}")
    delta = 1 / lam_eff + 1 / mu + lam_eff**2 * (1 - mu) / (mu**2 * (mu - lam_eff))
    return AgeResult(delta=delta)


def rad_age(lam: float, dump_pmf: FinitePmf) -> AgeResult:
    _check_lambda(lam)
    moments = pmf_moments(dump_pmf)
    return AgeResult(delta=1 / lam + moments.second_moment / (2 * moments.mean) + 0.5)


def geometric_rad_age(lam: float, tau: float) -> AgeResult:
    _check_lambda(lam)
    if tau < 1:
        raise InvalidTau("tau", f"Mean dump period {tau} must be >= 1")
    return AgeResult(delta=1 / lam + tau)


def uniform_rad_age(lam: float, tau: float) -> AgeResult:
    _check_lambda(lam)
    if tau < 1:
        raise InvalidTau("tau", f"Mean dump period {tau} must be >= 1")
    return AgeResult(delta=1 / lam + (2 * tau + 1) / 3)


def ddad_age(lam: float, tau: float) -> AgeResult:
    """Dithering between floor(tau) and ceil(tau) with mean tau."""
    _check_lambda(lam)
    if not math.isfinite(tau) or tau < 1:
        raise InvalidTau("tau", f"Mean dump period {tau} must be >= 1")
    p_j = tau - math.floor(tau)
    if min(p_j, 1 - p_j) <= get_settings().integer_tolerance:
        p_j = 0.0
    p_i = 1 - p_j
    return AgeResult(delta=1 / lam + tau / 2 + p_i * p_j / (2 * tau) + 0.5)


def bernoulli_interarrival_moments(lam: float) -> Moments:
    _check_lambda(lam)
    mean = 1 / lam
    second = (2 - lam) / lam**2
    return Moments(mean=mean, second_moment=second, variance=second - mean**2)


def markov_interarrival_moments(src: MarkovSource) -> Moments:
    """Gap between updates: 1 slot w.p. 1-p10, else 1 + an inactive run Geometric(p01)."""
    p01, p10 = src.p01, src.p10
    idle_mean = 1 / p01
    idle_second = (2 - p01) / p01**2
    mean = 1 + p10 * idle_mean
    second = (1 - p10) + p10 * (1 + 2 * idle_mean + idle_second)
    return Moments(mean=mean, second_moment=second, variance=second - mean**2)


def renewal_sampling_age(interarrival: Moments, interdump: Moments) -> AgeResult:
    """Monitor age when a renewal dump process samples a renewal source age process."""
    delta = (
        interarrival.second_moment / (2 * interarrival.mean) + interdump.second_moment / (2 * interdump.mean) + 1
    )
    return AgeResult(delta=delta)


def markov_effective_rate(src: MarkovSource) -> float:
    return src.effective_rate


def markov_source_age(src: MarkovSource) -> AgeResult:
    return AgeResult(delta=1 + src.p10 / (src.p01 * (src.p01 + src.p10)))


def source_age(source: Source) -> float:
    """Average age of the freshest update available at the server input."""
    if isinstance(source, MarkovSource):
        return markov_source_age(source).delta
    return 1 / source.lam


def zero_delay_age(source: Source) -> float:
    """Age of the server that forwards every update in the slot it arrives."""
    return 1 + source_age(source)


def markov_monitor_age(src: MarkovSource, policy: Union[LcfsPolicy, RadPolicy]) -> AgeResult:
    """Source age plus the sampling age of a geometric-LCFS or dump server.

    Preemptive LCFS has a closed form here only with geometric service, where it
    behaves exactly like geometric dumps.
    """
    if isinstance(policy, LcfsPolicy) and not is_geometric(policy.service_pmf):
        raise ParameterError("policy", "Markov monitor age needs geometric LCFS service")
    moments = pmf_moments(policy.pmf)
    sampling = moments.second_moment / (2 * moments.mean) + 0.5
    return AgeResult(delta=markov_source_age(src).delta + sampling)


def is_geometric(pmf: FinitePmf, tolerance: float = 1e-9) -> bool:
    """True for a (tail-folded) geometric pmf on {1, ..., d_max}."""
    if pmf.s_min != 1 or pmf.d_max != len(pmf):
        return False
    probs = pmf.probabilities
    if len(probs) <= 2:
        return True
    ratios = probs[1:-1] / probs[:-2]
    return bool(np.all(np.abs(ratios - (1 - probs[0])) <= tolerance))


def bernoulli_source_age_pmf(lam: float, a_max: int) -> Dict[int, float]:
    _check_lambda(lam)
    return {a: lam * (1 - lam) ** (a - 1) for a in range(1, a_max + 1)}


def markov_source_age_pmf(src: MarkovSource, a_max: int) -> Dict[int, float]:
    """Stationary P(A_s = a) of a two-state Markov source."""
    p00 = 1 - src.p01
    head = src.p01 * src.p10 / (src.p01 + src.p10)
    pmf = {1: src.effective_rate}
    for a in range(2, a_max + 1):
        pmf[a] = p00 ** (a - 2) * head
    return pmf
