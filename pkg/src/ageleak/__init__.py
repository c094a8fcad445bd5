from importlib.metadata import version

from .age import AgeResult, fcfs_age, lcfs_age, markov_monitor_age, mbt_age, rad_age
from .dist import FinitePmf, deterministic_pmf, geometric_pmf, make_pmf, pmf_moments, uniform_pmf
from .leakage import LeakageResult, rad_leakage_bits, rad_rate, smp_leakage_bits
from .optimizer import ddad_policy, greedy_smp_pmf
from .oracle import brute_force_maxl
from .policies import FcfsPolicy, LcfsPolicy, RadPolicy
from .simulator import SimConfig, SimStats, simulate
from .sources import BernoulliSource, MarkovSource
from .tradeoff import SweepSpec, TradeoffPoint, sweep

__version__ = version(__name__)

__all__ = [
    "AgeResult",
    "BernoulliSource",
    "FcfsPolicy",
    "FinitePmf",
    "LcfsPolicy",
    "LeakageResult",
    "MarkovSource",
    "RadPolicy",
    "SimConfig",
    "SimStats",
    "SweepSpec",
    "TradeoffPoint",
    "brute_force_maxl",
    "ddad_policy",
    "deterministic_pmf",
    "fcfs_age",
    "geometric_pmf",
    "greedy_smp_pmf",
    "lcfs_age",
    "make_pmf",
    "markov_monitor_age",
    "mbt_age",
    "pmf_moments",
    "rad_age",
    "rad_leakage_bits",
    "rad_rate",
    "simulate",
    "smp_leakage_bits",
    "sweep",
    "uniform_pmf",
]
