"""Brute-force maximal leakage for small horizons.

Every input word x^n is enumerated and the exact output law P(y^n | x^n) is built by
expanding each service or inter-dump draw. Output words are n-bit integers with bit
t-1 set when slot t carries a real update.
"""

import logging
import math
from typing import Dict, Hashable, List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from .dist import FinitePmf
from .errors import HorizonTooLarge, NumericalError
from .leakage import LeakageResult
from .policies import FcfsPolicy, LcfsPolicy, RadPolicy
from .settings import get_settings

logger = logging.getLogger(__name__)

OraclePolicy = Union[FcfsPolicy, LcfsPolicy, RadPolicy]
Transition = Tuple[Hashable, int, float]

MAX_VERIFY_HORIZON = 12


class ChannelTable(BaseModel):
    """max_x P(y|x) for every output word y with positive probability."""

    model_config = ConfigDict(frozen=True)

    n: int
    ml: Dict[int, float]

    @property
    def total(self) -> float:
        return math.fsum(self.ml.values())


def _capped_draws(pmf: FinitePmf, start: int, n: int) -> List[Tuple[int, float]]:
    """Departure slot start + d - 1 of a draw d, with every slot past n merged into n + 1."""
    merged: Dict[int, float] = {}
    for d, p in pmf.entries:
        slot = min(start + d - 1, n + 1)
        merged[slot] = merged.get(slot, 0.0) + p
    return sorted(merged.items())


class _SlotChain:
    """Server state as a finite Markov chain driven by the input bit of each slot."""

    def __init__(self, states: List[Hashable], initial: Dict[Hashable, float], n: int):
        self.n = n
        self.states = states
        self.index = {s: k for k, s in enumerate(states)}
        self.initial = np.zeros(len(states))
        for state, prob in initial.items():
            self.initial[self.index[state]] += prob
        self._matrices: Dict[Tuple[int, int], Tuple[np.ndarray, np.ndarray]] = {}

    def step(self, state: Hashable, t: int, x: int) -> List[Transition]:
        raise NotImplementedError

    def matrices(self, t: int, x: int) -> Tuple[np.ndarray, np.ndarray]:
        """Transition matrices of slot t split by the emitted bit: M_e[from, to]."""
        key = (t, x)
        if key not in self._matrices:
            size = len(self.states)
            silent, emitting = np.zeros((size, size)), np.zeros((size, size))
            for state in self.states:
                row = self.index[state]
                for target, emit, prob in self.step(state, t, x):
                    matrix = emitting if emit else silent
                    matrix[row, self.index[target]] += prob
            self._matrices[key] = (silent, emitting)
        return self._matrices[key]


class _LcfsChain(_SlotChain):
    # state: departure slot of the update in service, 0 when idle
    def __init__(self, policy: LcfsPolicy, n: int):
        self.pmf = policy.service_pmf
        super().__init__(list(range(n + 2)), {0: 1.0}, n)

    def step(self, state: Hashable, t: int, x: int) -> List[Transition]:
        branches = _capped_draws(self.pmf, t, self.n) if x else [(state, 1.0)]
        result: List[Transition] = []
        for departure, prob in branches:
            if departure == t:
                result.append((0, 1, prob))
            else:
                result.append((departure, 0, prob))
        return result


class _FcfsChain(_SlotChain):
    # state: (departure slot of the head of line, number waiting behind it)
    def __init__(self, policy: FcfsPolicy, n: int):
        self.pmf = policy.service_pmf
        self.alpha = policy.alpha
        states = [(d, q) for d in range(n + 2) for q in range(n + 1)]
        super().__init__(states, {(0, 0): 1.0}, n)

    def _settle(self, departure: int, waiting: int) -> Tuple[int, int]:
        # nothing past the horizon is observable
        if departure > self.n:
            return self.n + 1, 0
        return departure, waiting

    def step(self, state: Hashable, t: int, x: int) -> List[Transition]:
        departure, waiting = state  # type: ignore[misc]
        admissions = [(True, self.alpha), (False, 1 - self.alpha)] if x else [(False, 1.0)]
        result: List[Transition] = []
        for admitted, p_admit in admissions:
            if p_admit == 0:
                continue
            if admitted and departure == 0:
                after_arrival = [((d, 0), p) for d, p in _capped_draws(self.pmf, t, self.n)]
            elif admitted:
                # n arrivals bound the queue; the cap only touches unreachable states
                after_arrival = [((departure, min(waiting + 1, self.n)), 1.0)]
            else:
                after_arrival = [((departure, waiting), 1.0)]

            for (head, queued), p_draw in after_arrival:
                prob = p_admit * p_draw
                if head != t:
                    result.append((self._settle(head, queued), 0, prob))
                elif queued == 0:
                    result.append(((0, 0), 1, prob))
                else:
                    for nxt, p_next in _capped_draws(self.pmf, t + 1, self.n):
                        result.append((self._settle(nxt, queued - 1), 1, prob * p_next))
        return result


class _RadChain(_SlotChain):
    # state: (next attempt slot, buffer holds an undumped update)
    def __init__(self, policy: RadPolicy, n: int):
        self.pmf = policy.dump_pmf
        states = [(a, b) for a in range(1, n + 2) for b in (0, 1)]
        initial = {(a, 0): p for a, p in _capped_draws(self.pmf, 1, n)}
        super().__init__(states, initial, n)

    def step(self, state: Hashable, t: int, x: int) -> List[Transition]:
        attempt, buffered = state  # type: ignore[misc]
        buffered = buffered or x
        if attempt != t:
            return [((attempt, buffered), 0, 1.0)]
        return [((nxt, 0), buffered, p) for nxt, p in _capped_draws(self.pmf, t + 1, self.n)]


def _chain(policy: OraclePolicy, n: int) -> _SlotChain:
    if isinstance(policy, LcfsPolicy):
        return _LcfsChain(policy, n)
    if isinstance(policy, FcfsPolicy):
        return _FcfsChain(policy, n)
    return _RadChain(policy, n)


def _check_horizon(n: int, limit: int) -> None:
    if not 0 <= n <= limit:
        raise HorizonTooLarge("n", f"Horizon {n} must lie in [0, {limit}] for exhaustive enumeration")


def _advance(
    chain: _SlotChain, table: np.ndarray, words: np.ndarray, t: int, x: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Extend every output word over slots 1..t-1 by the bit of slot t.

    Columns of `table` are the state laws of the achievable words in `words`; states and
    words that carry no mass are dropped.
    """
    silent, emitting = chain.matrices(t, x)
    live = np.flatnonzero(table.any(axis=1))
    rows = table[live]
    stacked = np.concatenate([silent[live].T @ rows, emitting[live].T @ rows], axis=1)
    extended = np.concatenate([words, words | (1 << (t - 1))])
    keep = stacked.any(axis=0)
    return stacked[:, keep], extended[keep]


def bits_to_word(bits: Sequence[int]) -> int:
    """Pack slot bits (slot 1 first) into an integer word."""
    return sum(1 << k for k, bit in enumerate(bits) if bit)


def enumerate_channel(policy: OraclePolicy, x_seq: Sequence[int]) -> Dict[int, float]:
    """Exact P(y | x) for one input word, keyed by output word."""
    n = len(x_seq)
    _check_horizon(n, get_settings().oracle_max_horizon)
    chain = _chain(policy, n)
    table, words = chain.initial[:, None], np.zeros(1, dtype=np.int64)
    for t, x in enumerate(x_seq, start=1):
        table, words = _advance(chain, table, words, t, int(x))
    law = table.sum(axis=0)
    return {int(y): float(p) for y, p in zip(words, law) if p > 0}


def channel_table(policy: OraclePolicy, n: int) -> ChannelTable:
    """Walk every input prefix once, sharing the state law of common prefixes."""
    _check_horizon(n, get_settings().oracle_max_horizon)
    chain = _chain(policy, n)
    best = np.zeros(1 << n)

    def visit(table: np.ndarray, words: np.ndarray, t: int, prefix: int) -> None:
        if t > n:
            law = table.sum(axis=0)
            mass = float(law.sum())
            if abs(mass - 1.0) > 1e-9:
                raise NumericalError(f"Output law of input {prefix:0{n}b} sums to {mass!r}")
            np.maximum.at(best, words, law)
            return
        for x in (0, 1):
            visit(*_advance(chain, table, words, t, x), t + 1, prefix | (x << (t - 1)))

    visit(chain.initial[:, None], np.zeros(1, dtype=np.int64), 1, 0)
    ml = {int(y): float(p) for y, p in enumerate(best) if p > 0}
    logger.debug("Channel table for %s at n=%d: %d achievable outputs", policy.tag, n, len(ml))
    return ChannelTable(n=n, ml=ml)


def brute_force_maxl(policy: OraclePolicy, n: int) -> LeakageResult:
    """log2 sum_y max_x P(y|x) over all 2^n inputs."""
    if n == 0:
        return LeakageResult(bits=0.0, n=0)
    table = channel_table(policy, n)
    bits = math.log2(table.total)
    return LeakageResult(bits=min(max(bits, 0.0), float(n)), n=n)


def _likelihood(chain: _SlotChain, x_word: int, y_word: int) -> float:
    vector = chain.initial
    for t in range(1, chain.n + 1):
        silent, emitting = chain.matrices(t, (x_word >> (t - 1)) & 1)
        matrix = emitting if (y_word >> (t - 1)) & 1 else silent
        vector = matrix.T @ vector
    return float(vector.sum())


def designated_input(policy: OraclePolicy, y_word: int, n: int) -> int:
    """Input word that should be maximum-likelihood for output y.

    Coupled servers: the output shifted back by s_min - 1 slots. Dump servers: x = y.
    """
    if not policy.coupled:
        return y_word
    shift = policy.pmf.s_min - 1
    return (y_word >> shift) & ((1 << n) - 1)


def verify_ml_input(policy: OraclePolicy, n: int) -> bool:
    """True iff the designated input attains max_x P(y|x) for every achievable y."""
    _check_horizon(n, min(MAX_VERIFY_HORIZON, get_settings().oracle_max_horizon))
    if n == 0:
        return True
    table = channel_table(policy, n)
    chain = _chain(policy, n)
    for y_word, best in table.ml.items():
        attained = _likelihood(chain, designated_input(policy, y_word, n), y_word)
        if attained < best - 1e-12:
            logger.info("Output %s: designated input reaches %.15g < %.15g", format(y_word, f"0{n}b"), attained, best)
            return False
    return True
