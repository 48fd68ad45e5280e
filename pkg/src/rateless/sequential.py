"""Sequential threshold decoders, one received symbol at a time.

These are the reference decoders: every message is scored at every step,
vectorised over the message set.  The simulator runs compiled kernels with
the same semantics and the tests replay one against the other.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel import AwgnChannel, BackwardChannel, InputPrior, awgn_log_score
from .codebook import Codebook, codeword_block
from .errors import BadAlpha, BadEpsilon, BadM, ZeroProbabilityMessage
from .mixture import PSEUDOCOUNT

CONTINUE = "continue"
DECIDE = "decide"
TIE = "tie"
ABORT = "abort"


@dataclass(frozen=True)
class ThresholdScheme:
    """Per-message log-thresholds a_w in bits (+inf excludes a message)."""

    per_message_log_thresholds: np.ndarray

    @property
    def message_count(self) -> int:
        return len(self.per_message_log_thresholds)


@dataclass(frozen=True)
class Decision:
    kind: str
    t: int = 0
    message: int | None = None
    tie_set: tuple = ()

    @property
    def stopped(self) -> bool:
        return self.kind != CONTINUE


def _check_epsilon(epsilon):
    if not 0 < epsilon < 1:
        raise BadEpsilon(f"epsilon={epsilon} outside (0, 1)")


def make_thresholds_equiprobable(M: int, epsilon: float) -> ThresholdScheme:
    if M < 2 or int(M) != M:
        raise BadM(f"M must be an integer >= 2, got {M}")
    _check_epsilon(epsilon)
    a = math.log2(M) - math.log2(epsilon)
    return ThresholdScheme(np.full(int(M), a))


def make_thresholds_weighted(pi, epsilon: float) -> ThresholdScheme:
    pi = np.asarray(pi, dtype=np.float64)
    _check_epsilon(epsilon)
    if np.any(pi <= 0):
        raise ZeroProbabilityMessage("every message needs positive probability")
    return ThresholdScheme(-np.log2(pi) - math.log2(epsilon))


def side_info_thresholds(conditional_pi, w1: int, epsilon: float) -> ThresholdScheme:
    """a(w1, w2) = -log2(eps/2) - log2 pi(w2 | w1); zero-probability w2 get +inf."""
    _check_epsilon(epsilon)
    row = np.asarray(conditional_pi, dtype=np.float64)[w1]
    if not np.any(row > 0):
        raise ZeroProbabilityMessage(f"no w2 has positive probability given w1={w1}")
    with np.errstate(divide="ignore"):
        a = -math.log2(epsilon / 2) - np.log2(row)
    return ThresholdScheme(a)


def _crossing_decision(scores, thresholds, t):
    crossed = np.flatnonzero(scores >= thresholds)
    if crossed.size == 0:
        return Decision(CONTINUE, t)
    if crossed.size == 1:
        return Decision(DECIDE, t, int(crossed[0]))
    return Decision(TIE, t, None, tuple(int(w) for w in crossed))


@dataclass
class KnownChannelState:
    scores: np.ndarray
    t: int = 0

    @classmethod
    def start(cls, M: int) -> "KnownChannelState":
        return cls(np.zeros(M))


def known_increments(cb: Codebook, t: int, y, bw, prior: InputPrior | None) -> np.ndarray:
    """z_{w,t} for every message: log2 theta(c, y) - log2 q(c), or the Gaussian analogue."""
    symbols = codeword_block(cb, np.arange(cb.message_count), t, 1)[:, 0]
    if isinstance(bw, AwgnChannel):
        return np.asarray(awgn_log_score(bw, symbols, y), dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.log2(bw.posterior[symbols, y]) - np.log2(prior.probs[symbols])


def known_step(state: KnownChannelState, y, cb: Codebook, bw: BackwardChannel | AwgnChannel,
               prior: InputPrior | None, th: ThresholdScheme) -> Decision:
    state.scores += known_increments(cb, state.t, y, bw, prior)
    state.t += 1
    return _crossing_decision(state.scores, th.per_message_log_thresholds, state.t)


@dataclass
class UniversalState:
    counts: np.ndarray  # (M, |X|, |Y|)
    mixture_log_prob: np.ndarray
    codeword_log_prior: np.ndarray
    t: int = 0

    @classmethod
    def start(cls, M: int, x_size: int, y_size: int) -> "UniversalState":
        return cls(np.zeros((M, x_size, y_size), dtype=np.int64), np.zeros(M), np.zeros(M))

    @property
    def scores(self) -> np.ndarray:
        return self.mixture_log_prob - self.codeword_log_prior


def universal_step(state: UniversalState, y: int, cb: Codebook, prior: InputPrior, th: ThresholdScheme) -> Decision:
    m, x_size, _ = state.counts.shape
    symbols = codeword_block(cb, np.arange(m), state.t, 1)[:, 0]
    rows = np.arange(m)
    hit = state.counts[rows, symbols, y]
    col = state.counts[:, :, y].sum(axis=1)
    state.mixture_log_prob += np.log2((hit + PSEUDOCOUNT) / (col + x_size * PSEUDOCOUNT))
    state.codeword_log_prior += np.log2(prior.probs[symbols])
    state.counts[rows, symbols, y] += 1
    state.t += 1
    return _crossing_decision(state.scores, th.per_message_log_thresholds, state.t)


def side_info_step(state: KnownChannelState, y, w1: int, conditional_pi, epsilon: float,
                   cb: Codebook, bw: BackwardChannel, prior: InputPrior) -> Decision:
    """Decode W2 with side information W1 = w1 already decided.

    The score log2 p(y|d)/p(y) equals log2 theta(d|y)/q(d) by Bayes' rule, so
    the known-channel increments are reused.
    """
    return known_step(state, y, cb, bw, prior, side_info_thresholds(conditional_pi, w1, epsilon))


def randomize(decision_source: Callable[[], Decision], alpha: float, rng) -> Callable[[], Decision]:
    """Wrap a trial so that with probability ``alpha`` it ends at t=0 as an error."""
    if not 0 <= alpha < 1:
        raise BadAlpha(f"alpha={alpha} outside [0, 1)")

    def run():
        if alpha > 0 and rng.random() < alpha:
            return Decision(ABORT, 0)
        return decision_source()

    return run


def resolve_tie(tie: Decision, rng) -> tuple[int, bool]:
    """Uniform pick among the tied messages; the trial always counts as an error."""
    if tie.kind != TIE or len(tie.tie_set) < 2:
        raise ValueError("resolve_tie needs a tie among at least two messages")
    idx = min(int(rng.random() * len(tie.tie_set)), len(tie.tie_set) - 1)
    return tie.tie_set[idx], True


def run_to_decision(step: Callable[[int], Decision], outputs, max_symbols: int) -> Decision:
    """Feed ``outputs[t]`` into ``step`` until it stops or ``max_symbols`` pass."""
    for t in range(max_symbols):
        d = step(outputs[t])
        if d.stopped:
            return d
    return Decision(CONTINUE, max_symbols)
