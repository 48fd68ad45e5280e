"""Message and symbol sources."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .channel import entropy_bits
from .errors import BadEpsilon, ConfigError, NonStochasticRow, SymbolOutOfRange
from .mixture import LOG2E

PROB_TOL = 1e-9


def _probability_vector(p, what="probabilities"):
    p = np.array(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ConfigError(f"{what} must be a non-empty vector")
    if np.any(p < 0):
        raise ConfigError(f"{what} must be nonnegative")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise NonStochasticRow(f"{what} sum to {p.sum()!r}")
    return p


@dataclass(frozen=True, eq=False)
class MessageSource:
    probs: np.ndarray

    @property
    def message_count(self) -> int:
        return len(self.probs)

    @property
    def entropy_bits(self) -> float:
        return entropy_bits(self.probs)

    @property
    def per_bit_entropy(self) -> float:
        return self.entropy_bits / math.log2(self.message_count)

    @property
    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c


def uniform_source(m: int) -> MessageSource:
    if m < 2:
        raise ConfigError("need at least two messages")
    return MessageSource(np.full(m, 1.0 / m))


def weighted_source(probs) -> MessageSource:
    return MessageSource(_probability_vector(probs))


def zipf_source(m: int, exponent: float = 1.0) -> MessageSource:
    w = 1.0 / np.arange(1, m + 1, dtype=np.float64) ** exponent
    return MessageSource(w / w.sum())


def sample_message(src: MessageSource, rng) -> int:
    return int(np.searchsorted(src.cdf, rng.random(), side="right"))


@dataclass(frozen=True, eq=False)
class IidSymbolSource:
    """Blocks of ``block_len`` i.i.d. symbols; each block is one message."""

    probs: np.ndarray
    block_len: int

    @property
    def alphabet_size(self) -> int:
        return len(self.probs)

    @property
    def message_count(self) -> int:
        return self.alphabet_size**self.block_len

    @property
    def entropy_bits(self) -> float:
        return self.block_len * entropy_bits(self.probs)

    @property
    def per_bit_entropy(self) -> float:
        return self.entropy_bits / math.log2(self.message_count)

    def message_index(self, block) -> int:
        """Mixed-radix index, first symbol most significant."""
        w = 0
        for s in block:
            w = w * self.alphabet_size + int(s)
        return w

    def block_of(self, w: int) -> np.ndarray:
        return block_of(w, self.alphabet_size, self.block_len)

    def sample_block(self, rng) -> np.ndarray:
        cdf = np.cumsum(self.probs)
        cdf[-1] = 1.0
        return np.array(
            [np.searchsorted(cdf, rng.random(), side="right") for _ in range(self.block_len)],
            dtype=np.int64,
        )

    def symbol_counts(self) -> np.ndarray:
        """Per-message symbol histograms, shape (M, |S|)."""
        idx = np.arange(self.message_count)
        counts = np.zeros((self.message_count, self.alphabet_size), dtype=np.int64)
        for _ in range(self.block_len):
            np.add.at(counts, (np.arange(self.message_count), idx % self.alphabet_size), 1)
            idx //= self.alphabet_size
        return counts


def iid_source(gamma, block_len: int) -> IidSymbolSource:
    if block_len < 1:
        raise ConfigError("block length must be positive")
    return IidSymbolSource(_probability_vector(gamma, "gamma"), int(block_len))


def block_of(w: int, alphabet_size: int, block_len: int) -> np.ndarray:
    out = np.empty(block_len, dtype=np.int64)
    for i in range(block_len - 1, -1, -1):
        out[i] = w % alphabet_size
        w //= alphabet_size
    return out


@dataclass(frozen=True, eq=False)
class CorrelatedPairSource:
    joint: np.ndarray

    @property
    def first_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    @property
    def conditional(self) -> np.ndarray:
        """Rows pi(w2 | w1); rows with zero marginal are left at zero."""
        m1 = self.first_marginal
        return np.divide(self.joint, m1[:, None], out=np.zeros_like(self.joint), where=m1[:, None] > 0)

    def first_source(self) -> MessageSource:
        return MessageSource(self.first_marginal)


def pair_source(joint) -> CorrelatedPairSource:
    j = np.array(joint, dtype=np.float64)
    if j.ndim != 2 or j.size == 0 or np.any(j < 0):
        raise ConfigError("joint distribution must be a nonnegative matrix")
    if abs(j.sum() - 1.0) > PROB_TOL:
        raise NonStochasticRow(f"joint distribution sums to {j.sum()!r}")
    return CorrelatedPairSource(j)


def binary_symmetric_pair(block_len: int, flip: float) -> CorrelatedPairSource:
    """W1 uniform over blocks of ``block_len`` bits; W2 = W1 xor i.i.d. Bernoulli(flip) noise."""
    m = 1 << block_len
    w = np.arange(m)
    dist = np.array([bin(int(v)).count("1") for v in range(m)])
    d = dist[w[:, None] ^ w[None, :]]
    cond = flip**d * (1 - flip) ** (block_len - d)
    return pair_source(cond / m)


def sample_pair(src: CorrelatedPairSource, rng) -> tuple[int, int]:
    flat = np.cumsum(src.joint.ravel())
    flat[-1] = 1.0
    idx = int(np.searchsorted(flat, rng.random(), side="right"))
    return divmod(idx, src.joint.shape[1])


def conditional_entropy(pair: CorrelatedPairSource) -> tuple[float, float, float]:
    """(H(W1), H(W2|W1), H(W1,W2)) in bits."""
    h1 = entropy_bits(pair.first_marginal)
    hj = entropy_bits(pair.joint)
    return h1, hj - h1, hj


def universal_source_log_prob(block, alphabet_size: int) -> float:
    """log2 of the Jeffreys-mixture probability of a symbol block."""
    block = np.asarray(block, dtype=np.int64)
    if block.size and (block.min() < 0 or block.max() >= alphabet_size):
        raise SymbolOutOfRange("source symbol outside the alphabet")
    counts = np.bincount(block, minlength=alphabet_size)
    return float(universal_log_prob_from_counts(counts))


def universal_log_prob_from_counts(counts):
    """Vectorised over leading axes; last axis indexes the alphabet."""
    counts = np.asarray(counts, dtype=np.float64)
    k = counts.shape[-1]
    n = counts.sum(axis=-1)
    nats = (gammaln(counts + 0.5) - gammaln(0.5)).sum(axis=-1) + gammaln(k / 2.0) - gammaln(n + k / 2.0)
    return nats * LOG2E


def universal_thresholds(block, alphabet_size: int, epsilon: float) -> float:
    """Threshold a_w = -log2(eps) - log2 p_hat(s^L) for a candidate block."""
    if not 0 < epsilon < 1:
        raise BadEpsilon(f"epsilon={epsilon} outside (0, 1)")
    return -math.log2(epsilon) - universal_source_log_prob(block, alphabet_size)


def source_from_spec(spec):
    kind = spec.get("type") if isinstance(spec, dict) else None
    try:
        if kind == "uniform":
            return uniform_source(int(spec["M"]))
        if kind == "weighted":
            return weighted_source(spec["probs"])
        if kind == "zipf":
            return zipf_source(int(spec["M"]), float(spec.get("exponent", 1.0)))
        if kind == "iid":
            return iid_source(spec["gamma"], int(spec["L"]))
        if kind == "pair":
            return pair_source(spec["joint"])
        if kind == "binary_pair":
            return binary_symmetric_pair(int(spec["L"]), float(spec["flip"]))
    except KeyError as e:
        raise ConfigError(f"source spec '{kind}' is missing field {e}") from None
    raise ConfigError(f"unknown source type {kind!r}")
