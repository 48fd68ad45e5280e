"""Lazily evaluated infinite random codebooks.

Symbol ``k`` of codeword ``w`` is a pure function of ``(seed, w, k)``: a
counter-mode hash gives a uniform in [0, 1) which is pushed through the
inverse CDF of the codebook prior.  Nothing is stored, so the encoder and
decoder agree on every symbol without materialising the codebook.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .channel import InputPrior
from .errors import ConfigError, IndexOutOfRange


@dataclass(frozen=True, eq=False)
class Codebook:
    seed: int
    message_count: int
    prior: InputPrior | None = None
    gaussian_power: float | None = None

    def __post_init__(self):
        if self.message_count < 1:
            raise ConfigError("codebook needs at least one message")
        if (self.prior is None) == (self.gaussian_power is None):
            raise ConfigError("give exactly one of prior / gaussian_power")

    @property
    def is_gaussian(self) -> bool:
        return self.gaussian_power is not None

    def message_keys(self, messages=None) -> np.ndarray:
        """Per-codeword hash keys; symbol k of codeword w hashes ``derive(key_w, k)``."""
        if messages is None:
            messages = np.arange(self.message_count)
        root = _rng.mix64(self.seed & _rng.MASK)
        return _rng.derive_np(root, messages)


def _check_index(cb, w, k):
    if not 0 <= w < cb.message_count:
        raise IndexOutOfRange(f"message {w} outside [0, {cb.message_count})")
    if k < 0:
        raise IndexOutOfRange(f"position {k} is negative")


def _gaussian_from_hash(h):
    # Box-Muller; the second uniform comes from re-mixing the first hash
    u1 = 1.0 - _rng.to_uniform(h)  # (0, 1]
    u2 = _rng.to_uniform(_rng.mix64(h ^ 0x5851F42D4C957F2D))
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def _gaussian_from_hash_np(h):
    u1 = 1.0 - _rng.to_uniform_np(h)
    u2 = _rng.to_uniform_np(_rng.mix64_np(h ^ np.uint64(0x5851F42D4C957F2D)))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def codeword_symbol(cb: Codebook, w: int, k: int):
    _check_index(cb, w, k)
    key = _rng.derive(_rng.mix64(cb.seed & _rng.MASK), w)
    h = _rng.derive(key, k)
    if cb.is_gaussian:
        return math.sqrt(cb.gaussian_power) * _gaussian_from_hash(h)
    u = _rng.to_uniform(h)
    return int(np.searchsorted(cb.prior.cdf, u, side="right"))


def codeword_block(cb: Codebook, messages, start: int, length: int) -> np.ndarray:
    """Symbols ``[start, start+length)`` of every codeword in ``messages``, shape (len(messages), length)."""
    messages = np.atleast_1d(np.asarray(messages, dtype=np.int64))
    if messages.size and (messages.min() < 0 or messages.max() >= cb.message_count):
        raise IndexOutOfRange("message index outside the codebook")
    if start < 0 or length < 0:
        raise IndexOutOfRange("negative position or length")
    keys = cb.message_keys(messages)
    pos = np.arange(start, start + length, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _rng.mix64_np(keys[:, None] ^ (pos[None, :] * _rng._FOLD_U))
    if cb.is_gaussian:
        return math.sqrt(cb.gaussian_power) * _gaussian_from_hash_np(h)
    return np.searchsorted(cb.prior.cdf, _rng.to_uniform_np(h), side="right").astype(np.int64)


def codeword_prefix(cb: Codebook, w: int, n: int) -> np.ndarray:
    _check_index(cb, w, 0)
    if n < 0:
        raise IndexOutOfRange("negative prefix length")
    return codeword_block(cb, [w], 0, n)[0]


def codebook_from_spec(spec, prior=None) -> Codebook:
    """``{"seed": ..., "M": ..., "prior": [...]}``; ``prior`` fills in a missing prior."""
    from .channel import make_prior

    try:
        seed = int(spec["seed"])
        m = int(spec["M"])
    except KeyError as e:
        raise ConfigError(f"codebook spec is missing {e}") from None
    if "prior" in spec:
        prior = make_prior(spec["prior"])
    if prior is None:
        raise ConfigError("codebook spec needs a prior")
    return Codebook(seed, m, prior)
