"""Discrete memoryless and additive Gaussian channels.

All information quantities are in bits.
"""

import bisect
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError, NegativeEntry, NoConvergence, NonStochasticRow, SymbolOutOfRange

ROW_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Dmc:
    """Forward law p(y|x) stored as an |X| x |Y| row-stochastic matrix."""

    forward: np.ndarray
    name: str = "dmc"

    @property
    def input_size(self) -> int:
        return self.forward.shape[0]

    @property
    def output_size(self) -> int:
        return self.forward.shape[1]

    @cached_property
    def row_cdf(self) -> np.ndarray:
        cdf = np.cumsum(self.forward, axis=1)
        cdf[:, -1] = 1.0
        return cdf


@dataclass(frozen=True, eq=False)
class InputPrior:
    probs: np.ndarray

    @cached_property
    def cdf(self) -> np.ndarray:
        cdf = np.cumsum(self.probs)
        cdf[-1] = 1.0
        return cdf

    def __len__(self):
        return len(self.probs)


@dataclass(frozen=True, eq=False)
class BackwardChannel:
    """Posterior theta[i, j] = Pr{X=i | Y=j} plus the output marginal."""

    posterior: np.ndarray
    output_marginal: np.ndarray
    zero_columns: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))


@dataclass(frozen=True)
class AwgnChannel:
    signal_power: float
    noise_variance: float

    def __post_init__(self):
        for v in (self.signal_power, self.noise_variance):
            if not (math.isfinite(v) and v > 0):
                raise ConfigError("AWGN powers must be positive and finite")

    @property
    def capacity_bits(self) -> float:
        return 0.5 * math.log2(1.0 + self.signal_power / self.noise_variance)

    @property
    def posterior_gain(self) -> float:
        return self.signal_power / (self.signal_power + self.noise_variance)

    @property
    def posterior_variance(self) -> float:
        p, n = self.signal_power, self.noise_variance
        return p * n / (p + n)


@dataclass(frozen=True)
class CapacityResult:
    capacity_bits: float
    optimal_prior: InputPrior
    iterations: int
    gap_bound: float


def make_dmc(forward, name="dmc") -> Dmc:
    m = np.array(forward, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise ConfigError("transition matrix must be a non-empty 2-D array")
    if np.any(m < 0):
        raise NegativeEntry("transition matrix has a negative entry")
    if np.any(m > 1):
        raise NonStochasticRow("transition matrix entry exceeds 1")
    sums = m.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_TOL)
    if bad.size:
        raise NonStochasticRow(f"row {bad[0]} sums to {sums[bad[0]]!r}")
    m.setflags(write=False)
    return Dmc(m, name)


def make_prior(probs) -> InputPrior:
    q = np.array(probs, dtype=np.float64)
    if q.ndim != 1 or q.size == 0:
        raise ConfigError("prior must be a non-empty vector")
    if np.any(q < 0):
        raise NegativeEntry("prior has a negative entry")
    if abs(q.sum() - 1.0) > ROW_TOL:
        raise NonStochasticRow(f"prior sums to {q.sum()!r}")
    q.setflags(write=False)
    return InputPrior(q)


def uniform_prior(n: int) -> InputPrior:
    return make_prior(np.full(n, 1.0 / n))


def bsc(p: float) -> Dmc:
    return make_dmc([[1 - p, p], [p, 1 - p]], name=f"bsc({p})")


def bec(delta: float) -> Dmc:
    """Binary erasure channel; output 2 is the erasure."""
    return make_dmc([[1 - delta, 0.0, delta], [0.0, 1 - delta, delta]], name=f"bec({delta})")


def z_channel(p: float) -> Dmc:
    """Input 0 is noiseless; input 1 flips to 0 with probability p."""
    return make_dmc([[1.0, 0.0], [p, 1 - p]], name=f"z({p})")


def noiseless(n: int = 2) -> Dmc:
    return make_dmc(np.eye(n), name=f"noiseless({n})")


def entropy_bits(p) -> float:
    p = np.asarray(p, dtype=np.float64).ravel()
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def kl_bits(p, r) -> float:
    """D(p || r) in bits; +inf if p puts mass where r does not."""
    p = np.asarray(p, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    mask = p > 0
    if np.any(r[mask] <= 0):
        return math.inf
    return float((p[mask] * np.log2(p[mask] / r[mask])).sum())


def _row_divergences(forward, out_marginal):
    # D(p(.|x) || r) for every input row; rows meeting r=0 cannot occur when r = qP with q(x)>0
    d = np.empty(forward.shape[0])
    for x in range(forward.shape[0]):
        d[x] = kl_bits(forward[x], out_marginal)
    return d


def mutual_information(dmc: Dmc, prior: InputPrior) -> float:
    q = prior.probs
    r = q @ dmc.forward
    total = 0.0
    for x in range(dmc.input_size):
        if q[x] > 0:
            total += q[x] * kl_bits(dmc.forward[x], r)
    return float(max(total, 0.0))


def capacity(dmc: Dmc, tolerance_bits: float = 1e-9, max_iters: int = 100_000) -> CapacityResult:
    """Blahut-Arimoto with the max-divergence upper bound as the stopping rule.

    At every iterate q, ``I(q) <= C <= max_x D(p(.|x) || qP)``; iteration stops
    once that sandwich is narrower than ``tolerance_bits``.
    """
    if not tolerance_bits > 0:
        raise ConfigError("tolerance_bits must be positive")
    P = dmc.forward
    q = np.full(dmc.input_size, 1.0 / dmc.input_size)
    gap = math.inf
    for it in range(1, max_iters + 1):
        r = q @ P
        d = _row_divergences(P, r)
        lower = float(q @ d)
        upper = float(d.max())
        gap = upper - lower
        if gap <= tolerance_bits:
            cap = max(lower, 0.0)
            return CapacityResult(cap, make_prior(q / q.sum()), it, max(gap, 0.0))
        w = q * np.exp2(d - upper)
        q = w / w.sum()
    raise NoConvergence(f"capacity gap {gap:.3e} after {max_iters} iterations")


def backward_channel(dmc: Dmc, prior: InputPrior) -> BackwardChannel:
    joint = prior.probs[:, None] * dmc.forward
    marginal = joint.sum(axis=0)
    zero = marginal <= 0
    post = np.empty_like(joint)
    post[:, ~zero] = joint[:, ~zero] / marginal[~zero]
    post[:, zero] = 1.0 / dmc.input_size
    return BackwardChannel(post, marginal, zero)


def score_table(dmc: Dmc, prior: InputPrior) -> np.ndarray:
    """log2 theta(x|y) - log2 q(x) for every (x, y); -inf where theta is zero."""
    bw = backward_channel(dmc, prior)
    q = prior.probs
    with np.errstate(divide="ignore"):
        table = np.log2(bw.posterior) - np.log2(np.where(q > 0, q, 1.0))[:, None]
    table[q <= 0, :] = -np.inf
    return table


def sample_output(dmc: Dmc, x: int, rng) -> int:
    if not 0 <= x < dmc.input_size:
        raise SymbolOutOfRange(f"input symbol {x} outside [0, {dmc.input_size})")
    return bisect.bisect_right(dmc.row_cdf[x], rng.random())


def awgn_log_score(ch: AwgnChannel, x, y):
    """log2 p(x|y) - log2 q(x) for the Gaussian codebook over AWGN.

    The posterior of X given Y=y is normal with mean g*y and variance
    P*N/(P+N), g = P/(P+N); the codebook density q is N(0, P).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    v = ch.posterior_variance
    g = ch.posterior_gain
    p = ch.signal_power
    nats = 0.5 * math.log(p / v) - (x - g * y) ** 2 / (2 * v) + x**2 / (2 * p)
    out = nats / math.log(2)
    return float(out) if out.ndim == 0 else out


def channel_from_spec(spec):
    """Build a channel from its JSON description."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("channel spec must be an object with a 'type'")
    kind = spec["type"]
    try:
        if kind == "dmc":
            return make_dmc(spec["forward"])
        if kind == "bsc":
            return bsc(float(spec["p"]))
        if kind == "bec":
            return bec(float(spec["delta"]))
        if kind == "z":
            return z_channel(float(spec["p"]))
        if kind == "noiseless":
            return noiseless(int(spec.get("size", 2)))
        if kind == "awgn":
            return AwgnChannel(float(spec["signal_power"]), float(spec["noise_variance"]))
    except KeyError as e:
        raise ConfigError(f"channel spec '{kind}' is missing field {e}") from None
    raise ConfigError(f"unknown channel type {kind!r}")
