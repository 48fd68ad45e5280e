"""Jeffreys-prior mixture over backward channels and its redundancy.

The mixture weight is Dirichlet(1/2, ..., 1/2) independently on every output
column, so the integral over the parameter region collapses to a product of
per-column Gamma ratios.  Sequentially this is the add-half (KT) predictive
rule.  Everything here is in bits.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ConfigError, NonPositiveT, SymbolOutOfRange

LOG2E = math.log2(math.e)

# Dirichlet pseudo-count of the Jeffreys weight. Module-level so the
# verification negative control can perturb it.
PSEUDOCOUNT = 0.5


@dataclass
class CountMatrix:
    """Joint counts N(i, j) of (input, output) pairs seen so far."""

    counts: np.ndarray

    @classmethod
    def empty(cls, x_size: int, y_size: int) -> "CountMatrix":
        return cls(np.zeros((x_size, y_size), dtype=np.int64))

    @classmethod
    def from_sequences(cls, xs, ys, x_size: int, y_size: int) -> "CountMatrix":
        cm = cls.empty(x_size, y_size)
        np.add.at(cm.counts, (np.asarray(xs, dtype=np.int64), np.asarray(ys, dtype=np.int64)), 1)
        return cm

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def x_size(self) -> int:
        return self.counts.shape[0]

    @property
    def y_size(self) -> int:
        return self.counts.shape[1]

    def add(self, x: int, y: int) -> None:
        self.counts[x, y] += 1


@dataclass(frozen=True)
class RedundancyConstants:
    x_size: int
    y_size: int
    kappa: float
    beta: float
    dim_coeff: float
    loose_coeff: float


def kt_conditional(cm: CountMatrix, x: int, y: int) -> float:
    """Predictive probability of input ``x`` given output ``y`` after the counts in ``cm``."""
    if not (0 <= x < cm.x_size and 0 <= y < cm.y_size):
        raise SymbolOutOfRange(f"pair ({x}, {y}) outside a {cm.x_size}x{cm.y_size} alphabet")
    a = PSEUDOCOUNT
    col = cm.counts[:, y]
    return (col[x] + a) / (col.sum() + cm.x_size * a)


def mixture_log_prob(cm: CountMatrix) -> float:
    """log2 p_U(x^t | y^t) from the counts alone."""
    a = PSEUDOCOUNT
    n = cm.counts.astype(np.float64)
    k = cm.x_size
    per_col = (gammaln(n + a) - gammaln(a)).sum(axis=0) + gammaln(k * a) - gammaln(n.sum(axis=0) + k * a)
    return float(per_col.sum() * LOG2E)


def ml_log_prob(cm: CountMatrix) -> float:
    """log2 of the maximum-likelihood backward channel evaluated on the counts."""
    n = cm.counts.astype(np.float64)
    col = n.sum(axis=0, keepdims=True)
    mask = n > 0
    ratio = np.divide(n, col, out=np.ones_like(n), where=mask)
    return float((n[mask] * np.log2(ratio[mask])).sum())


def kappa(x_size: int) -> float:
    """log2( Gamma(1/2)^|X| / Gamma(|X|/2) )."""
    return (x_size * gammaln(0.5) - gammaln(x_size / 2.0)) * LOG2E


def redundancy_constants(x_size: int, y_size: int) -> RedundancyConstants:
    if x_size < 2 or y_size < 1:
        raise ConfigError("need |X| >= 2 and |Y| >= 1")
    k = kappa(x_size)
    dim = (x_size - 1) * y_size / 2.0
    beta = (
        y_size * k
        + (x_size**2 * y_size / 4.0 + x_size * y_size / 2.0) * LOG2E
        - dim * math.log2(2 * math.pi)
    )
    return RedundancyConstants(x_size, y_size, k, beta, dim, x_size * y_size / 2.0)


def redundancy_bound(t: int, x_size: int, y_size: int) -> float:
    """Upper bound on ml_log_prob - mixture_log_prob after ``t`` symbols."""
    if t < 1:
        raise NonPositiveT("t must be at least 1")
    rc = redundancy_constants(x_size, y_size)
    return rc.dim_coeff * math.log2(t) + rc.beta
