"""Closed-form achievable rates, time bounds, exponents and converses.

Rates are bits per channel use unless noted, logs are base 2.  Every formula
takes the message count ``M`` (an int is exact even for 2**200); inside an
``extended_precision()`` block the arithmetic runs on mpmath numbers so
asymptotic sweeps do not drown in cancellation.
"""

import contextlib
import math

import mpmath
import numpy as np
from scipy.optimize import minimize_scalar

from .channel import capacity as _capacity
from .channel import kl_bits
from .errors import BadDelta, BadEpsilon, BadM, BadPeriod, DegenerateRegime, DomainError, InconsistentBlockLength, MessageSetTooSmall
from .mixture import kappa, redundancy_constants

_EXTENDED = False


@contextlib.contextmanager
def extended_precision(dps: int = 60):
    global _EXTENDED
    prev = _EXTENDED
    with mpmath.workdps(dps):
        _EXTENDED = True
        try:
            yield
        finally:
            _EXTENDED = prev


def _n(x):
    return mpmath.mpf(x) if _EXTENDED else float(x)


def _log2(x):
    if _EXTENDED:
        return mpmath.log(mpmath.mpf(x), 2)
    return math.log2(x)


def _ln2():
    return mpmath.log(2) if _EXTENDED else math.log(2)


def _out(x):
    return x if _EXTENDED else float(x)


def _check(C, M, epsilon, eps_closed=False):
    if not C > 0:
        raise DomainError(f"capacity must be positive, got {C}")
    if not M >= 2:
        raise BadM(f"M must be at least 2, got {M}")
    lo_ok = epsilon >= 0 if eps_closed else epsilon > 0
    if not (lo_ok and epsilon < 1):
        raise BadEpsilon(f"epsilon={epsilon} outside (0, 1)")


def threshold_bits(M, epsilon):
    """a = log M - log eps, the threshold giving error probability below eps."""
    return _out(_log2(M) - _log2(epsilon))


def wald_time_bound(C, a):
    """E{T} < (a + C) / C for a threshold ``a`` and per-symbol drift ``C``."""
    if not C > 0:
        raise DomainError(f"capacity must be positive, got {C}")
    C, a = _n(C), _n(a)
    return _out((a + C) / C)


def rate_known(C, M, epsilon):
    _check(C, M, epsilon)
    C, K = _n(C), _log2(M)
    return _out(C / (1 + (C - _log2(epsilon)) / K))


def randomized_decoder_transform(rate, epsilon, alpha):
    """Rate and error probability after terminating each trial w.p. ``alpha``."""
    if not 0 <= alpha < 1:
        raise DomainError(f"alpha={alpha} outside [0, 1)")
    return rate / (1 - alpha), alpha + epsilon - alpha * epsilon


def rate_known_randomized(C, M, epsilon):
    """Best of the plain threshold rate and decoder randomisation at delta = min(eps, 1/log M)."""
    _check(C, M, epsilon)
    C, K, eps = _n(C), _log2(M), _n(epsilon)
    if eps <= 1 / K:
        return _out(C / (1 + (C - _log2(eps)) / K))
    return _out((1 - 1 / K) / (1 + (C + _log2(K)) / K) * C / (1 - eps))


def error_exponent_known(C, R, M):
    if R < 0:
        raise DomainError("rate must be nonnegative")
    C, R, K = _n(C), _n(R), _log2(M)
    return _out(C - R - C * R / K)


def converse_rate(C, M, epsilon):
    """Upper bound on any effective rate with error probability at most eps."""
    _check(C, M, epsilon, eps_closed=True)
    C, K, eps = _n(C), _log2(M), _n(epsilon)
    slack = (1 - eps) * K - 1
    if slack <= 0:
        raise DegenerateRegime("(1 - eps) log M must exceed 1")
    return _out(C / (1 - eps) * (1 + 1 / slack))


def burnashev_exponent(dmc, R, C=None):
    """(C1 * (1 - R/C), C1) with C1 the largest divergence between two rows."""
    if C is None:
        C = _capacity(dmc).capacity_bits
    if R > C + 1e-12:
        raise DomainError("rate above capacity")
    n = dmc.input_size
    c1 = max(kl_bits(dmc.forward[x], dmc.forward[xp]) for x in range(n) for xp in range(n))
    factor = max(0.0, 1.0 - R / C)
    if math.isinf(c1):
        return (math.inf if factor > 0 else 0.0), math.inf
    return c1 * factor, c1


def _universal_pieces(C, M, x_size, y_size):
    rc = redundancy_constants(x_size, y_size)
    C, K = _n(C), _log2(M)
    half = _n(rc.loose_coeff)
    deflate = half / (K * _ln2())
    if deflate >= 1:
        raise MessageSetTooSmall("log M * ln 2 must exceed |X||Y|/2")
    excess = half * (_log2(K) - _log2(C) - 1 / _ln2())
    return C, K, _n(rc.beta), deflate, excess


def rate_universal(C, M, epsilon, x_size, y_size):
    _check(C, M, epsilon)
    C, K, beta, deflate, excess = _universal_pieces(C, M, x_size, y_size)
    return _out(C * (1 - deflate) / (1 + (C + beta - _log2(epsilon) + excess) / K))


def universal_time_bound(C, M, epsilon, x_size, y_size, a=None):
    """Upper bound on E{T} of the universal decoder (threshold ``a`` defaults to log M - log eps)."""
    _check(C, M, epsilon)
    C, K, beta, deflate, excess = _universal_pieces(C, M, x_size, y_size)
    if a is None:
        a = K - _log2(epsilon)
    return _out((_n(a) + excess + beta + C) / (C * (1 - deflate)))


def rate_universal_randomized(C, M, epsilon, delta, x_size, y_size):
    _check(C, M, epsilon)
    if not 0 < delta <= epsilon:
        raise BadDelta(f"delta={delta} outside (0, epsilon]")
    C, K, beta, deflate, excess = _universal_pieces(C, M, x_size, y_size)
    d, eps = _n(delta), _n(epsilon)
    base = C * (1 - deflate) / (1 + (C + beta - _log2(d) + excess) / K)
    return _out(base * (1 - d) / (1 - eps))


def optimize_universal_delta(C, M, epsilon, x_size, y_size):
    """Maximise the randomised universal rate over delta in (0, eps]; returns (delta, rate)."""
    f = lambda d: -rate_universal_randomized(C, M, epsilon, d, x_size, y_size)  # noqa: E731
    res = minimize_scalar(f, bounds=(epsilon * 1e-9, epsilon), method="bounded", options={"xatol": 1e-12})
    best_d, best = float(res.x), -float(res.fun)
    at_eps = rate_universal(C, M, epsilon, x_size, y_size)
    if at_eps >= best:
        return float(epsilon), at_eps
    return best_d, best


def universal_rate_penalty(C, M, epsilon, x_size, y_size):
    """Leading terms of the known-minus-universal rate gap (accurate to O(1/log^2 M))."""
    rc = redundancy_constants(x_size, y_size)
    C, K = _n(C), _log2(M)
    half = _n(rc.loose_coeff)
    return _out(C * (half * _log2(K) / K + ((half - 1) / _ln2() + _n(rc.beta) + _log2(C)) / K))


def universal_rate_penalty_expansion(C, M, epsilon, x_size, y_size):
    """First-order expansion of rate_known - rate_universal in 1/log M.

    Expanding both rates to O(1/log M) gives C (h log2 log2 M + beta - h log2 C) / log2 M
    with h = |X||Y|/2; the -h/ln 2 pieces of the deflation factor and the
    excess cancel.
    """
    rc = redundancy_constants(x_size, y_size)
    C, K = _n(C), _log2(M)
    half = _n(rc.loose_coeff)
    return _out(C * (half * _log2(K) + _n(rc.beta) - half * _log2(C)) / K)


def rate_limited_feedback(C, M, epsilon, s):
    """Rate when feedback is used once every ``s`` symbols (as printed, without the overshoot term)."""
    _check(C, M, epsilon)
    if s < 1 or int(s) != s:
        raise BadPeriod(f"feedback period must be a positive integer, got {s}")
    C, K = _n(C), _log2(M)
    return _out(C / (1 + ((s - 1) * C - _log2(epsilon)) / K))


def joint_sc_expected_time(H_bits, C, epsilon):
    """E{T} <= (H(W) - log eps + C) / C with message-dependent thresholds."""
    if H_bits < 0:
        raise DomainError("entropy must be nonnegative")
    if not C > 0:
        raise DomainError("capacity must be positive")
    if not 0 < epsilon < 1:
        raise BadEpsilon(f"epsilon={epsilon} outside (0, 1)")
    C = _n(C)
    return _out((_n(H_bits) - _log2(epsilon) + C) / C)


def joint_sc_rate(C, per_bit_entropy, K, epsilon):
    """Source bits per channel use, K / E{T} >= C / (H_bit + (C - log eps)/K)."""
    C = _n(C)
    return _out(C / (_n(per_bit_entropy) + (C - _log2(epsilon)) / _n(K)))


def joint_sc_converse_rate(C, M, epsilon, H_bits):
    """Source-bit rate upper bound from H(W) <= 1 + eps log M + C E{T}."""
    _check(C, M, epsilon, eps_closed=True)
    C, K = _n(C), _log2(M)
    slack = _n(H_bits) - 1 - _n(epsilon) * K
    if slack <= 0:
        raise DegenerateRegime("H(W) - 1 - eps log M must be positive")
    return _out(K * C / slack)


def slepian_wolf_rates(H1, H2_given_1, epsilon):
    """Upper bounds (R1, R2, R1+R2) in bits over a noiseless binary link."""
    if H1 < 0 or H2_given_1 < 0:
        raise DomainError("entropies must be nonnegative")
    if not 0 < epsilon < 1:
        raise BadEpsilon(f"epsilon={epsilon} outside (0, 1)")
    half = -_log2(_n(epsilon) / 2)
    r1 = _n(H1) + half + 1
    r2 = _n(H2_given_1) + half + 1
    return _out(r1), _out(r2), _out(r1 + r2)


def empirical_entropy_rate(per_bit_entropy, source_alphabet, block_len, M):
    """Per-bit entropy inflated by the Jeffreys source-mixture redundancy.

    The additive constant is kappa_|S|, the Jeffreys-prior redundancy constant;
    any remaining o(1) term is dropped.
    """
    K = _log2(M)
    two_pi_e = 2 * mpmath.pi * mpmath.e if _EXTENDED else 2 * math.pi * math.e
    excess = _n(source_alphabet - 1) / 2 * _log2(_n(block_len) / two_pi_e)
    return _out(_n(per_bit_entropy) + (excess + _n(kappa(source_alphabet))) / K)


def rate_complete_universal(C, M, epsilon, x_size, y_size, per_bit_entropy, source_alphabet, block_len):
    """Source bits per channel use with unknown source and unknown channel."""
    _check(C, M, epsilon)
    expected_M = source_alphabet**block_len
    if abs(_log2(M) - block_len * _log2(source_alphabet)) > 1e-9 * max(1.0, float(_log2(M))):
        raise InconsistentBlockLength(f"M={M} is not |S|^L = {expected_M}")
    C, K, beta, deflate, excess = _universal_pieces(C, M, x_size, y_size)
    h_hat = _n(empirical_entropy_rate(per_bit_entropy, source_alphabet, block_len, M))
    return _out(C * (1 - deflate) / (h_hat + (C + beta - _log2(epsilon) + excess) / K))


def joint_sc_universal_rate(C, M, epsilon, x_size, y_size, per_bit_entropy):
    """Unknown channel, known source statistics."""
    _check(C, M, epsilon)
    C, K, beta, deflate, excess = _universal_pieces(C, M, x_size, y_size)
    return _out(C * (1 - deflate) / (_n(per_bit_entropy) + (C + beta - _log2(epsilon) + excess) / K))


# sweep support ------------------------------------------------------------

FORMULAS = {
    "rate_known": (rate_known, ("C", "M", "epsilon")),
    "rate_known_randomized": (rate_known_randomized, ("C", "M", "epsilon")),
    "converse_rate": (converse_rate, ("C", "M", "epsilon")),
    "error_exponent_known": (error_exponent_known, ("C", "R", "M")),
    "rate_universal": (rate_universal, ("C", "M", "epsilon", "x_size", "y_size")),
    "rate_universal_randomized": (rate_universal_randomized, ("C", "M", "epsilon", "delta", "x_size", "y_size")),
    "universal_time_bound": (universal_time_bound, ("C", "M", "epsilon", "x_size", "y_size")),
    "universal_rate_penalty": (universal_rate_penalty, ("C", "M", "epsilon", "x_size", "y_size")),
    "universal_rate_penalty_expansion": (universal_rate_penalty_expansion, ("C", "M", "epsilon", "x_size", "y_size")),
    "rate_limited_feedback": (rate_limited_feedback, ("C", "M", "epsilon", "s")),
    "joint_sc_expected_time": (joint_sc_expected_time, ("H", "C", "epsilon")),
    "joint_sc_rate": (joint_sc_rate, ("C", "per_bit_entropy", "K", "epsilon")),
    "joint_sc_universal_rate": (joint_sc_universal_rate, ("C", "M", "epsilon", "x_size", "y_size", "per_bit_entropy")),
    "rate_complete_universal": (
        rate_complete_universal,
        ("C", "M", "epsilon", "x_size", "y_size", "per_bit_entropy", "source_alphabet", "block_len"),
    ),
    "wald_time_bound": (wald_time_bound, ("C", "a")),
}

_DERIVED = {
    "K": lambda p: math.log2(p["M"]),
    "block_len": lambda p: round(math.log(p["M"], p["source_alphabet"])),
}


def evaluate(formula: str, params: dict):
    """Evaluate a registered formula by name; returns NaN for points outside its domain."""
    if formula not in FORMULAS:
        raise KeyError(f"unknown formula {formula!r}")
    fn, names = FORMULAS[formula]
    args = []
    for name in names:
        if name in params:
            args.append(params[name])
        elif name in _DERIVED:
            args.append(_DERIVED[name](params))
        else:
            raise KeyError(f"formula {formula!r} needs parameter {name!r}")
    try:
        return fn(*args)
    except DomainError:
        return math.nan


def grid(spec: dict) -> list:
    """Grid points from ``{"variable", "values"}`` or ``{"variable", "start", "stop", "num"|"step", "scale"}``.

    With ``scale == "log2"`` the start/stop are exponents and the grid holds 2**x.
    """
    if "values" in spec:
        return list(spec["values"])
    start, stop = spec["start"], spec["stop"]
    if "num" in spec:
        pts = list(np.linspace(start, stop, int(spec["num"]))) if int(spec["num"]) > 0 else []
    else:
        step = spec.get("step", 1)
        pts = list(np.arange(start, stop + step / 2, step)) if stop >= start else []
    scale = spec.get("scale", "linear")
    if scale == "log2":
        return [2 ** int(round(x)) if float(x).is_integer() else 2.0 ** float(x) for x in pts]
    if scale != "linear":
        raise ValueError(f"unknown scale {scale!r}")
    return [float(x) for x in pts]
