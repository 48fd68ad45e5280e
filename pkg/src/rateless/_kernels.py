"""Compiled trial kernels for the simulator.

Each kernel runs one complete sequential decode.  The true codeword is
decoded first, which fixes a provisional stopping time; every competing
codeword is then scanned only up to the current best crossing time.  A scan
is abandoned once the score is -inf, or once even the largest per-symbol
increment could not lift it to its threshold in the steps that remain.
Neither cut changes the stopping time or the crossing set.

Symbols and channel draws come from the counter hash in ``_rng`` so results
do not depend on evaluation order.
"""

import math

import numpy as np
from numba import njit

from ._rng import derive_nb, mix64_nb, uniform_nb


def int_cdf(cdf):
    """Scale a CDF to 53-bit integers: ``(h >> 11) < ceil(F * 2**53)`` iff ``u < F``."""
    return np.ceil(np.asarray(cdf, dtype=np.float64) * 9007199254740992.0).astype(np.int64)


@njit(cache=True)
def _invcdf(icdf, h):
    v = np.int64(h >> np.uint64(11))
    n = icdf.shape[0]
    for i in range(n):
        if v < icdf[i]:
            return i
    return n - 1


@njit(cache=True)
def _normal(h):
    u1 = 1.0 - uniform_nb(h)
    u2 = uniform_nb(mix64_nb(h ^ np.uint64(0x5851F42D4C957F2D)))
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True)
def decode_known_dmc(msg_keys, prior_cdf, true_w, noise_key, fwd_cdf, table, thresholds, zmax, max_symbols, ys, crossers):
    """Known-channel threshold decoder over a DMC.

    ``prior_cdf`` and ``fwd_cdf`` are integer CDFs from :func:`int_cdf`.

    Returns ``(T, n_crossers)``; ``T == max_symbols + 1`` means no codeword
    crossed within ``max_symbols``.  ``ys`` receives the channel outputs and
    ``crossers[:n_crossers]`` the messages crossing at ``T``.
    """
    m = msg_keys.shape[0]
    key = msg_keys[true_w]
    a = thresholds[true_w]
    s = 0.0
    best = max_symbols + 1
    n_y = 0
    for k in range(max_symbols):
        c = _invcdf(prior_cdf, derive_nb(key, k))
        y = _invcdf(fwd_cdf[c], derive_nb(noise_key, k))
        ys[k] = y
        n_y = k + 1
        s += table[c, y]
        if s >= a:
            best = k + 1
            break
    n_cross = 0
    if best <= max_symbols:
        crossers[0] = true_w
        n_cross = 1
    for w in range(m):
        if w == true_w:
            continue
        a = thresholds[w]
        if a == np.inf:
            continue
        key = msg_keys[w]
        s = 0.0
        margin = 1e-9 * (1.0 + abs(a))
        limit = min(best, n_y)
        for k in range(limit):
            if s + (best - k) * zmax < a - margin:
                break
            c = _invcdf(prior_cdf, derive_nb(key, k))
            s += table[c, ys[k]]
            if s >= a:
                t = k + 1
                if t < best:
                    best = t
                    crossers[0] = w
                    n_cross = 1
                elif t == best:
                    crossers[n_cross] = w
                    n_cross += 1
                break
            if s == -np.inf:
                break
    return best, n_cross


@njit(cache=True)
def decode_universal_dmc(msg_keys, prior_cdf, log2_prior, true_w, noise_key, fwd_cdf, x_size, y_size, thresholds, zmax, max_symbols, ys, crossers):
    """Jeffreys-mixture threshold decoder; same contract as ``decode_known_dmc``."""
    m = msg_keys.shape[0]
    lg_num = np.empty(max_symbols + 1)
    lg_den = np.empty(max_symbols + 1)
    for n in range(max_symbols + 1):
        lg_num[n] = math.log2(n + 0.5)
        lg_den[n] = math.log2(n + 0.5 * x_size)
    counts = np.zeros((x_size, y_size), dtype=np.int64)
    cols = np.zeros(y_size, dtype=np.int64)

    key = msg_keys[true_w]
    a = thresholds[true_w]
    s = 0.0
    best = max_symbols + 1
    n_y = 0
    for k in range(max_symbols):
        c = _invcdf(prior_cdf, derive_nb(key, k))
        y = _invcdf(fwd_cdf[c], derive_nb(noise_key, k))
        ys[k] = y
        n_y = k + 1
        s += lg_num[counts[c, y]] - lg_den[cols[y]] - log2_prior[c]
        counts[c, y] += 1
        cols[y] += 1
        if s >= a:
            best = k + 1
            break
    n_cross = 0
    if best <= max_symbols:
        crossers[0] = true_w
        n_cross = 1
    for w in range(m):
        if w == true_w:
            continue
        a = thresholds[w]
        if a == np.inf:
            continue
        key = msg_keys[w]
        counts[:, :] = 0
        cols[:] = 0
        s = 0.0
        margin = 1e-9 * (1.0 + abs(a))
        limit = min(best, n_y)
        for k in range(limit):
            if s + (best - k) * zmax < a - margin:
                break
            c = _invcdf(prior_cdf, derive_nb(key, k))
            y = ys[k]
            s += lg_num[counts[c, y]] - lg_den[cols[y]] - log2_prior[c]
            counts[c, y] += 1
            cols[y] += 1
            if s >= a:
                t = k + 1
                if t < best:
                    best = t
                    crossers[0] = w
                    n_cross = 1
                elif t == best:
                    crossers[n_cross] = w
                    n_cross += 1
                break
    return best, n_cross


@njit(cache=True)
def decode_known_awgn(msg_keys, power, noise_var, true_w, noise_key, thresholds, max_symbols, ys, crossers):
    """Known-channel decoder for a Gaussian codebook over AWGN; no pruning."""
    m = msg_keys.shape[0]
    g = power / (power + noise_var)
    v = power * noise_var / (power + noise_var)
    const = 0.5 * math.log(power / v)
    inv_ln2 = 1.0 / math.log(2.0)
    sp = math.sqrt(power)
    sn = math.sqrt(noise_var)

    key = msg_keys[true_w]
    a = thresholds[true_w]
    s = 0.0
    best = max_symbols + 1
    n_y = 0
    for k in range(max_symbols):
        x = sp * _normal(derive_nb(key, k))
        y = x + sn * _normal(derive_nb(noise_key, k))
        ys[k] = y
        n_y = k + 1
        s += (const - (x - g * y) ** 2 / (2 * v) + x * x / (2 * power)) * inv_ln2
        if s >= a:
            best = k + 1
            break
    n_cross = 0
    if best <= max_symbols:
        crossers[0] = true_w
        n_cross = 1
    for w in range(m):
        if w == true_w:
            continue
        a = thresholds[w]
        key = msg_keys[w]
        s = 0.0
        for k in range(min(best, n_y)):
            x = sp * _normal(derive_nb(key, k))
            y = ys[k]
            s += (const - (x - g * y) ** 2 / (2 * v) + x * x / (2 * power)) * inv_ln2
            if s >= a:
                t = k + 1
                if t < best:
                    best = t
                    crossers[0] = w
                    n_cross = 1
                elif t == best:
                    crossers[n_cross] = w
                    n_cross += 1
                break
    return best, n_cross


@njit(cache=True)
def bec_repetition(channel_keys, delta, max_symbols, out):
    """Transmissions until the first unerased copy, one bit per key."""
    for i in range(channel_keys.shape[0]):
        t = max_symbols + 1
        for k in range(max_symbols):
            if uniform_nb(derive_nb(channel_keys[i], k)) >= delta:
                t = k + 1
                break
        out[i] = t


@njit(cache=True)
def audit_log_products(x_keys, xin_keys, noise_keys, prior_cdf, fwd_cdf, table, log2_prior, x_size, y_size, universal, horizon, log_a, out):
    """Final log2 of the stopped likelihood-ratio product for independent (X, Y) streams.

    X follows the codebook prior; Y is the channel output of an independent
    input.  Once the running product exceeds 2**log_a it is frozen.
    """
    counts = np.zeros((x_size, y_size), dtype=np.int64)
    cols = np.zeros(y_size, dtype=np.int64)
    for i in range(x_keys.shape[0]):
        counts[:, :] = 0
        cols[:] = 0
        s = 0.0
        for k in range(horizon):
            if s > log_a:
                break
            x = _invcdf(prior_cdf, derive_nb(x_keys[i], k))
            xin = _invcdf(prior_cdf, derive_nb(xin_keys[i], k))
            y = _invcdf(fwd_cdf[xin], derive_nb(noise_keys[i], k))
            if universal:
                s += math.log2((counts[x, y] + 0.5) / (cols[y] + 0.5 * x_size)) - log2_prior[x]
                counts[x, y] += 1
                cols[y] += 1
            else:
                s += table[x, y]
        out[i] = s
