"""Counter-based 64-bit hashing used for every random draw in the package.

A value is addressed by a key path ``(seed, a, b, ...)``; each step folds one
integer into the running key with :func:`derive`.  The mixer is the
SplitMix64 finalizer, so the construction is platform-stable and needs no
state.  Three twins exist (Python ints, numpy arrays, numba scalars) and the
test suite pins them to each other and to golden vectors.
"""

import numpy as np
from numba import njit

MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_FOLD = 0xD1B54A32D192ED03
_INV53 = 1.0 / (1 << 53)

# stream roles used by the simulator
ROLE_SOURCE = 1
ROLE_CHANNEL = 2
ROLE_TIE = 3
ROLE_RANDOMIZE = 4
ROLE_CODEBOOK = 5
ROLE_CODEBOOK_2 = 6
ROLE_CHANNEL_2 = 7
ROLE_TIE_2 = 8


def mix64(z):
    z = (z + _GAMMA) & MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def derive(key, value):
    return mix64(key ^ ((value * _FOLD) & MASK))


def derive_path(seed, *parts):
    key = mix64(seed & MASK)
    for p in parts:
        key = derive(key, p & MASK)
    return key


def to_uniform(h):
    return (h >> 11) * _INV53


class KeyedStream:
    """Sequential uniforms drawn from a fixed key; quacks like ``Generator.random``."""

    def __init__(self, key):
        self.key = key & MASK
        self.counter = 0

    def random(self):
        u = to_uniform(derive(self.key, self.counter))
        self.counter += 1
        return u


# numpy twin -------------------------------------------------------------

_GAMMA_U = np.uint64(_GAMMA)
_M1_U = np.uint64(_M1)
_M2_U = np.uint64(_M2)
_FOLD_U = np.uint64(_FOLD)


def mix64_np(z):
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + _GAMMA_U
        z = (z ^ (z >> np.uint64(30))) * _M1_U
        z = (z ^ (z >> np.uint64(27))) * _M2_U
    return z ^ (z >> np.uint64(31))


def derive_np(key, values):
    values = np.asarray(values, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64_np(np.uint64(key) ^ (values * _FOLD_U))


def derive_np_keys(keys, value):
    keys = np.asarray(keys, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64_np(keys ^ (np.uint64(value & MASK) * _FOLD_U))


def to_uniform_np(h):
    return (np.asarray(h, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) * _INV53


# numba twin -------------------------------------------------------------


@njit(cache=True)
def mix64_nb(z):
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def derive_nb(key, value):
    return mix64_nb(key ^ (np.uint64(value) * np.uint64(0xD1B54A32D192ED03)))


@njit(cache=True)
def uniform_nb(h):
    return np.float64(h >> np.uint64(11)) * (1.0 / 9007199254740992.0)
