"""Counter-based random streams.

Every walker owns a stream addressed by ``(seed, replicate, walker)``; the
n-th variate of a stream is a SplitMix64 finalizer applied to
``key + (n + 1) * GOLDEN``.  No state is shared between walkers, so results
do not depend on how walkers are scheduled across threads.
"""
import numpy as np
from numba import njit

__all__ = ["mix64", "seed_key", "replicate_key", "walker_key", "uniform", "uniforms"]

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_REP = np.uint64(0xD1B54A32D192ED03)
_WALK = np.uint64(0x8CB92BA72F3D8DD7)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0
MASK64 = (1 << 64) - 1


@njit(cache=True, nogil=True)
def mix64(z):
    z = np.uint64(z)
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def seed_key(seed) -> np.uint64:
    """Map any Python integer seed onto a 64-bit stream root."""
    return np.uint64(mix64(np.uint64((int(seed) + int(GOLDEN)) & MASK64)))


@njit(cache=True, nogil=True)
def replicate_key(root, rep):
    return mix64(np.uint64(root) ^ mix64(np.uint64(rep) * _REP + GOLDEN))


@njit(cache=True, nogil=True)
def walker_key(rkey, walker):
    return mix64(np.uint64(rkey) ^ mix64(np.uint64(walker) * _WALK + _REP))


@njit(cache=True, nogil=True)
def uniform(key, n):
    """n-th variate of the stream, uniform on (0, 1]."""
    z = mix64(np.uint64(key) + (np.uint64(n) + _ONE) * GOLDEN)
    return (np.float64(z >> _S11) + 1.0) * _INV53


@njit(cache=True, nogil=True)
def uniforms(key, n0, count):
    out = np.empty(count)
    for i in range(count):
        out[i] = uniform(key, n0 + i)
    return out
