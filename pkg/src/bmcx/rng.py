"""Counter-based random streams.

Every Monte Carlo path owns an independent stream keyed by ``(seed, path)``.
Draw ``k`` of a stream is a pure function of ``(seed, path, k)``: the key is
hashed with the SplitMix64 finalizer and the counter is advanced by the
golden-ratio Weyl increment. Nothing is shared between paths, so results do
not depend on how paths are scheduled across workers.

The scalar functions are numba-compiled for use inside simulation kernels;
:func:`normals` is a vectorized numpy twin that yields identical values.
"""
import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_PATH_SALT = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
TWO_PI = 2.0 * np.pi


@njit(cache=True, inline="always")
def mix64(x):
    """SplitMix64 finalizer (bijective 64-bit avalanche)."""
    x = (x ^ (x >> _S30)) * _M1
    x = (x ^ (x >> _S27)) * _M2
    return x ^ (x >> _S31)


@njit(cache=True)
def stream_key(seed, path):
    """Key of the substream for ``path`` under the global ``seed``."""
    return mix64(mix64(np.uint64(seed)) ^ mix64(np.uint64(path) * _PATH_SALT + GOLDEN))


@njit(cache=True, inline="always")
def uniform(key, counter):
    """Uniform on (0, 1] for draw number ``counter`` of stream ``key``."""
    bits = mix64(np.uint64(key) + np.uint64(counter) * GOLDEN)
    return (np.float64(bits >> _S11) + 1.0) * _INV53


@njit(cache=True, inline="always")
def normal_pair(key, counter):
    """Two independent standard normals from draws ``counter``, ``counter+1``.

    Box-Muller; consumes two counter values.
    """
    u1 = uniform(key, counter)
    u2 = uniform(key, np.uint64(counter) + np.uint64(1))
    rad = np.sqrt(-2.0 * np.log(u1))
    ang = TWO_PI * u2
    return rad * np.cos(ang), rad * np.sin(ang)


def _mix64_np(x):
    with np.errstate(over="ignore"):
        x = (x ^ (x >> _S30)) * _M1
        x = (x ^ (x >> _S27)) * _M2
    return x ^ (x >> _S31)


def stream_keys(seed, paths):
    """Vectorized :func:`stream_key` over an array of path indices."""
    paths = np.asarray(paths, dtype=np.uint64)
    with np.errstate(over="ignore"):
        salted = paths * _PATH_SALT + GOLDEN
    return _mix64_np(_mix64_np(np.uint64(seed)) ^ _mix64_np(salted))


def uniforms(keys, counters):
    """Vectorized :func:`uniform`; broadcasts ``keys`` against ``counters``."""
    keys = np.asarray(keys, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        bits = _mix64_np(keys + counters * GOLDEN)
    return ((bits >> _S11).astype(np.float64) + 1.0) * _INV53


def normals(seed, path, n_pairs):
    """``2 * n_pairs`` standard normals of one stream, in draw order.

    Element ``2k`` and ``2k+1`` equal ``normal_pair(key, 2k)``.
    """
    key = stream_keys(seed, [path])[0]
    counters = np.arange(2 * n_pairs, dtype=np.uint64)
    u = uniforms(key, counters)
    u1, u2 = u[0::2], u[1::2]
    rad = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * n_pairs)
    out[0::2] = rad * np.cos(TWO_PI * u2)
    out[1::2] = rad * np.sin(TWO_PI * u2)
    return out
