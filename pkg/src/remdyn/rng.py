"""Counter-based keyed random streams.

Every random quantity in the package is a pure function of a 64-bit key and a
64-bit counter, so landscapes and trajectories can be regenerated on demand
and replayed bit-for-bit from their seeds, inside or outside numba kernels.
"""

from __future__ import annotations

import hashlib
import math

import numba as nb
import numpy as np

MASK64 = (1 << 64) - 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@nb.njit(cache=True)
def mix64(z):
    """SplitMix64 finalizer (a bijection of uint64)."""
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(cache=True)
def keyed_bits(key, ctr):
    z = mix64(key ^ mix64(ctr * _GOLDEN + _GOLDEN))
    return mix64(z + key)


@nb.njit(cache=True)
def keyed_uniform(key, ctr):
    """Uniform on the open interval (0, 1) with 53 random bits."""
    return (np.float64(keyed_bits(key, ctr) >> _S11) + 0.5) * _INV53


# Acklam's rational approximation, polished by one Halley step on erfc.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)


@nb.njit(cache=True)
def norm_ppf(p):
    """Standard normal quantile for 0 < p < 1."""
    plow = 0.02425
    if p < plow:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    elif p > 1.0 - plow:
        q = math.sqrt(-2.0 * math.log1p(-p))
        x = -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
              / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    else:
        q = p - 0.5
        r = q * q
        x = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    # Halley refinement; work on the smaller tail to keep relative accuracy
    if x < 0.0:
        e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    else:
        e = (1.0 - p) - 0.5 * math.erfc(x / math.sqrt(2.0))
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


@nb.njit(cache=True)
def keyed_normal(key, ctr):
    return norm_ppf(keyed_uniform(key, ctr))


@nb.njit(cache=True)
def keyed_exponential(key, ctr):
    return -math.log(keyed_uniform(key, ctr))


def as_key(seed: int) -> np.uint64:
    return np.uint64(int(seed) & MASK64)


def derive_seed(root: int, *parts) -> int:
    """Stable 64-bit child seed from a root seed and a tuple of tags."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(root) & MASK64).encode())
    for p in parts:
        h.update(b"\x1f")
        h.update(str(p).encode())
    return int.from_bytes(h.digest(), "little")


def disorder_seed(root: int, d: int) -> int:
    return derive_seed(root, "disorder", d)


def path_seed(root: int, d: int, p: int) -> int:
    return derive_seed(root, d, p)


def numpy_rng(seed: int) -> np.random.Generator:
    """A numpy Generator for bulk draws (cascades, labellings)."""
    return np.random.default_rng(int(seed) & MASK64)
