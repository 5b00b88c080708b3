"""Subspace counting over GF(2)^m.

Gaussian binomials and the intersection/sum transition probabilities used by
the variable-node and check-node operations.  Everything is exact
(``fractions.Fraction`` or ``int``); callers convert to floats themselves.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import numpy as np

MAX_M = 12


def _check_m(m: int) -> None:
    if m > MAX_M:
        raise ValueError(f"m={m} exceeds the configured limit MAX_M={MAX_M}")


@lru_cache(maxsize=None)
def gaussian_binomial(m: int, k: int) -> int:
    """Number of k-dimensional subspaces of GF(2)^m (0 outside 0 <= k <= m)."""
    if m < 0 or k < 0 or k > m:
        return 0
    if k == 0 or k == m:
        return 1
    num = 1
    den = 1
    for ell in range(k):
        num *= 2**m - 2**ell
        den *= 2**k - 2**ell
    q, r = divmod(num, den)
    assert r == 0
    return q


@lru_cache(maxsize=None)
def v_coeff(m: int, i: int, j: int, k: int) -> Fraction:
    """P(dim(U ∩ W) = k) for fixed dim U = i and uniformly random dim W = j."""
    _check_m(m)
    if not (0 <= i <= m and 0 <= j <= m):
        return Fraction(0)
    if not (max(i + j - m, 0) <= k <= min(i, j)):
        return Fraction(0)
    num = gaussian_binomial(i, k) * gaussian_binomial(m - i, j - k) * 2 ** ((i - k) * (j - k))
    return Fraction(num, gaussian_binomial(m, j))


@lru_cache(maxsize=None)
def c_coeff(m: int, i: int, j: int, k: int) -> Fraction:
    """P(dim(U + W) = k) for fixed dim U = i and uniformly random dim W = j."""
    _check_m(m)
    if not (0 <= i <= m and 0 <= j <= m):
        return Fraction(0)
    if not (max(i, j) <= k <= min(m, i + j)):
        return Fraction(0)
    num = gaussian_binomial(m - i, m - k) * gaussian_binomial(i, k - j) * 2 ** ((k - i) * (k - j))
    return Fraction(num, gaussian_binomial(m, m - j))


def v_support(m: int):
    """Yield (i, j, k, V) for every nonzero V^m_{i,j,k}."""
    for i in range(m + 1):
        for j in range(m + 1):
            for k in range(max(i + j - m, 0), min(i, j) + 1):
                yield i, j, k, v_coeff(m, i, j, k)


def c_support(m: int):
    """Yield (i, j, k, C) for every nonzero C^m_{i,j,k}."""
    for i in range(m + 1):
        for j in range(m + 1):
            for k in range(max(i, j), min(m, i + j) + 1):
                yield i, j, k, c_coeff(m, i, j, k)


@lru_cache(maxsize=None)
def _tensor(m: int, kind: str) -> np.ndarray:
    out = np.zeros((m + 1, m + 1, m + 1))
    support = v_support if kind == "v" else c_support
    for i, j, k, val in support(m):
        out[i, j, k] = float(val)
    out.setflags(write=False)
    return out


def v_tensor(m: int) -> np.ndarray:
    """Read-only float array T[i, j, k] = V^m_{i,j,k}."""
    _check_m(m)
    return _tensor(m, "v")


def c_tensor(m: int) -> np.ndarray:
    """Read-only float array T[i, j, k] = C^m_{i,j,k}."""
    _check_m(m)
    return _tensor(m, "c")
