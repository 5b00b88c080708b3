"""Dimension distributions of BEC messages over GF(2)^m.

A probability vector ``p`` has length m+1 (``p[k]`` = P(message dimension k));
its CCDF vector ``x`` has length m with ``x[i-1] = sum_{k>=i} p[k]``.

Two backends share one set of functions:

* numpy float arrays (batched over leading axes) for density evolution;
* tuples of exact ring elements (``Fraction``, or any object supporting
  ``+``, ``-`` and ``*`` with Fractions, e.g. :class:`saturate.polynomial.MultiPoly`)
  for symbolic work.

Float inputs given as lists are promoted to arrays; anything containing a
``Fraction``/``int``/non-numeric object stays on the exact path.
"""
from __future__ import annotations

from fractions import Fraction
from math import comb
from numbers import Real

import numpy as np

from .combinatorics import c_support, c_tensor, v_support, v_tensor

NEG_TOL = 1e-14
SUM_TOL = 1e-12
ORDER_TOL = 1e-12


def _is_numeric(a) -> bool:
    if isinstance(a, np.ndarray):
        return True
    return any(isinstance(v, (float, np.floating)) for v in a)


def _exact_sum(terms, zero=0):
    total = zero
    for t in terms:
        total = total + t
    return total


# -- constructors ------------------------------------------------------------

def delta(m: int, k: int, exact: bool = False):
    """Unit mass at dimension k."""
    if not 0 <= k <= m:
        raise ValueError(f"dimension {k} outside 0..{m}")
    if exact:
        return tuple(Fraction(int(i == k)) for i in range(m + 1))
    out = np.zeros(m + 1)
    out[k] = 1.0
    return out


def channel_vector(m: int, eps):
    """Dimension distribution of the channel message: Binomial(m, eps)."""
    if m < 1:
        raise ValueError("m must be positive")
    if isinstance(eps, Real) and not 0 <= eps <= 1:
        raise ValueError(f"eps={eps} outside [0, 1]")
    if isinstance(eps, (float, np.floating)):
        i = np.arange(m + 1)
        return np.array([comb(m, k) for k in range(m + 1)], dtype=float) * eps**i * (1 - eps) ** (m - i)
    return tuple(comb(m, i) * eps**i * (1 - eps) ** (m - i) for i in range(m + 1))


# -- validation ----------------------------------------------------------------

def check_prob_vector(p, m: int | None = None):
    """Validate a probability vector; tiny negative float noise is clamped and renormalized."""
    if _is_numeric(p):
        p = np.asarray(p, dtype=float)
        if m is not None and p.shape[-1] != m + 1:
            raise ValueError(f"expected length {m + 1}, got {p.shape[-1]}")
        if p.shape[-1] < 2:
            raise ValueError("probability vector needs length >= 2")
        if np.any(p < -NEG_TOL):
            raise ValueError(f"negative entry {p.min()!r} in probability vector")
        s = p.sum(axis=-1)
        if np.any(np.abs(s - 1) > SUM_TOL):
            raise ValueError(f"probability vector sums to {s!r}")
        if np.any(p < 0):
            p = np.maximum(p, 0.0)
            p = p / p.sum(axis=-1, keepdims=True)
        return p
    p = tuple(p)
    if m is not None and len(p) != m + 1:
        raise ValueError(f"expected length {m + 1}, got {len(p)}")
    if len(p) < 2:
        raise ValueError("probability vector needs length >= 2")
    if any(v < 0 for v in p):
        raise ValueError("negative entry in probability vector")
    if sum(p) != 1:
        raise ValueError(f"probability vector sums to {sum(p)}")
    return p


def check_ccdf_vector(x, m: int | None = None):
    """Validate 1 >= x_1 >= ... >= x_m >= 0 (within ORDER_TOL for floats)."""
    if _is_numeric(x):
        x = np.asarray(x, dtype=float)
        if m is not None and x.shape[-1] != m:
            raise ValueError(f"expected length {m}, got {x.shape[-1]}")
        padded = np.concatenate([np.ones(x.shape[:-1] + (1,)), x, np.zeros(x.shape[:-1] + (1,))], axis=-1)
        if np.any(np.diff(padded, axis=-1) > ORDER_TOL):
            raise ValueError(f"not a CCDF vector: {x!r}")
        return x
    x = tuple(x)
    if m is not None and len(x) != m:
        raise ValueError(f"expected length {m}, got {len(x)}")
    padded = (1,) + x + (0,)
    if any(b > a for a, b in zip(padded, padded[1:])):
        raise ValueError(f"not a CCDF vector: {x!r}")
    return x


# -- the bijection H -------------------------------------------------------------

def ccdf(p):
    """Tail sums without validation (works on symbolic entries)."""
    if _is_numeric(p):
        p = np.asarray(p, dtype=float)
        return np.cumsum(p[..., ::-1], axis=-1)[..., ::-1][..., 1:]
    p = tuple(p)
    out = []
    acc = 0
    for v in reversed(p[1:]):
        acc = acc + v
        out.append(acc)
    return tuple(reversed(out))


def pmf(x):
    """Inverse of :func:`ccdf` without validation (works on symbolic entries)."""
    if _is_numeric(x):
        x = np.asarray(x, dtype=float)
        lead = 1.0 - x[..., :1]
        mid = x[..., :-1] - x[..., 1:]
        return np.concatenate([lead, mid, x[..., -1:]], axis=-1)
    x = tuple(x)
    return (1 - x[0],) + tuple(x[i] - x[i + 1] for i in range(len(x) - 1)) + (x[-1],)


def to_ccdf(p):
    """Validated probability vector -> CCDF vector."""
    return ccdf(check_prob_vector(p))


def from_ccdf(x):
    """Validated CCDF vector -> probability vector."""
    x = check_ccdf_vector(x)
    p = pmf(x)
    if _is_numeric(p):
        p = np.maximum(p, 0.0)
    return p


# -- node operations -------------------------------------------------------------

def _same_m(a, b) -> int:
    la = a.shape[-1] if isinstance(a, np.ndarray) else len(a)
    lb = b.shape[-1] if isinstance(b, np.ndarray) else len(b)
    if la != lb:
        raise ValueError(f"dimension mismatch: {la - 1} vs {lb - 1}")
    return la - 1


def _float_bilinear(a, b, tensor):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    n = a.shape[-1]
    outer = (a[..., :, None] * b[..., None, :]).reshape(a.shape[:-1] + (n * n,))
    return outer @ tensor.reshape(n * n, n)


def _exact_bilinear(a, b, m, support):
    out = [[] for _ in range(m + 1)]
    for i, j, k, coeff in support(m):
        out[k].append(coeff * a[i] * b[j])
    return tuple(_exact_sum(terms) for terms in out)


def boxdot(a, b):
    """Variable-node operation: distribution of dim(U ∩ W)."""
    m = _same_m(a, b)
    if _is_numeric(a) or _is_numeric(b):
        return _float_bilinear(a, b, v_tensor(m))
    return _exact_bilinear(a, b, m, v_support)


def boxtimes(a, b):
    """Check-node operation: distribution of dim(U + W)."""
    m = _same_m(a, b)
    if _is_numeric(a) or _is_numeric(b):
        return _float_bilinear(a, b, c_tensor(m))
    return _exact_bilinear(a, b, m, c_support)


def op_power(op, a, n: int):
    """a op a op ... op a with n operands (n >= 1), by repeated squaring."""
    if n < 1:
        raise ValueError("need at least one operand")
    result = None
    base = a
    while n:
        if n & 1:
            result = base if result is None else op(result, base)
        n >>= 1
        if n:
            base = op(base, base)
    return result


def op_power_linear(op, a, n: int):
    """Left fold of op over n copies of a; cheaper than squaring when a is small symbolic data."""
    if n < 1:
        raise ValueError("need at least one operand")
    result = a
    for _ in range(n - 1):
        result = op(result, a)
    return result


def precedes(x, y, tol: float = ORDER_TOL) -> bool:
    """Componentwise partial order x ⪯ y."""
    return bool(np.all(np.asarray(x, dtype=float) <= np.asarray(y, dtype=float) + tol))
