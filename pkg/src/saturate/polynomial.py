"""Sparse multivariate polynomials with exact coefficients that are polynomials in eps.

Variables are indexed 1..m in the public API (``shift_set(s, 1)`` adds one to
the first exponent), matching the usual y_1..y_m / x_1..x_m naming.
Monomials are exponent tuples; terms are kept in a dict and printed in
graded-lex order so text and JSON output is canonical.
"""
from __future__ import annotations

from fractions import Fraction
from math import comb
from numbers import Rational

import numpy as np

from .de_engine import EnsembleParams
from .message_algebra import boxdot, boxtimes, ccdf, op_power_linear, pmf

MAX_EXTRACT_M = 6

Monomial = tuple


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"expected an exact rational, got {type(c).__name__}")


def frac_text(c: Fraction) -> str:
    """'num/den' string (or just 'num' for integers)."""
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


class EpsPoly:
    """Univariate polynomial in eps with Fraction coefficients, lowest power first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        cs = [_frac(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def const(cls, c) -> "EpsPoly":
        return cls((c,))

    @classmethod
    def eps(cls) -> "EpsPoly":
        return cls((0, 1))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_constant(self) -> bool:
        return len(self.coeffs) <= 1

    @property
    def constant(self) -> Fraction:
        return self.coeffs[0] if self.coeffs else Fraction(0)

    def coeff(self, k: int) -> Fraction:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if isinstance(other, EpsPoly):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.coeffs == EpsPoly.const(other).coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __neg__(self):
        return EpsPoly(-c for c in self.coeffs)

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = EpsPoly.const(other)
        if not isinstance(other, EpsPoly):
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        return EpsPoly(self.coeff(k) + other.coeff(k) for k in range(n))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = EpsPoly.const(other)
        if not isinstance(other, EpsPoly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return EpsPoly(c * other for c in self.coeffs)
        if not isinstance(other, EpsPoly):
            return NotImplemented
        if not self.coeffs or not other.coeffs:
            return EpsPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return EpsPoly(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _frac(other)
        return EpsPoly(c / other for c in self.coeffs)

    def __pow__(self, n: int):
        out = EpsPoly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __call__(self, eps):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * eps + (c if isinstance(eps, Fraction) else float(c))
        return acc

    def to_text(self, var: str = "eps") -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if k == 0:
                parts.append(frac_text(c))
            else:
                mon = var if k == 1 else f"{var}^{k}"
                parts.append(mon if c == 1 else f"-{mon}" if c == -1 else f"{frac_text(c)}*{mon}")
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self) -> list:
        return [frac_text(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, data) -> "EpsPoly":
        return cls(Fraction(s) for s in data)

    def __repr__(self):
        return f"EpsPoly({self.to_text()})"


def _coerce(c) -> EpsPoly:
    return c if isinstance(c, EpsPoly) else EpsPoly.const(c)


def grlex_key(mono: Monomial):
    """Graded order: total degree first, then lexicographic with x_1 largest."""
    return (sum(mono), tuple(-e for e in mono))


class MultiPoly:
    """Polynomial in m variables, coefficients EpsPoly; zero terms never stored."""

    __slots__ = ("m", "terms")

    def __init__(self, m: int, terms=None):
        if m < 1:
            raise ValueError("m must be positive")
        self.m = m
        self.terms: dict = {}
        for mono, c in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != m or any(e < 0 for e in mono):
                raise ValueError(f"bad monomial {mono} for m={m}")
            c = _coerce(c)
            if c:
                self.terms[mono] = self.terms.get(mono, EpsPoly()) + c
                if not self.terms[mono]:
                    del self.terms[mono]

    @classmethod
    def zero(cls, m: int) -> "MultiPoly":
        return cls(m)

    @classmethod
    def const(cls, m: int, c) -> "MultiPoly":
        return cls(m, {(0,) * m: c})

    @classmethod
    def var(cls, m: int, k: int) -> "MultiPoly":
        """The variable x_k, 1 <= k <= m."""
        _check_index(m, k)
        return cls(m, {_unit(m, k): 1})

    def copy(self) -> "MultiPoly":
        out = MultiPoly(self.m)
        out.terms = dict(self.terms)
        return out

    # -- arithmetic ---------------------------------------------------------

    def _lift(self, other):
        if isinstance(other, MultiPoly):
            if other.m != self.m:
                raise ValueError(f"dimension mismatch: {self.m} vs {other.m}")
            return other
        if isinstance(other, (int, Fraction, EpsPoly)):
            return MultiPoly.const(self.m, other)
        return None

    def __add__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        out = self.copy()
        for mono, c in other.terms.items():
            s = out.terms.get(mono, EpsPoly()) + c
            if s:
                out.terms[mono] = s
            else:
                out.terms.pop(mono, None)
        return out

    __radd__ = __add__

    def __neg__(self):
        out = MultiPoly(self.m)
        out.terms = {mono: -c for mono, c in self.terms.items()}
        return out

    def __sub__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, EpsPoly)):
            other = _coerce(other)
            out = MultiPoly(self.m)
            if other:
                out.terms = {mono: c * other for mono, c in self.terms.items()}
            return out
        other = self._lift(other)
        if other is None:
            return NotImplemented
        acc: dict = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                mono = tuple(a + b for a, b in zip(ma, mb))
                acc[mono] = acc.get(mono, EpsPoly()) + ca * cb
        out = MultiPoly(self.m)
        out.terms = {mono: c for mono, c in acc.items() if c}
        return out

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = MultiPoly.const(self.m, 1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        other = self._lift(other) if not isinstance(other, MultiPoly) else other
        if other is None:
            return NotImplemented
        return self.m == other.m and self.terms == other.terms

    def __hash__(self):
        return hash((self.m, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    # -- inspection ---------------------------------------------------------

    def coefficient(self, mono) -> EpsPoly:
        return self.terms.get(tuple(mono), EpsPoly())

    def monomials(self) -> list:
        return sorted(self.terms, key=grlex_key)

    @property
    def degree(self) -> int:
        return max((sum(mono) for mono in self.terms), default=-1)

    @property
    def eps_degree(self) -> int:
        return max((c.degree for c in self.terms.values()), default=-1)

    def is_eps_free(self) -> bool:
        return all(c.is_constant() for c in self.terms.values())

    def at_eps(self, eps) -> "MultiPoly":
        """Substitute an exact eps value; coefficients become constants."""
        eps = _frac(eps)
        out = MultiPoly(self.m)
        out.terms = {mono: EpsPoly.const(c(eps)) for mono, c in self.terms.items() if c(eps) != 0}
        return out

    # -- calculus -----------------------------------------------------------

    def differentiate(self, k: int) -> "MultiPoly":
        return differentiate(self, k)

    def integrate(self, k: int) -> "MultiPoly":
        return integrate(self, k)

    def evaluate(self, x, eps=0):
        return evaluate(self, x, eps)

    # -- output -------------------------------------------------------------

    def to_text(self, var: str = "x") -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono in self.monomials():
            c = self.terms[mono]
            vars_ = "*".join(
                f"{var}{k + 1}" if e == 1 else f"{var}{k + 1}^{e}" for k, e in enumerate(mono) if e
            )
            if c.is_constant():
                ctext = frac_text(c.constant)
                if not vars_:
                    parts.append(ctext)
                else:
                    parts.append(vars_ if ctext == "1" else f"-{vars_}" if ctext == "-1" else f"{ctext}*{vars_}")
            else:
                ctext = f"({c.to_text()})"
                parts.append(f"{ctext}*{vars_}" if vars_ else ctext)
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "terms": [{"monomial": list(mono), "coeff": self.terms[mono].to_json()} for mono in self.monomials()],
        }

    @classmethod
    def from_json(cls, data) -> "MultiPoly":
        return cls(int(data["m"]), {tuple(t["monomial"]): EpsPoly.from_json(t["coeff"]) for t in data["terms"]})

    def __repr__(self):
        return f"MultiPoly(m={self.m}, {self.to_text()})"


def _check_index(m: int, k: int) -> None:
    if not 1 <= k <= m:
        raise ValueError(f"variable index {k} outside 1..{m}")


def _unit(m: int, k: int) -> Monomial:
    return tuple(int(i == k - 1) for i in range(m))


# -- support sets ------------------------------------------------------------------

def support(p: MultiPoly) -> frozenset:
    """Monomials with a nonzero coefficient."""
    return frozenset(p.terms)


def shift_set(s, k: int, m: int | None = None) -> frozenset:
    """s + e_k."""
    out = set()
    for mono in s:
        _check_index(len(mono), k)
        out.add(tuple(e + (i == k - 1) for i, e in enumerate(mono)))
    return frozenset(out)


def unshift_set(s, k: int) -> frozenset:
    """s - e_k: subtract one from coordinate k, dropping elements whose coordinate k is 0."""
    out = set()
    for mono in s:
        _check_index(len(mono), k)
        if mono[k - 1] > 0:
            out.add(tuple(e - (i == k - 1) for i, e in enumerate(mono)))
    return frozenset(out)


# -- calculus ------------------------------------------------------------------------

def differentiate(p: MultiPoly, k: int) -> MultiPoly:
    _check_index(p.m, k)
    out = MultiPoly(p.m)
    for mono, c in p.terms.items():
        e = mono[k - 1]
        if e:
            out.terms[mono[:k - 1] + (e - 1,) + mono[k:]] = c * e
    return out


def integrate(p: MultiPoly, k: int) -> MultiPoly:
    """Antiderivative in x_k vanishing at x_k = 0."""
    _check_index(p.m, k)
    out = MultiPoly(p.m)
    for mono, c in p.terms.items():
        e = mono[k - 1] + 1
        out.terms[mono[:k - 1] + (e,) + mono[k:]] = c / e
    return out


def gradient(p: MultiPoly) -> list:
    return [differentiate(p, k) for k in range(1, p.m + 1)]


# -- evaluation ----------------------------------------------------------------------

def _exact_inputs(x, eps) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in x) and isinstance(eps, (int, Fraction))


def evaluate(p: MultiPoly, x, eps=0):
    """p(x; eps); exact Fraction result for rational inputs, float otherwise."""
    x = list(x) if not isinstance(x, np.ndarray) else x.tolist()
    if len(x) != p.m:
        raise ValueError(f"point has length {len(x)}, expected {p.m}")
    if _exact_inputs(x, eps):
        x = [Fraction(v) for v in x]
        eps = Fraction(eps)
        total = Fraction(0)
    else:
        x = [float(v) for v in x]
        eps = float(eps)
        total = 0.0
    for mono, c in p.terms.items():
        term = c(eps)
        for v, e in zip(x, mono):
            if e:
                term = term * v**e
        total = total + term
    return total


class CompiledPolys:
    """Float evaluator for a vector of MultiPolys over batches of points.

    ``values(x, eps)`` maps (..., m) points to (..., n) values;
    ``jacobian(x, eps)`` returns (..., n, m).
    """

    def __init__(self, polys):
        polys = list(polys)
        if not polys:
            raise ValueError("need at least one polynomial")
        self.m = polys[0].m
        self.n = len(polys)
        monos = sorted({mono for p in polys for mono in p.terms}, key=grlex_key) or [(0,) * self.m]
        index = {mono: t for t, mono in enumerate(monos)}
        self.exps = np.array(monos, dtype=np.int64).reshape(len(monos), self.m)
        deg = max((p.eps_degree for p in polys), default=0)
        deg = max(deg, 0)
        # coeff[k, t, i]: eps^k coefficient of monomial t in polynomial i
        self.coeff = np.zeros((deg + 1, len(monos), self.n))
        for i, p in enumerate(polys):
            for mono, c in p.terms.items():
                for k, v in enumerate(c.coeffs):
                    self.coeff[k, index[mono], i] = float(v)
        self._polys = polys
        self._jac = None

    def _matrix(self, eps) -> np.ndarray:
        eps = np.asarray(eps, dtype=float)
        powers = eps[..., None] ** np.arange(self.coeff.shape[0])
        return np.tensordot(powers, self.coeff, axes=([-1], [0]))

    def _monomials(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.prod(x[..., None, :] ** self.exps, axis=-1)

    def values(self, x, eps=0.0) -> np.ndarray:
        mono = self._monomials(x)
        mat = self._matrix(eps)
        if mat.ndim == 2:
            return mono @ mat
        return np.einsum("...t,...ti->...i", mono, mat)

    def jacobian(self, x, eps=0.0) -> np.ndarray:
        if self._jac is None:
            self._jac = [CompiledPolys([differentiate(p, k) for p in self._polys]) for k in range(1, self.m + 1)]
        cols = [c.values(x, eps) for c in self._jac]
        return np.stack(cols, axis=-1)


# -- extraction of DE maps -------------------------------------------------------------

def channel_polys(m: int) -> tuple:
    """p(eps) as constant-in-x MultiPolys with EpsPoly coefficients."""
    e = EpsPoly.eps()
    one_minus = EpsPoly((1, -1))
    return tuple(MultiPoly.const(m, comb(m, i) * e**i * one_minus ** (m - i)) for i in range(m + 1))


def variable_vector(m: int) -> tuple:
    """(x_1, ..., x_m) as MultiPolys."""
    return tuple(MultiPoly.var(m, k) for k in range(1, m + 1))


def extract_de_polynomials(p: EnsembleParams, max_m: int = MAX_EXTRACT_M):
    """Exact polynomial forms (f, g) of the CCDF-domain DE updates.

    f_j(y; eps) = [H(p(eps) ⊡ (⊡^{dv-1} y∘))]_j, g_j(x) = [H(⊠^{dc-1} x∘)]_j.
    """
    if p.m > max_m:
        raise ValueError(f"m={p.m} exceeds the symbolic expansion guard max_m={max_m}")
    m = p.m
    v = pmf(variable_vector(m))
    inner = op_power_linear(boxdot, v, p.dv - 1)
    f = ccdf(boxdot(channel_polys(m), inner))
    g = ccdf(op_power_linear(boxtimes, v, p.dc - 1))
    return tuple(f), tuple(g)


def polys_to_json(polys) -> list:
    return [q.to_json() for q in polys]


def polys_from_json(data) -> tuple:
    return tuple(MultiPoly.from_json(d) for d in data)
