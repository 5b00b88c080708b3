"""Linear system for (D, phi, mu) such that F' = f D and G' = g D.

F(y; eps) = sum_beta phi_beta y^beta and G(x) = sum_beta mu_beta x^beta.
Matching coefficients of y^(beta - e_s) in dF/dy_s = sum_j d_js f_j gives

    beta_s * phi_beta = sum_j d_js * coeff(f_j, beta - e_s)

for every beta and every s with beta_s >= 1, and likewise for mu with g.
The shape of D is given as a boolean mask of allowed nonzero entries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from ..polynomial import EpsPoly, MultiPoly, differentiate, frac_text, grlex_key, shift_set, support, unshift_set

SHAPES = ("diagonal", "positive")


class Infeasible(Exception):
    """No potential function of the requested form exists."""

    def __init__(self, reason: str, witness=None):
        super().__init__(reason)
        self.reason = reason
        self.witness = witness


def shape_mask(shape, m: int) -> tuple:
    """Boolean m x m mask of entries allowed to be nonzero."""
    if isinstance(shape, str):
        if shape == "diagonal":
            return tuple(tuple(i == j for j in range(m)) for i in range(m))
        if shape in ("positive", "strictly-positive", "full"):
            return tuple(tuple(True for _ in range(m)) for _ in range(m))
        raise ValueError(f"unknown shape {shape!r}; expected one of {SHAPES} or a mask")
    mask = tuple(tuple(bool(v) for v in row) for row in shape)
    if len(mask) != m or any(len(row) != m for row in mask):
        raise ValueError(f"mask must be {m} x {m}")
    return mask


def _check_pair(f, g) -> int:
    f, g = tuple(f), tuple(g)
    m = len(f)
    if m == 0 or len(g) != m:
        raise ValueError("f and g must be nonempty vectors of the same length")
    if any(q.m != m for q in f + g):
        raise ValueError(f"every polynomial must have {m} variables")
    return m


def potential_support(polys, mask) -> frozenset:
    """S = union over allowed (i, s) of supp(p_i) + e_s."""
    m = len(polys)
    out = set()
    for i in range(m):
        s_i = support(polys[i])
        for s in range(m):
            if mask[i][s]:
                out |= shift_set(s_i, s + 1)
    return frozenset(out)


# -- necessary condition ---------------------------------------------------------

@dataclass
class ConditionResult:
    holds: bool
    side: str | None = None          # "f" or "g" for the first violation
    monomial: tuple | None = None    # element of S - e_j not covered
    j: int | None = None             # 1-based derivative index

    def __bool__(self):
        return self.holds

    def to_dict(self) -> dict:
        return {"holds": self.holds, "side": self.side,
                "monomial": list(self.monomial) if self.monomial is not None else None, "j": self.j}


def check_necessary_condition(f, g, shape="positive") -> ConditionResult:
    """Support-level test that dF/dy_j can equal sum_i d_ij f_i (and the same for G).

    For every j the monomials of S^F - e_j must lie in the union of supp(f_i)
    over the i with d_ij allowed nonzero.
    """
    m = _check_pair(f, g)
    mask = shape_mask(shape, m)
    for side, polys in (("f", tuple(f)), ("g", tuple(g))):
        big = potential_support(polys, mask)
        for j in range(m):
            allowed = set()
            for i in range(m):
                if mask[i][j]:
                    allowed |= support(polys[i])
            bad = sorted(unshift_set(big, j + 1) - allowed, key=grlex_key)
            if bad:
                return ConditionResult(False, side, bad[0], j + 1)
    return ConditionResult(True)


# -- the system ------------------------------------------------------------------

@dataclass(frozen=True)
class Equation:
    """beta_s * coef_beta = sum_j d_js * rhs[j]; ``side`` is "F" or "G", indices 1-based."""
    side: str
    beta: tuple
    s: int
    rhs: tuple  # ((j, EpsPoly), ...) over allowed j with nonzero coefficient

    @property
    def lhs(self) -> int:
        return self.beta[self.s - 1]

    def to_text(self) -> str:
        name = "phi" if self.side == "F" else "mu"
        idx = ",".join(map(str, self.beta))
        terms = " + ".join(f"({c.to_text()})*d{j}{self.s}" for j, c in self.rhs) or "0"
        return f"{self.lhs}*{name}({idx}) = {terms}"


@dataclass
class LinearSystem:
    m: int
    mask: tuple
    f: tuple
    g: tuple
    S_F: tuple
    S_G: tuple
    equations: tuple

    @property
    def n_phi(self) -> int:
        return len(self.S_F)

    @property
    def n_mu(self) -> int:
        return len(self.S_G)

    @property
    def N_phi(self) -> int:
        return sum(1 for e in self.equations if e.side == "F")

    @property
    def N_mu(self) -> int:
        return sum(1 for e in self.equations if e.side == "G")

    @property
    def n_d(self) -> int:
        return sum(map(sum, self.mask))

    def metadata(self) -> dict:
        return {
            "m": self.m,
            "size_SF": self.n_phi,
            "size_SG": self.n_mu,
            "N_phi": self.N_phi,
            "N_mu": self.N_mu,
            "unknowns": self.n_d + self.n_phi + self.n_mu,
            "equations": len(self.equations),
        }

    def grouped(self, side: str) -> dict:
        out: dict = {}
        for e in self.equations:
            if e.side == side:
                out.setdefault(e.beta, []).append(e)
        return out

    def d_constraints(self) -> list:
        """Rational rows over the m*m entries d_js (row-major) left after eliminating phi, mu.

        Each coefficient with t equations yields t-1 consistency conditions
        R_s / beta_s = R_s0 / beta_s0.  Conditions are polynomial in eps and
        must hold for every eps, so each power of eps gives its own row.
        """
        m = self.m
        rows = []
        for side in ("F", "G"):
            for beta, eqs in self.grouped(side).items():
                first = eqs[0]
                for e in eqs[1:]:
                    lin: dict = {}
                    for j, c in e.rhs:
                        key = (j - 1) * m + (e.s - 1)
                        lin[key] = lin.get(key, EpsPoly()) + c / e.lhs
                    for j, c in first.rhs:
                        key = (j - 1) * m + (first.s - 1)
                        lin[key] = lin.get(key, EpsPoly()) - c / first.lhs
                    deg = max((c.degree for c in lin.values()), default=-1)
                    for k in range(deg + 1):
                        row = [Fraction(0)] * (m * m)
                        for key, c in lin.items():
                            row[key] = c.coeff(k)
                        if any(row):
                            rows.append(row)
        return rows


def build_linear_system(f, g, shape="positive") -> LinearSystem:
    m = _check_pair(f, g)
    f, g = tuple(f), tuple(g)
    mask = shape_mask(shape, m)
    equations = []
    sets = {}
    for side, polys in (("F", f), ("G", g)):
        big = sorted(potential_support(polys, mask), key=grlex_key)
        sets[side] = tuple(big)
        for beta in big:
            for s in range(1, m + 1):
                if beta[s - 1] == 0:
                    continue
                alpha = beta[:s - 1] + (beta[s - 1] - 1,) + beta[s:]
                rhs = tuple(
                    (j + 1, polys[j].coefficient(alpha))
                    for j in range(m)
                    if mask[j][s - 1] and polys[j].coefficient(alpha)
                )
                equations.append(Equation(side, beta, s, rhs))
    return LinearSystem(m, mask, f, g, sets["F"], sets["G"], tuple(equations))


# -- solution --------------------------------------------------------------------

def _matrix_det(D) -> Fraction:
    n = len(D)
    M = DomainMatrix([[QQ(v.numerator, v.denominator) for v in row] for row in D], (n, n), QQ)
    d = M.det()
    return Fraction(int(d.numerator), int(d.denominator))


@dataclass
class PotentialSolution:
    D: tuple                  # m x m Fractions
    F: MultiPoly
    G: MultiPoly
    f: tuple
    g: tuple
    mask: tuple
    normalization: str = "d11 = 1"
    rank: int = 0             # rank of the d-constraint system
    free_parameters: int = 1  # dimension of the solution space of D
    metadata: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.D)

    @property
    def phi(self) -> dict:
        return dict(self.F.terms)

    @property
    def mu(self) -> dict:
        return dict(self.G.terms)

    @property
    def symmetric(self) -> bool:
        return all(self.D[i][j] == self.D[j][i] for i in range(self.m) for j in range(self.m))

    @property
    def positive(self) -> bool:
        """All entries allowed by the shape are > 0."""
        return all(self.D[i][j] > 0 for i in range(self.m) for j in range(self.m) if self.mask[i][j])

    @property
    def determinant(self) -> Fraction:
        return _matrix_det(self.D)

    @property
    def invertible(self) -> bool:
        return self.determinant != 0

    @property
    def admissible(self) -> bool:
        return self.symmetric and self.positive and self.invertible

    def D_float(self):
        import numpy as np
        return np.array([[float(v) for v in row] for row in self.D])

    def check_identities(self) -> bool:
        """F' = f D and G' = g D coefficientwise (exact)."""
        m = self.m
        for s in range(m):
            lhs_f = differentiate(self.F, s + 1)
            lhs_g = differentiate(self.G, s + 1)
            rhs_f = MultiPoly(m)
            rhs_g = MultiPoly(m)
            for j in range(m):
                if self.D[j][s]:
                    rhs_f = rhs_f + self.f[j] * self.D[j][s]
                    rhs_g = rhs_g + self.g[j] * self.D[j][s]
            if lhs_f != rhs_f or lhs_g != rhs_g:
                return False
        return True

    def scaled(self, a) -> "PotentialSolution":
        a = Fraction(a)
        if a <= 0:
            raise ValueError("scale must be positive")
        D = tuple(tuple(v * a for v in row) for row in self.D)
        return PotentialSolution(D, self.F * a, self.G * a, self.f, self.g, self.mask,
                                 f"{self.normalization}, scaled by {frac_text(a)}", self.rank,
                                 self.free_parameters, dict(self.metadata))

    def to_json(self) -> dict:
        return {
            "D": [[frac_text(v) for v in row] for row in self.D],
            "normalization": self.normalization,
            "shape_mask": [list(map(int, row)) for row in self.mask],
            "phi": self.F.to_json()["terms"],
            "mu": self.G.to_json()["terms"],
            "F": self.F.to_text("y"),
            "G": self.G.to_text("x"),
            "symmetric": self.symmetric,
            "positive": self.positive,
            "invertible": self.invertible,
            "determinant": frac_text(self.determinant),
            "rank": self.rank,
            "free_parameters": self.free_parameters,
            "metadata": self.metadata,
            "f": [q.to_json() for q in self.f],
            "g": [q.to_json() for q in self.g],
        }

    @classmethod
    def from_json(cls, data) -> "PotentialSolution":
        m = len(data["D"])
        D = tuple(tuple(Fraction(v) for v in row) for row in data["D"])
        F = MultiPoly.from_json({"m": m, "terms": data["phi"]})
        G = MultiPoly.from_json({"m": m, "terms": data["mu"]})
        f = tuple(MultiPoly.from_json(q) for q in data["f"])
        g = tuple(MultiPoly.from_json(q) for q in data["g"])
        mask = tuple(tuple(bool(v) for v in row) for row in data["shape_mask"])
        return cls(D, F, G, f, g, mask, data.get("normalization", "d11 = 1"), data.get("rank", 0),
                   data.get("free_parameters", 1), data.get("metadata", {}))


def _nullspace(rows, cols: list, n: int) -> tuple[int, list]:
    """Rank and rational nullspace basis of rows restricted to the given columns."""
    if not rows:
        basis = []
        for c in cols:
            v = [Fraction(0)] * n
            v[c] = Fraction(1)
            basis.append(v)
        return 0, basis
    M = DomainMatrix([[QQ(r[c].numerator, r[c].denominator) for c in cols] for r in rows],
                     (len(rows), len(cols)), QQ)
    rank = M.rank()
    basis = []
    for vec in M.nullspace().to_list():
        v = [Fraction(0)] * n
        for c, val in zip(cols, vec):
            v[c] = Fraction(int(val.numerator), int(val.denominator))
        basis.append(v)
    return rank, basis


def _coefficients(system: LinearSystem, side: str, d: list) -> dict:
    m = system.m
    out = {}
    for beta, eqs in system.grouped(side).items():
        e = eqs[0]
        total = EpsPoly()
        for j, c in e.rhs:
            dv = d[(j - 1) * m + (e.s - 1)]
            if dv:
                total = total + c * dv
        total = total / e.lhs
        if total:
            out[beta] = total
    return out


def solve_system(system: LinearSystem) -> PotentialSolution:
    """Eliminate phi, mu; solve for D exactly; rebuild F and G.

    Raises :class:`Infeasible` when the only solution is D = 0 or when some
    entry the shape requires to be nonzero is forced to zero.
    """
    m = system.m
    rows = system.d_constraints()
    cols = [i * m + j for i in range(m) for j in range(m) if system.mask[i][j]]
    rank, basis = _nullspace(rows, cols, m * m)
    if not basis:
        raise Infeasible("only D = 0 satisfies the system")
    for c in cols:
        if all(v[c] == 0 for v in basis):
            i, j = divmod(c, m)
            raise Infeasible(f"d{i + 1}{j + 1} is forced to 0", witness=(i + 1, j + 1))
    # pick a combination with every allowed entry nonzero
    d = None
    for weight in range(1, 2 + len(cols)):
        cand = [sum(Fraction(weight**k) * v[c] for k, v in enumerate(basis)) for c in range(m * m)]
        if all(cand[c] != 0 for c in cols):
            d = cand
            break
    assert d is not None, "no generic combination found"
    pivot = 0 if system.mask[0][0] else cols[0]
    scale = d[pivot]
    d = [v / scale for v in d]
    i0, j0 = divmod(pivot, m)
    normalization = f"d{i0 + 1}{j0 + 1} = 1"
    phi = _coefficients(system, "F", d)
    mu = _coefficients(system, "G", d)
    D = tuple(tuple(d[i * m + j] for j in range(m)) for i in range(m))
    sol = PotentialSolution(D, MultiPoly(m, phi), MultiPoly(m, mu), system.f, system.g, system.mask,
                            normalization, rank, len(basis), system.metadata())
    if not sol.check_identities():
        raise Infeasible("recovered F, G fail F' = f D / G' = g D")
    return sol


def solve_potential(f, g, shape="positive") -> PotentialSolution:
    """Check, build, solve for a generic (f, g) pair."""
    return solve_system(build_linear_system(f, g, shape))


# -- counting ----------------------------------------------------------------------

def counting_formulas(dv: int, dc: int, m: int) -> dict:
    """Closed-form |S^F|, |S^G|, N_phi, N_mu by counting monomials (F summed over degrees n = 3..dv)."""
    def count(lo, hi, weight):
        return sum(
            (t if weight else 1) * comb(n - 1, t - 1) * comb(m, t)
            for n in range(lo, hi + 1)
            for t in range(1, n + 1)
        )
    return {
        "size_SF": count(3, dv, False),
        "size_SG": count(2, dc, False),
        "N_phi": count(3, dv, True),
        "N_mu": count(2, dc, True),
    }


# -- bilayer example ---------------------------------------------------------------

def bilayer_system(l1: int, l2: int, r1: int, r2: int) -> tuple:
    """DE maps of a regular bilayer LDPC code on the erasure relay channel."""
    if min(l1, l2) < 1 or min(r1, r2) < 2:
        raise ValueError("need l1, l2 >= 1 and r1, r2 >= 2")
    eps = EpsPoly.eps()
    f1 = MultiPoly(2, {(l1 - 1, l2): eps})
    f2 = MultiPoly(2, {(l1, l2 - 1): eps})
    x1, x2 = MultiPoly.var(2, 1), MultiPoly.var(2, 2)
    g1 = 1 - (1 - x1) ** (r1 - 1)
    g2 = 1 - (1 - x2) ** (r2 - 1)
    return (f1, f2), (g1, g2)


def load_system(data: dict) -> tuple:
    """(f, g, shape) from a JSON system description.

    Either ``{"type": "bilayer", "l1":..., "l2":..., "r1":..., "r2":...}`` or
    ``{"f": [MultiPoly JSON...], "g": [...], "shape": "positive"}``.
    """
    kind = data.get("type", "polynomial")
    if kind == "bilayer":
        f, g = bilayer_system(int(data["l1"]), int(data["l2"]), int(data["r1"]), int(data["r2"]))
        return f, g, data.get("shape", "diagonal")
    if kind == "polynomial":
        f = tuple(MultiPoly.from_json(q) for q in data["f"])
        g = tuple(MultiPoly.from_json(q) for q in data["g"])
        return f, g, data.get("shape", "positive")
    raise ValueError(f"unknown system type {kind!r}")
