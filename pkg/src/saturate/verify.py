"""Property and golden-value suites behind ``saturate verify``.

Each suite returns a list of :class:`Check` records; nothing raises on a
failed check so a run always produces a full summary.
"""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from importlib import resources

import numpy as np

from .combinatorics import c_coeff, gaussian_binomial, v_coeff
from .de_engine import (
    CoupledParams,
    EnsembleParams,
    bp_threshold,
    coupled_bp_threshold,
    coupled_de,
    de_fixed_point,
    f_update,
    g_update,
)
from .message_algebra import boxdot, boxtimes, ccdf, pmf
from .polynomial import MultiPoly, extract_de_polynomials, polys_from_json, support
from .potential import (
    Infeasible,
    bilayer_system,
    build_linear_system,
    check_necessary_condition,
    coupled_potential_grad,
    coupled_potential_U,
    counting_formulas,
    energy_gap,
    nonbinary_potential,
    potential_grad,
    potential_threshold,
    potential_U,
    solve_potential,
)

SEED = 20240601


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def golden(name: str) -> dict:
    return json.loads(resources.files("saturate.golden").joinpath(name).read_text())


def _timed(suite, name, fn) -> Check:
    t = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failed check
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return Check(suite, name, bool(ok), detail, time.perf_counter() - t)


# -- Gaussian binomial and V ratio identities ------------------------------------------

def _ratio_checks(m_max: int) -> dict:
    G = gaussian_binomial
    bad = {"gauss-ratio-1": 0, "gauss-ratio-2": 0, "gauss-ratio-3": 0,
           "v-ratio-i": 0, "v-ratio-i-bound": 0, "v-ratio-diag": 0, "v-ratio-full": 0}
    for m in range(1, m_max + 1):
        for i in range(m + 1):
            bad["gauss-ratio-1"] += Fraction(G(m, i + 1), G(m, i)) != Fraction(2**(m - i) - 1, 2**(i + 1) - 1)
            bad["gauss-ratio-2"] += Fraction(G(m + 1, i), G(m, i)) != Fraction(2**(m + 1) - 1, 2**(m - i + 1) - 1)
            bad["gauss-ratio-3"] += Fraction(G(m + 1, i + 1), G(m, i)) != Fraction(2**(m + 1) - 1, 2**(i + 1) - 1)
        for l in range(m + 1):
            for i in range(l + 1, m + 1):
                for j in range(l, m + l - i + 1):
                    r = v_coeff(m, i, j, l) / v_coeff(m, i - 1, j, l)
                    want = (Fraction(2**(i - l)) - Fraction(1, 2**l)) / (2**(i - l) - 1) \
                        * Fraction(2**(m + l - i + 1) - 2**j, 2**(m - i + 1) - 1)
                    bad["v-ratio-i"] += r != want
                    if l > 0 and j - l <= m - i:
                        bad["v-ratio-i-bound"] += not r > 2**(l - 1)
        for l in range(1, m + 1):
            for i in range(l, m + 1):
                for j in range(l + 1, m + l - i + 1):
                    r = v_coeff(m, i, j, l) / v_coeff(m, i - 1, j, l - 1)
                    bad["v-ratio-diag"] += r != Fraction(2**i - 1, 2**(m + 1) - 2**i) * Fraction(2**(j + 1) - 2**l, 2**l - 1)
            bad["v-ratio-full"] += v_coeff(m, l, m, l) / v_coeff(m, l - 1, m, l - 1) != 1
    return bad


def suite_appendix_a(m_max: int = 8) -> list:
    out = []
    t = time.perf_counter()
    bad = _ratio_checks(m_max)
    dt = time.perf_counter() - t
    for name, n in bad.items():
        out.append(Check("appendix-a", f"{name} (m<={m_max})", n == 0, f"{n} violations", dt / len(bad)))

    def stochastic():
        worst = 0
        for m in range(1, min(m_max, 6) + 1):
            for i in range(m + 1):
                for j in range(m + 1):
                    sv = sum(v_coeff(m, i, j, k) for k in range(m + 1))
                    sc = sum(c_coeff(m, i, j, k) for k in range(m + 1))
                    worst += (sv != 1) + (sc != 1)
        return worst == 0, f"{worst} rows not summing to 1"
    out.append(_timed("appendix-a", "row-stochastic V, C (m<=6)", stochastic))
    return out


# -- simplex / monotonicity --------------------------------------------------------------

def _random_pmf(rng, m, n):
    return rng.dirichlet(np.ones(m + 1), size=n)


def suite_simplex(n: int = 1000, seed: int = SEED) -> list:
    rng = np.random.default_rng(seed)

    def run():
        worst = 0.0
        for m in range(1, 5):
            a, b = _random_pmf(rng, m, n), _random_pmf(rng, m, n)
            for op in (boxdot, boxtimes):
                c = op(a, b)
                worst = max(worst, np.abs(c.sum(-1) - 1).max(), -c.min())
        return worst < 1e-12, f"max simplex violation {worst:.2e}"

    def algebra():
        worst = 0.0
        for m in range(1, 5):
            a, b, c = (_random_pmf(rng, m, 200) for _ in range(3))
            for op in (boxdot, boxtimes):
                worst = max(worst, np.abs(op(a, b) - op(b, a)).max(), np.abs(op(op(a, b), c) - op(a, op(b, c))).max())
        return worst < 1e-12, f"max commutativity/associativity error {worst:.2e}"
    return [_timed("simplex", "simplex preserved (m<=4)", run),
            _timed("simplex", "commutative and associative (m<=4)", algebra)]


def random_ordered_pairs(rng, m: int, n: int):
    """n random CCDF pairs x <= y componentwise."""
    y = -np.sort(-rng.random((n, m)), axis=1)
    x = y * rng.random((n, 1)) ** 2
    # shrink coordinates independently but keep x monotone
    x = np.minimum.accumulate(np.minimum(x, y * rng.random((n, m))), axis=1)
    return x, y


def suite_monotonicity(n: int = 1000, seed: int = SEED) -> list:
    rng = np.random.default_rng(seed)

    def run():
        worst = 0.0
        for m in range(1, 5):
            for dv, dc in ((2, 3), (3, 6), (4, 8)):
                p = EnsembleParams(dv, dc, m)
                x, y = random_ordered_pairs(rng, m, n)
                eps = rng.random((n, 1))
                worst = max(worst, (f_update(x, eps[:, 0], p) - f_update(y, eps[:, 0], p)).max())
                worst = max(worst, (g_update(x, p) - g_update(y, p)).max())
        return worst <= 1e-12, f"max order violation {worst:.2e}"

    def eps_monotone():
        worst = np.inf
        for m in range(1, 5):
            p = EnsembleParams(3, 6, m)
            x, _ = random_ordered_pairs(rng, m, 200)
            x = np.maximum(x, 1e-3)
            eps = 0.05 + 0.9 * rng.random(200)
            worst = min(worst, (f_update(x, eps + 1e-6, p) - f_update(x, eps, p)).min())
        return worst > 0, f"min forward difference in eps {worst:.2e}"
    return [_timed("monotonicity", "f, g order preserving (1000 pairs per m<=4)", run),
            _timed("monotonicity", "f strictly increasing in eps", eps_monotone)]


# -- gradients -----------------------------------------------------------------------

def _fd_grad(fun, x, h=3e-4):
    """Five-point central differences; truncation O(h^4) keeps roundoff small."""
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        g[idx] = (8 * (fun(x + e) - fun(x - e)) - (fun(x + 2 * e) - fun(x - 2 * e))) / (12 * h)
    return g


def _rel_err(a, b) -> float:
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-12))


def suite_gradient(n: int = 100, seed: int = SEED) -> list:
    rng = np.random.default_rng(seed)
    sols = {m: nonbinary_potential(EnsembleParams(3, 6, m)) for m in (1, 2, 3)}

    def single():
        worst = 0.0
        for m, sol in sols.items():
            for _ in range(n):
                x = -np.sort(-rng.uniform(0.05, 0.95, m))
                eps = rng.uniform(0.1, 0.9)
                worst = max(worst, _rel_err(potential_grad(sol, x, eps), _fd_grad(lambda z: potential_U(sol, z, eps), x)))
        return worst < 1e-5, f"max relative error {worst:.2e}"

    def coupled():
        worst = 0.0
        for m in (1, 2):
            cp = CoupledParams(EnsembleParams(3, 6, m), 6, 3)
            for _ in range(n):
                X = -np.sort(-rng.uniform(0.05, 0.95, (cp.positions, m)), axis=1)
                eps = rng.uniform(0.1, 0.9)
                fd = _fd_grad(lambda Z: coupled_potential_U(sols[m], cp, Z, eps), X)
                worst = max(worst, _rel_err(coupled_potential_grad(sols[m], cp, X, eps), fd))
        return worst < 1e-5, f"max relative error {worst:.2e}"

    def stationary():
        worst = 0.0
        for m, sol in sols.items():
            p = EnsembleParams(3, 6, m)
            # above eps_BP so DE stops at a genuine fixed point rather than the success cutoff
            for eps in rng.uniform(bp_threshold(p) + 0.01, 0.95, 50):
                x = de_fixed_point(p, eps, tol=1e-13).fixed_point
                worst = max(worst, float(np.abs(potential_grad(sol, x, eps)).max()))
        return worst < 1e-6, f"max gradient sup-norm at fixed points {worst:.2e}"

    def coupled_stationary():
        m = 2
        cp = CoupledParams(EnsembleParams(3, 6, m), 20, 3)
        rep = coupled_de(cp, 0.52, tol=1e-13)
        val = float(np.abs(coupled_potential_grad(sols[m], cp, rep.fixed_point, 0.52)).max())
        return val < 1e-6, f"gradient sup-norm {val:.2e} at coupled fixed point"

    def decreasing():
        bad = 0
        for m, sol in sols.items():
            for _ in range(n):
                x = -np.sort(-rng.uniform(0.05, 1.0, m))
                e1, e2 = np.sort(rng.uniform(0.01, 0.99, 2))
                if e2 - e1 < 1e-3:
                    continue
                bad += not potential_U(sol, x, e2) < potential_U(sol, x, e1)
        return bad == 0, f"{bad} violations of U(x; e2) < U(x; e1)"
    return [_timed("gradient", "U' formula vs central differences", single),
            _timed("gradient", "coupled row formula vs central differences", coupled),
            _timed("gradient", "gradient vanishes at DE fixed points", stationary),
            _timed("gradient", "coupled gradient vanishes at coupled fixed point", coupled_stationary),
            _timed("gradient", "U strictly decreasing in eps", decreasing)]


# -- golden values -------------------------------------------------------------------

def _D_from_json(rows):
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def suite_table2() -> list:
    out = []
    for row in golden("table2.json")["rows"]:
        p = EnsembleParams(row["dv"], row["dc"], row["m"])
        label = f"({p.dv},{p.dc},{p.m})"

        def counts(p=p, row=row):
            f, g = extract_de_polynomials(p)
            meta = build_linear_system(f, g).metadata()
            got = (meta["size_SF"] + meta["size_SG"], meta["N_phi"] + meta["N_mu"])
            want = (row["size_S"], row["N_eq"])
            return got == want, f"got |S^F|+|S^G|, N = {got}, reference {want}"

        def dmatrix(p=p, row=row):
            sol = nonbinary_potential(p)
            want = _D_from_json(row["D"])
            got = [[str(v) for v in r] for r in sol.D]
            return sol.D == want, f"got D = {got}, reference {row['D']}"
        out.append(_timed("table2", f"{label} system size", counts))
        out.append(_timed("table2", f"{label} resulting D", dmatrix))
    return out


def suite_example2() -> list:
    data = golden("example2.json")
    p = EnsembleParams(data["dv"], data["dc"], data["m"])

    def maps():
        f, g = extract_de_polynomials(p)
        ok = f == polys_from_json(data["f"]) and g == polys_from_json(data["g"])
        sup = [sorted(support(q)) for q in f] == [sorted(map(tuple, s)) for s in data["support_f"]] and \
            [sorted(support(q)) for q in g] == [sorted(map(tuple, s)) for s in data["support_g"]]
        return ok and sup, "f, g and their supports"

    def solution():
        sol = nonbinary_potential(p)
        m = p.m
        phi = MultiPoly.from_json({"m": m, "terms": data["phi"]})
        mu = MultiPoly.from_json({"m": m, "terms": data["mu"]})
        checks = {
            "D": sol.D == _D_from_json(data["D"]),
            "phi": sol.F == phi,
            "mu": sol.G == mu,
            "S_F": set(sol.F.terms) == set(map(tuple, data["S_F"])),
            "S_G": set(sol.G.terms) == set(map(tuple, data["S_G"])),
            "identities": sol.check_identities(),
        }
        return all(checks.values()), ", ".join(f"{k}={'ok' if v else 'MISMATCH'}" for k, v in checks.items())

    def diagonal():
        f, g = extract_de_polynomials(p)
        return not check_necessary_condition(f, g, "diagonal").holds, "diagonal condition rejected"
    return [_timed("example2", "DE polynomials", maps), _timed("example2", "D, phi, mu, F, G", solution),
            _timed("example2", "diagonal D rejected", diagonal)]


def bilayer_G(l1, l2, r1, r2) -> MultiPoly:
    x1, x2 = MultiPoly.var(2, 1), MultiPoly.var(2, 2)
    return (x1 + ((1 - x1) ** r1 - 1) * Fraction(1, r1)) * l1 + (x2 + ((1 - x2) ** r2 - 1) * Fraction(1, r2)) * l2


def suite_example1() -> list:
    out = []
    for case in golden("example1.json")["cases"]:
        l1, l2, r1, r2 = case

        def run(l1=l1, l2=l2, r1=r1, r2=r2):
            f, g = bilayer_system(l1, l2, r1, r2)
            cond = check_necessary_condition(f, g, "diagonal").holds
            sol = solve_potential(f, g, "diagonal").scaled(l1)
            from .polynomial import EpsPoly
            F_want = MultiPoly(2, {(l1, l2): EpsPoly.eps()})
            ok = cond and sol.D == ((l1, 0), (0, l2)) and sol.F == F_want and sol.G == bilayer_G(l1, l2, r1, r2)
            return ok, f"D = diag({sol.D[0][0]}, {sol.D[1][1]}), F = {sol.F.to_text('y')}"
        out.append(_timed("example1", f"bilayer {tuple(case)}", run))
    return out


NONBINARY_SET = [(dv, dc, m) for dv, dc in ((2, 3), (3, 4), (3, 6)) for m in (2, 3, 4)]


def suite_diagonal() -> list:
    def run():
        bad = []
        for dv, dc, m in NONBINARY_SET:
            f, g = extract_de_polynomials(EnsembleParams(dv, dc, m))
            if check_necessary_condition(f, g, "diagonal").holds:
                bad.append((dv, dc, m, "condition holds"))
            try:
                solve_potential(f, g, "diagonal")
                bad.append((dv, dc, m, "solver found a diagonal D"))
            except Infeasible:
                pass
        return not bad, f"{len(NONBINARY_SET)} ensembles, failures: {bad}"
    return [_timed("diagonal", "diagonal D infeasible", run)]


def suite_counting() -> list:
    out = []
    for dv, dc in ((2, 3), (3, 4), (3, 6)):
        for m in range(1, 5):
            def run(dv=dv, dc=dc, m=m):
                f, g = extract_de_polynomials(EnsembleParams(dv, dc, m))
                meta = build_linear_system(f, g).metadata()
                got = {k: meta[k] for k in ("size_SF", "size_SG", "N_phi", "N_mu")}
                want = counting_formulas(dv, dc, m)
                return got == want, f"enumerated {got}, formula {want}"
            out.append(_timed("counting", f"({dv},{dc},{m})", run))
    return out


def suite_structure() -> list:
    def run():
        bad = []
        for dv, dc, m in NONBINARY_SET:
            sol = nonbinary_potential(EnsembleParams(dv, dc, m))
            if not (sol.admissible and sol.rank == m * m - 1 and sol.free_parameters == 1 and sol.check_identities()):
                bad.append((dv, dc, m))
        return not bad, f"non-admissible or rank != m^2-1: {bad}"
    return [_timed("structure", "positive shape: admissible D, rank m^2-1", run)]


# -- thresholds ----------------------------------------------------------------------

def suite_table1(ms=(1, 3)) -> list:
    data = golden("table1.json")
    out = []
    for row in data["rows"]:
        for m in ms:
            want = row["eps_bp"][str(m)]

            def run(row=row, m=m, want=want):
                p = EnsembleParams(row["dv"], row["dc"], m)
                cp = CoupledParams(p, data["L"], data["w"])
                got = coupled_bp_threshold(cp, bisect_tol=1e-4, lo=bp_threshold(p))
                return abs(got - want) <= data["tolerance"], f"got {got:.5f}, reference {want}"
            out.append(_timed("table1", f"({row['dv']},{row['dc']},m={m})", run))
    return out


def suite_saturation(ms=(1, 2), w: int = 5, L: int = 100) -> list:
    out = []
    for m in ms:
        def run(m=m):
            p = EnsembleParams(3, 6, m)
            sol = nonbinary_potential(p)
            lo = bp_threshold(p)
            star = potential_threshold(sol, p, tol=1e-6)
            coupled = coupled_bp_threshold(CoupledParams(p, L, w), bisect_tol=1e-4, lo=lo)
            gap_bp = energy_gap(sol, lo + 1e-5, p)
            gap_star = energy_gap(sol, star, p)
            ok = abs(coupled - star) < 2e-3 and gap_bp > 0 and abs(gap_star) < 1e-4
            return ok, (f"eps* {star:.5f}, coupled eps_BP(w={w}) {coupled:.5f}, "
                        f"dE(eps_BP) {gap_bp:.2e}, dE(eps*) {gap_star:.2e}")
        out.append(_timed("saturation", f"(3,6,m={m})", run))

    def curve():
        bad = []
        for m in ms:
            p = EnsembleParams(3, 6, m)
            sol = nonbinary_potential(p)
            lo = bp_threshold(p)
            star = potential_threshold(sol, p, tol=1e-5)
            gaps = [energy_gap(sol, e, p) for e in np.linspace(lo, star, 10)[1:-1]]
            if not np.all(np.diff(gaps) < 0):
                bad.append(m)
        return not bad, f"non-decreasing curves for m in {bad}"
    out.append(_timed("saturation", "energy gap strictly decreasing on (eps_BP, eps*)", curve))
    return out


SUITES = {
    "appendix-a": suite_appendix_a,
    "simplex": suite_simplex,
    "monotonicity": suite_monotonicity,
    "gradient": suite_gradient,
    "example1": suite_example1,
    "example2": suite_example2,
    "table2": suite_table2,
    "diagonal": suite_diagonal,
    "counting": suite_counting,
    "structure": suite_structure,
    "table1": suite_table1,
    "saturation": suite_saturation,
}


def run_suites(names=None, m_max: int | None = None) -> list:
    names = list(SUITES) if not names or names == ["all"] else names
    out = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
        if name == "appendix-a" and m_max is not None:
            out.extend(suite_appendix_a(m_max))
        else:
            out.extend(SUITES[name]())
    return out
