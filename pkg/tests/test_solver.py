import json
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from saturate.de_engine import EnsembleParams
from saturate.polynomial import EpsPoly, MultiPoly, extract_de_polynomials
from saturate.potential import (
    Infeasible,
    PotentialSolution,
    bilayer_system,
    build_linear_system,
    check_necessary_condition,
    counting_formulas,
    load_system,
    nonbinary_potential,
    shape_mask,
    solve_potential,
)
from oracles import integrable_D

F = Fraction


@pytest.mark.parametrize("dv,dc,m", [(2, 3, 2), (3, 4, 2), (3, 6, 2), (3, 4, 3), (3, 6, 3), (2, 3, 3)])
def test_D_matches_integrability_oracle(dv, dc, m):
    f, g = extract_de_polynomials(EnsembleParams(dv, dc, m))
    basis = integrable_D(f, g)
    assert len(basis) == 1
    want = basis[0] / basis[0][0, 0]
    sol = solve_potential(f, g)
    got = sp.Matrix([[sp.Rational(v.numerator, v.denominator) for v in row] for row in sol.D])
    assert got == want
    assert sol.free_parameters == 1
    assert sol.rank == m * m - 1


def test_small_cases():
    assert nonbinary_potential(EnsembleParams(3, 4, 2)).D == ((1, 2), (2, 1))
    assert nonbinary_potential(EnsembleParams(3, 4, 3)).D == ((1, 2, 4), (2, 3, 2), (4, 2, 1))


def test_m4_solution_is_admissible():
    sol = nonbinary_potential(EnsembleParams(3, 6, 4))
    assert sol.admissible
    assert sol.D[1][1] == F(25, 7) and sol.D[1][2] == F(38, 7)
    assert sol.check_identities()


def test_binary_case_is_scalar_potential():
    # m = 1: F and G are the plain antiderivatives of f = eps y^2 and g = 1 - (1 - x)^5
    sol = nonbinary_potential(EnsembleParams(3, 6, 1))
    y = MultiPoly.var(1, 1)
    assert sol.D == ((1,),)
    assert sol.F == y**3 * EpsPoly((0, F(1, 3)))
    assert sol.G == y + ((1 - y) ** 6 - 1) * F(1, 6)


@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("dv,dc", [(2, 3), (3, 4), (3, 6)])
def test_diagonal_is_infeasible(dv, dc, m):
    f, g = extract_de_polynomials(EnsembleParams(dv, dc, m))
    verdict = check_necessary_condition(f, g, "diagonal")
    assert not verdict.holds
    assert verdict.side in ("f", "g") and verdict.monomial is not None
    with pytest.raises(Infeasible):
        solve_potential(f, g, "diagonal")


def test_diagonal_witness_is_genuine():
    f, g = extract_de_polynomials(EnsembleParams(2, 3, 2))
    v = check_necessary_condition(f, g, "diagonal")
    polys = f if v.side == "f" else g
    # the witness is missing from supp(p_j), the only polynomial allowed in column j
    assert v.monomial not in polys[v.j - 1].terms


@pytest.mark.parametrize("case", [(3, 3, 6, 6), (2, 3, 4, 5), (1, 2, 3, 4)])
def test_bilayer_closed_forms(case):
    l1, l2, r1, r2 = case
    f, g = bilayer_system(*case)
    assert check_necessary_condition(f, g, "diagonal").holds
    sol = solve_potential(f, g, "diagonal").scaled(l1)
    assert sol.D == ((l1, 0), (0, l2))
    assert sol.F == MultiPoly(2, {(l1, l2): EpsPoly.eps()})
    x1, x2 = MultiPoly.var(2, 1), MultiPoly.var(2, 2)
    G = (x1 + ((1 - x1) ** r1 - 1) * F(1, r1)) * l1 + (x2 + ((1 - x2) ** r2 - 1) * F(1, r2)) * l2
    assert sol.G == G


def test_bilayer_from_json():
    f, g, shape = load_system({"type": "bilayer", "l1": 3, "l2": 3, "r1": 6, "r2": 6})
    assert shape == "diagonal"
    assert solve_potential(f, g, shape).D == ((1, 0), (0, 1))
    with pytest.raises(ValueError):
        load_system({"type": "mystery"})


def test_generic_polynomial_system():
    # f = grad of eps y1 y2 under D = I, g = grad of x1^2 x2
    x1, x2 = MultiPoly.var(2, 1), MultiPoly.var(2, 2)
    e = EpsPoly.eps()
    f = (x2 * e, x1 * e)
    g = (2 * x1 * x2, x1 * x1)
    # integrability forces d12 = 0 here, so only the diagonal shape is feasible
    with pytest.raises(Infeasible):
        solve_potential(f, g, "full")
    assert solve_potential(f, g, "diagonal").check_identities()
    data = {"f": [q.to_json() for q in f], "g": [q.to_json() for q in g], "shape": "diagonal"}
    f2, g2, shape = load_system(json.loads(json.dumps(data)))
    assert solve_potential(f2, g2, shape).D == ((1, 0), (0, 1))


def test_forced_zero_entry_is_infeasible():
    # only the identity works, so a full-shape request forces d12 = 0
    x1, x2 = MultiPoly.var(2, 1), MultiPoly.var(2, 2)
    f = (x1 * x1, x2 * x2 * x2)
    g = (x1, x2 * x2)
    with pytest.raises(Infeasible) as info:
        solve_potential(f, g, "full")
    assert info.value.witness in ((1, 2), (2, 1))


@pytest.mark.parametrize("dv,dc,m", [(3, 4, 2), (3, 4, 3)])
def test_system_sizes(dv, dc, m):
    f, g = extract_de_polynomials(EnsembleParams(dv, dc, m))
    meta = build_linear_system(f, g).metadata()
    want = {(3, 4, 2): (16, 24), (3, 4, 3): (41, 75)}[(dv, dc, m)]
    assert (meta["size_SF"] + meta["size_SG"], meta["N_phi"] + meta["N_mu"]) == want


@pytest.mark.parametrize("dc", [4, 5, 6])
@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_counting_formulas_dv3(dc, m):
    f, g = extract_de_polynomials(EnsembleParams(3, dc, m))
    meta = build_linear_system(f, g).metadata()
    assert {k: meta[k] for k in ("size_SF", "size_SG", "N_phi", "N_mu")} == counting_formulas(3, dc, m)


def test_equation_text():
    f, g = extract_de_polynomials(EnsembleParams(2, 3, 2))
    eqs = build_linear_system(f, g).equations
    assert any(e.to_text().startswith("2*phi(2,0)") for e in eqs)


def test_solution_json_roundtrip():
    sol = nonbinary_potential(EnsembleParams(2, 3, 2))
    back = PotentialSolution.from_json(json.loads(json.dumps(sol.to_json())))
    assert back.D == sol.D and back.F == sol.F and back.G == sol.G and back.f == sol.f
    assert back.check_identities()


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.data())
def test_recovers_planted_potential(m, data):
    # plant random F, G and symmetric positive D, derive f, g, then solve back
    def rand_poly(deg_eps):
        terms = {}
        for _ in range(data.draw(st.integers(1, 4))):
            mono = tuple(data.draw(st.integers(0, 3)) for _ in range(m))
            if sum(mono) < 2:
                continue
            terms[mono] = EpsPoly([data.draw(st.integers(1, 5)) for _ in range(deg_eps + 1)])
        return MultiPoly(m, terms)

    Fp, Gp = rand_poly(1), rand_poly(0)
    if not Fp.terms or not Gp.terms:
        return
    D = sp.Matrix(m, m, lambda i, j: 0)
    for i in range(m):
        for j in range(i, m):
            D[i, j] = D[j, i] = data.draw(st.integers(1, 4))
    D[0, 0] = 1
    if D.det() == 0:
        return
    Dinv = D.inv()
    grad = lambda P: [P.differentiate(k) for k in range(1, m + 1)]
    def times(vec, M):
        out = []
        for s in range(m):
            acc = MultiPoly(m)
            for j in range(m):
                c = M[j, s]
                if c:
                    acc = acc + vec[j] * F(int(c.p), int(c.q))
            out.append(acc)
        return tuple(out)
    f = times(grad(Fp), Dinv)
    g = times(grad(Gp), Dinv)
    sol = solve_potential(f, g, "full")
    assert sol.check_identities()
    # the planted D lies in the solution space; with one free parameter it is the solution
    if sol.free_parameters == 1:
        assert sp.Matrix(sol.D) == D / D[0, 0]


def test_shape_mask():
    assert shape_mask("diagonal", 2) == ((True, False), (False, True))
    with pytest.raises(ValueError):
        shape_mask("banded", 2)
    with pytest.raises(ValueError):
        shape_mask([[1, 0]], 2)


@pytest.mark.parametrize("dv,dc,m", [(2, 3, 2), (2, 5, 3), (3, 4, 3), (4, 5, 2), (4, 5, 3), (5, 6, 2)])
def test_F_support_is_homogeneous_of_degree_dv(dv, dc, m):
    # only the n = dv term of the F-side count survives; the G side sums n = 2..dc
    from math import comb
    f, g = extract_de_polynomials(EnsembleParams(dv, dc, m))
    system = build_linear_system(f, g)
    assert {sum(b) for b in system.S_F} == {dv}
    assert system.n_phi == sum(comb(dv - 1, t - 1) * comb(m, t) for t in range(1, dv + 1))
    assert system.N_phi == sum(t * comb(dv - 1, t - 1) * comb(m, t) for t in range(1, dv + 1))
    want = counting_formulas(dv, dc, m)
    assert (system.n_mu, system.N_mu) == (want["size_SG"], want["N_mu"])
