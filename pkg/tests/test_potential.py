import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from saturate.de_engine import CoupledParams, EnsembleParams, bp_threshold, coupled_de
from saturate.potential import (
    GapSearchConfig,
    coupled_potential_grad,
    coupled_potential_U,
    de_map,
    energy_gap,
    monotone_grid,
    nonbinary_potential,
    nontrivial_fixed_points,
    potential_grad,
    potential_threshold,
    potential_U,
    w_bound,
)


@pytest.fixture(scope="module")
def sols():
    return {m: nonbinary_potential(EnsembleParams(3, 6, m)) for m in (1, 2, 3)}


def scalar_U(x, eps, dv=3, dc=6):
    g = 1 - (1 - x) ** (dc - 1)
    G = x + ((1 - x) ** dc - 1) / dc
    return x * g - G - eps * g**dv / dv


def scalar_potential_threshold(dv=3, dc=6):
    x = np.linspace(0.01, 1.0, 20001)
    lo, hi = 0.3, 0.6
    while hi - lo > 1e-7:
        mid = 0.5 * (lo + hi)
        if scalar_U(x, mid, dv, dc).min() > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fd_grad(fun, x, h=3e-4):
    out = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        out[idx] = (8 * (fun(x + e) - fun(x - e)) - (fun(x + 2 * e) - fun(x - 2 * e))) / (12 * h)
    return out


def test_binary_U_is_scalar_potential(sols):
    x = np.linspace(0, 1, 101)[:, None]
    for eps in (0.3, 0.48, 0.7):
        np.testing.assert_allclose(potential_U(sols[1], x, eps), scalar_U(x[:, 0], eps), atol=1e-14)


def test_binary_potential_threshold(sols):
    got = potential_threshold(sols[1], EnsembleParams(3, 6, 1), tol=1e-6)
    assert got == pytest.approx(scalar_potential_threshold(), abs=2e-6)
    assert got == pytest.approx(0.48815, abs=1e-4)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([1, 2, 3]), st.floats(0.1, 0.9), st.data())
def test_gradient_matches_finite_differences(sols, m, eps, data):
    x = np.array(sorted((data.draw(st.floats(0.05, 0.95)) for _ in range(m)), reverse=True))
    got = potential_grad(sols[m], x, eps)
    want = fd_grad(lambda z: potential_U(sols[m], z, eps), x)
    assert np.max(np.abs(got - want)) <= 1e-5 * max(np.max(np.abs(want)), 1e-3)


def largest_scalar_fixed_point(eps, dv=3, dc=6):
    x = np.linspace(1e-4, 1.0, 100001)
    h = x - eps * (1 - (1 - x) ** (dc - 1)) ** (dv - 1)
    k = np.nonzero(np.sign(h[:-1]) != np.sign(h[1:]))[0][-1]
    lo, hi = x[k], x[k + 1]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        hm = mid - eps * (1 - (1 - mid) ** (dc - 1)) ** (dv - 1)
        lo, hi = (mid, hi) if np.sign(hm) == np.sign(h[k]) else (lo, mid)
    return 0.5 * (lo + hi)


@pytest.mark.parametrize("eps", [0.44, 0.47, 0.4881, 0.52, 0.7])
def test_binary_energy_gap_matches_scalar_minimum(sols, eps):
    want = scalar_U(largest_scalar_fixed_point(eps), eps)
    assert energy_gap(sols[1], eps, EnsembleParams(3, 6, 1)) == pytest.approx(want, abs=1e-6)


def test_gradient_roots_are_fixed_points(sols):
    from scipy.optimize import root
    rng = np.random.default_rng(2)
    found = 0
    for m in (2, 3):
        sol = sols[m]
        for eps in (0.5, 0.7):
            for _ in range(6):
                x0 = -np.sort(-rng.uniform(0.3, 1.0, m))
                res = root(lambda z: potential_grad(sol, z, eps), x0, tol=1e-13)
                # zeros of U' with g'(x) invertible are fixed points of x -> f(g(x))
                if res.success and np.all((res.x > 0.05) & (res.x <= 1)):
                    found += 1
                    np.testing.assert_allclose(de_map(sol, res.x, eps), res.x, atol=1e-8)
    assert found >= 4


def test_coupled_gradient_matches_finite_differences(sols):
    rng = np.random.default_rng(11)
    cp = CoupledParams(EnsembleParams(3, 6, 2), 5, 3)
    for _ in range(5):
        X = -np.sort(-rng.uniform(0.05, 0.95, (cp.positions, 2)), axis=1)
        got = coupled_potential_grad(sols[2], cp, X, 0.47)
        want = fd_grad(lambda Z: coupled_potential_U(sols[2], cp, Z, 0.47), X)
        assert np.max(np.abs(got - want)) <= 1e-5 * np.max(np.abs(want))


def test_coupled_potential_uniform_profile_w1(sols):
    # with w = 1 the chain is L independent copies of the single system
    cp = CoupledParams(EnsembleParams(3, 6, 2), 4, 1)
    x = np.array([0.7, 0.4])
    X = np.tile(x, (4, 1))
    assert coupled_potential_U(sols[2], cp, X, 0.45) == pytest.approx(4 * potential_U(sols[2], x, 0.45))
    with pytest.raises(ValueError):
        coupled_potential_U(sols[2], cp, np.ones((3, 2)), 0.45)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_stationary_at_fixed_points(sols, m):
    p = EnsembleParams(3, 6, m)
    for eps in (0.45, 0.5, 0.6, 0.8):
        x = nontrivial_fixed_points(sols[m], eps, p)[0]
        np.testing.assert_allclose(de_map(sols[m], x, eps), x, atol=1e-11)
        assert np.max(np.abs(potential_grad(sols[m], x, eps))) < 1e-9


def test_coupled_stationary(sols):
    cp = CoupledParams(EnsembleParams(3, 6, 1), 15, 3)
    rep = coupled_de(cp, 0.55, tol=1e-14)
    assert np.max(np.abs(coupled_potential_grad(sols[1], cp, rep.fixed_point, 0.55))) < 1e-10


def test_energy_gap_regimes(sols):
    p = EnsembleParams(3, 6, 2)
    lo = bp_threshold(p)
    assert energy_gap(sols[2], lo - 0.01, p) == math.inf
    assert energy_gap(sols[2], lo + 0.01, p) > 0
    assert energy_gap(sols[2], 0.55, p) < 0


def test_gap_without_ensemble_uses_polynomial_maps(sols):
    p = EnsembleParams(3, 6, 2)
    a = energy_gap(sols[2], 0.47, p)
    b = energy_gap(sols[2], 0.47, None)
    assert a == pytest.approx(b, abs=1e-10)


def test_thresholds_ordered(sols):
    for m in (1, 2):
        p = EnsembleParams(3, 6, m)
        star = potential_threshold(sols[m], p, tol=1e-5)
        assert bp_threshold(p) < star < 0.5


def test_monotone_grid():
    g = monotone_grid(3, 4)
    assert np.all(np.diff(g, axis=1) <= 0)
    assert np.all(g[:, 0] > 0)
    assert len(g) == 20 - 1


def test_w_bound_binary_constants(sols):
    wb = w_bound(sols[1], 0.46, EnsembleParams(3, 6, 1))
    assert wb.alpha == pytest.approx(5.0)
    assert wb.beta == pytest.approx(20.0)
    assert wb.gamma == pytest.approx(0.92)
    assert wb.K == pytest.approx(48.0)
    assert wb.w_min == pytest.approx(wb.K / (2 * wb.delta_E))
    assert w_bound(sols[1], 0.46, delta_E=-1.0).w_min == math.inf


def test_w_min_grows_towards_eps_star(sols):
    p = EnsembleParams(3, 6, 2)
    grid = np.linspace(bp_threshold(p) + 1e-3, potential_threshold(sols[2], p, tol=1e-6) - 1e-4, 6)
    w = [w_bound(sols[2], e, p).w_min for e in grid]
    assert all(np.isfinite(w)) and all(a < b for a, b in zip(w, w[1:]))


def test_config_controls_seed_count(sols):
    cfg = GapSearchConfig(grid_points=3)
    pts = nontrivial_fixed_points(sols[2], 0.6, EnsembleParams(3, 6, 2), cfg)
    assert 1 <= len(pts) <= 1 + len(monotone_grid(2, 3))
