import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from saturate.de_engine import (
    CoupledParams,
    EnsembleParams,
    bp_threshold,
    bp_threshold_bracket,
    coupled_bp_threshold,
    coupled_de,
    coupled_step,
    coupling_matrix,
    de_fixed_point,
    f_update,
    g_update,
)
from saturate.message_algebra import channel_vector
from oracles import scalar_coupled_profile, scalar_de_threshold


@pytest.mark.parametrize("dv,dc,tol", [(3, 6, 2e-5), (4, 8, 2e-5), (3, 4, 2e-5),
                                       # dv = 2 decays geometrically at rate 2 eps near 0, so probes
                                       # just below 1/2 run out of iterations and count as failures
                                       (2, 3, 1e-3)])
def test_binary_threshold_matches_closed_form(dv, dc, tol):
    want = scalar_de_threshold(dv, dc)
    got = bp_threshold(EnsembleParams(dv, dc, 1))
    assert got <= want + 2e-5
    assert got == pytest.approx(want, abs=tol)


def test_m1_updates_are_scalar_de():
    p = EnsembleParams(3, 6, 1)
    rng = np.random.default_rng(5)
    x = rng.random((100, 1))
    eps = rng.random(100)
    np.testing.assert_allclose(g_update(x, p)[:, 0], 1 - (1 - x[:, 0]) ** 5, atol=1e-12)
    np.testing.assert_allclose(f_update(x, eps, p)[:, 0], eps * x[:, 0] ** 2, atol=1e-12)
    composed = f_update(g_update(x, p), eps, p)[:, 0]
    np.testing.assert_allclose(composed, eps * (1 - (1 - x[:, 0]) ** 5) ** 2, atol=1e-12)


def test_thresholds_decrease_with_m():
    # known (3,6) values: 0.4294, 0.4235, 0.4122
    vals = [bp_threshold(EnsembleParams(3, 6, m)) for m in (1, 2, 3)]
    assert vals == sorted(vals, reverse=True)
    assert vals[0] == pytest.approx(0.42944, abs=1e-4)


def test_bracket_is_tight_and_ordered():
    p = EnsembleParams(3, 6, 2)
    lo, hi = bp_threshold_bracket(p, bisect_tol=1e-4)
    assert 0 < hi - lo <= 1e-4
    assert de_fixed_point(p, lo).success
    assert not de_fixed_point(p, hi).success


@pytest.mark.parametrize("m", [1, 2, 3])
def test_compiled_matches_numpy(m):
    p = EnsembleParams(3, 6, m)
    for eps in (0.3, 0.45, 0.6):
        a = de_fixed_point(p, eps, backend="compiled")
        b = de_fixed_point(p, eps, backend="numpy")
        assert a.iterations == b.iterations
        np.testing.assert_allclose(a.fixed_point, b.fixed_point, atol=1e-12)
    cp = CoupledParams(p, 12, 3)
    a = coupled_de(cp, 0.5, max_iter=300, backend="compiled")
    b = coupled_de(cp, 0.5, max_iter=300, backend="numpy")
    np.testing.assert_allclose(a.fixed_point, b.fixed_point, atol=1e-12)


def test_unknown_backend():
    with pytest.raises(ValueError):
        de_fixed_point(EnsembleParams(3, 6, 1), 0.3, backend="gpu")


@pytest.mark.parametrize("eps", [0.45, 0.5])
def test_coupled_m1_matches_scalar_chain(eps):
    cp = CoupledParams(EnsembleParams(3, 6, 1), 20, 3)
    rep = coupled_de(cp, eps, tol=1e-13, success_tol=0.0, max_iter=20000)
    want = scalar_coupled_profile(3, 6, 20, 3, eps, max_iter=20000)
    np.testing.assert_allclose(rep.fixed_point[:, 0], want, atol=1e-9)


def test_coupling_matrix_shape_and_rows():
    A = coupling_matrix(5, 3)
    assert A.shape == (5, 7)
    np.testing.assert_allclose(A.sum(axis=1), 1.0)


def test_coupled_step_fixes_zero():
    cp = CoupledParams(EnsembleParams(3, 6, 2), 8, 3)
    X = np.zeros((cp.positions, 2))
    np.testing.assert_array_equal(coupled_step(X, cp, channel_vector(2, 0.7)), 0.0)


def test_coupling_improves_threshold():
    p = EnsembleParams(3, 6, 2)
    cp = CoupledParams(p, 30, 3)
    lo = bp_threshold(p)
    assert coupled_bp_threshold(cp, bisect_tol=1e-3, lo=lo) > lo + 0.05


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.floats(0.05, 0.95), st.floats(0.0, 0.05))
def test_fixed_point_monotone_in_eps(m, eps, d):
    p = EnsembleParams(3, 6, m)
    a = de_fixed_point(p, eps, success_tol=0.0).fixed_point
    b = de_fixed_point(p, min(eps + d, 1.0), success_tol=0.0).fixed_point
    assert np.all(a <= b + 1e-9)


def test_parameter_validation():
    with pytest.raises(ValueError):
        EnsembleParams(1, 6, 1)
    with pytest.raises(ValueError):
        CoupledParams(EnsembleParams(3, 6, 1), 0, 3)
    with pytest.raises(ValueError):
        de_fixed_point(EnsembleParams(3, 6, 2), 0.3, x0=np.ones(3))
    with pytest.raises(ValueError):
        de_fixed_point(EnsembleParams(3, 6, 2), 0.3, tol=0)
