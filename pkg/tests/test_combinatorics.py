from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from saturate.combinatorics import (
    MAX_M,
    c_coeff,
    c_support,
    c_tensor,
    gaussian_binomial,
    v_coeff,
    v_support,
    v_tensor,
)
from oracles import all_subspaces, subspace_tables


@pytest.mark.parametrize("m", range(1, 5))
def test_gaussian_binomial_counts_subspaces(m):
    subs = all_subspaces(m)
    for k in range(m + 1):
        assert gaussian_binomial(m, k) == len(subs[k])


def test_gaussian_binomial_edges():
    assert gaussian_binomial(5, -1) == 0
    assert gaussian_binomial(5, 6) == 0
    assert gaussian_binomial(0, 0) == 1
    assert [gaussian_binomial(4, k) for k in range(5)] == [1, 15, 35, 15, 1]


@pytest.mark.parametrize("m", range(1, 5))
def test_coefficients_match_enumeration(m):
    V, C = subspace_tables(m)
    for i in range(m + 1):
        for j in range(m + 1):
            for k in range(m + 1):
                assert v_coeff(m, i, j, k) == V[i, j, k]
                assert c_coeff(m, i, j, k) == C[i, j, k]


@given(st.integers(1, 8), st.data())
def test_rows_are_distributions(m, data):
    i = data.draw(st.integers(0, m))
    j = data.draw(st.integers(0, m))
    assert sum(v_coeff(m, i, j, k) for k in range(m + 1)) == 1
    assert sum(c_coeff(m, i, j, k) for k in range(m + 1)) == 1
    assert all(v_coeff(m, i, j, k) >= 0 and c_coeff(m, i, j, k) >= 0 for k in range(m + 1))


@given(st.integers(1, 8), st.data())
def test_symmetric_in_operands(m, data):
    i, j, k = (data.draw(st.integers(0, m)) for _ in range(3))
    assert v_coeff(m, i, j, k) == v_coeff(m, j, i, k)
    assert c_coeff(m, i, j, k) == c_coeff(m, j, i, k)


@given(st.integers(1, 8), st.data())
def test_intersection_and_sum_are_dual(m, data):
    # dim(U cap W) = k  <=>  dim(U + W) = i + j - k
    i, j, k = (data.draw(st.integers(0, m)) for _ in range(3))
    if 0 <= i + j - k <= m:
        assert v_coeff(m, i, j, k) == c_coeff(m, i, j, i + j - k)
    else:
        assert v_coeff(m, i, j, k) == 0


def test_identity_elements():
    # full space is neutral for intersection, the zero space for sum
    for m in range(1, 7):
        for i in range(m + 1):
            assert v_coeff(m, i, m, i) == 1
            assert c_coeff(m, i, 0, i) == 1


def test_supports_list_only_nonzero():
    for m in range(1, 6):
        for gen, coeff in ((v_support, v_coeff), (c_support, c_coeff)):
            listed = {(i, j, k) for i, j, k, val in gen(m)}
            assert all(val > 0 for *_, val in gen(m))
            nonzero = {(i, j, k) for i in range(m + 1) for j in range(m + 1) for k in range(m + 1)
                       if coeff(m, i, j, k)}
            assert listed == nonzero


def test_tensors_are_float_readonly_copies():
    T = v_tensor(3)
    assert T.shape == (4, 4, 4)
    assert T[2, 2, 1] == pytest.approx(float(v_coeff(3, 2, 2, 1)))
    with pytest.raises(ValueError):
        T[0, 0, 0] = 1.0
    np.testing.assert_allclose(c_tensor(3).sum(axis=-1), 1.0)


def test_guard_on_m():
    with pytest.raises(ValueError):
        v_coeff(MAX_M + 1, 0, 0, 0)
    with pytest.raises(ValueError):
        c_tensor(MAX_M + 1)


def test_known_value():
    # two random lines in GF(2)^2 meet only in 0 unless equal (1 of 3)
    assert v_coeff(2, 1, 1, 1) == Fraction(1, 3)
    assert c_coeff(2, 1, 1, 2) == Fraction(2, 3)
