import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from smxunmix.errors import ContractError
from smxunmix.numerics import (blkdiag_apply, blkdiag_dense, lrelu, relu, sigmoid,
                               stepwise_sum, tv_norm, tv_subgradient)


def test_blkdiag_scales_each_block():
    w = np.array([[1.0, 3.0], [2.0, 4.0]])
    np.testing.assert_array_equal(blkdiag_apply(w, [0.5, 0.5]), [0.5, 1.0, 1.5, 2.0])


def test_blkdiag_zero_h():
    w = np.random.default_rng(0).uniform(size=(5, 3))
    np.testing.assert_array_equal(blkdiag_apply(w, np.zeros(3)), np.zeros(15))


def test_blkdiag_matches_dense_matrix():
    rng = np.random.default_rng(7)
    w, h = rng.normal(size=(4, 3)), rng.normal(size=3)
    D = np.zeros((12, 3))
    for i in range(3):
        for b in range(4):
            D[4 * i + b, i] = w[b, i]
    expect = np.array([sum(D[r, c] * h[c] for c in range(3)) for r in range(12)])
    np.testing.assert_array_equal(blkdiag_apply(w, h), expect)
    np.testing.assert_array_equal(blkdiag_dense(w), D)


def test_blkdiag_batch_columns():
    rng = np.random.default_rng(1)
    w, H = rng.normal(size=(5, 3)), rng.normal(size=(3, 4))
    out = blkdiag_apply(w, H)
    for j in range(4):
        np.testing.assert_array_equal(out[:, j], blkdiag_apply(w, H[:, j]))


def test_blkdiag_dimension_mismatch():
    with pytest.raises(ContractError):
        blkdiag_apply(np.ones((4, 3)), np.ones(2))


def test_stepwise_sum_examples():
    np.testing.assert_array_equal(stepwise_sum(np.array([1.0, 2, 3, 4]), 2, 2), [4, 6])
    y = np.arange(5.0)
    np.testing.assert_array_equal(stepwise_sum(y, 5, 1), y)


def test_stepwise_sum_bad_length():
    with pytest.raises(ContractError):
        stepwise_sum(np.ones(7), 3, 2)


def test_stepwise_of_blkdiag_is_matrix_product():
    rng = np.random.default_rng(3)
    M, a = rng.uniform(size=(9, 4)), rng.dirichlet(np.ones(4))
    assert np.max(np.abs(stepwise_sum(blkdiag_apply(M, a), 9, 4) - M @ a)) <= 1e-12


def test_activations():
    assert lrelu(-1.0, 0.01) == pytest.approx(-0.01)
    assert relu(-3.0) == 0 and relu(3.0) == 3
    assert sigmoid(0.0) == 0.5
    assert np.isfinite(sigmoid(np.array([-1000.0, 1000.0]))).all()
    with pytest.raises(ContractError):
        lrelu(1.0, 1.5)


def test_lrelu_monotone_on_grid():
    x = np.linspace(-5, 5, 2001)
    for slope in (0.01, 0.2, 0.9):
        y = lrelu(x, slope)
        assert np.all(np.diff(y) >= 0)
        assert np.max(np.abs(np.diff(y))) < 0.01  # no jump


@pytest.mark.parametrize("v, expect", [([1, 1, 1], 0), ([0, 1, 0], 2), ([1, 2, 4], 3)])
def test_tv_norm_examples(v, expect):
    assert tv_norm(np.array(v, float)) == expect


def test_tv_norm_too_short():
    with pytest.raises(ContractError):
        tv_norm(np.array([1.0]))


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(2, 30), elements=st.floats(-1e3, 1e3)),
       st.floats(-1e3, 1e3))
def test_tv_norm_shift_invariant(v, c):
    t = tv_norm(v)
    assert t >= 0
    assert tv_norm(v + c) == pytest.approx(t, rel=1e-9, abs=1e-9)


def test_tv_subgradient_zero_sign_convention():
    g = tv_subgradient(np.array([[1.0], [1.0], [2.0]]))
    np.testing.assert_array_equal(g[:, 0], [0.0, -1.0, 1.0])
