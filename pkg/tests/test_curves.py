import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fknn_cmlm.curves import (
    CovariateType,
    Dataset,
    center,
    check_grid,
    derive,
    pooled_sd,
    standardize,
    trapezoid_weights,
)
from fknn_cmlm.exceptions import DataError

from conftest import make_dataset

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_trapezoid_weights_integrate_linear_exactly():
    grid = np.array([0.0, 0.5, 2.0, 3.0])
    w = trapezoid_weights(grid)
    assert w.sum() == pytest.approx(3.0)
    assert w @ (2 * grid + 1) == pytest.approx(9.0 + 3.0)


@pytest.mark.parametrize("grid", [[0, 1], [0, 2, 1], [0, 1, np.nan]])
def test_check_grid_rejects_bad_grids(grid):
    with pytest.raises(DataError):
        check_grid(grid)


def test_derive_order_zero_is_identity():
    x = np.array([[3.0, -1.0, 2.0, 5.0]])
    np.testing.assert_array_equal(derive(x, np.arange(4.0), 0), x)


def test_derive_linear_and_quadratic():
    t = np.arange(4.0)
    np.testing.assert_allclose(derive(2 * t + 1, t, 1), 2.0, atol=1e-12)
    np.testing.assert_allclose(derive(t ** 2, t, 2), 2.0, atol=1e-12)


def test_derive_quadratic_on_uneven_grid():
    t = np.array([0.0, 0.3, 1.0, 1.2, 2.5, 3.0])
    np.testing.assert_allclose(derive(3 * t ** 2 - t, t, 1), 6 * t - 1, atol=1e-10)


def test_derive_order_too_high():
    with pytest.raises(DataError):
        derive(np.zeros(3), np.arange(3.0), 3)


@settings(max_examples=50, deadline=None)
@given(arrays(float, (2, 8), elements=finite), arrays(float, (2, 8), elements=finite),
       st.floats(-5, 5), st.integers(0, 2))
def test_derive_is_linear(x, y, a, order):
    t = np.linspace(0, 1, 8)
    np.testing.assert_allclose(derive(a * x + y, t, order),
                               a * derive(x, t, order) + derive(y, t, order),
                               rtol=1e-9, atol=1e-6)


def test_center_examples():
    np.testing.assert_allclose(center(np.array([0.0, 2.0]), np.array([0.0, 1.0])), [-1, 1])
    np.testing.assert_allclose(center(np.full(5, 7.0), np.arange(5.0)), 0.0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(arrays(float, (3, 6), elements=finite))
def test_center_is_idempotent_and_mean_free(x):
    t = np.array([0.0, 0.2, 0.5, 1.0, 1.1, 2.0])
    c = center(x, t)
    np.testing.assert_allclose(center(c, t), c, atol=1e-9)
    np.testing.assert_allclose(c @ trapezoid_weights(t), 0.0, atol=1e-8)


def test_pooled_sd_formula():
    assert pooled_sd(np.array([[0.0, 0.0, 2.0, 2.0]])) == pytest.approx(np.std([0, 0, 2, 2], ddof=1))


def test_standardize_example_and_test_set():
    # single type, pooled learning sample {0, 0, 0, 2, 2, 2}
    learn = make_dataset([[0.0, 0.0, 0.0], [2.0, 2.0, 2.0]], [1, 2])
    test = Dataset((CovariateType("x", np.arange(3.0), np.full((1, 3), 4.0)),))
    sd = np.std([0, 0, 0, 2, 2, 2], ddof=1)
    out_learn, out_test, scales = standardize(learn, test)
    np.testing.assert_allclose(scales, [sd])
    np.testing.assert_allclose(out_test.covariates[0].values, 4.0 / sd)
    again, _, scales2 = standardize(out_learn)
    np.testing.assert_allclose(scales2, [1.0])
    np.testing.assert_allclose(again.covariates[0].values, out_learn.covariates[0].values)


def test_standardize_scale_equivariance(rng):
    x = rng.normal(size=(6, 5))
    a, _, _ = standardize(make_dataset(x, [1, 1, 1, 2, 2, 2]))
    b, _, _ = standardize(make_dataset(5 * x, [1, 1, 1, 2, 2, 2]))
    np.testing.assert_allclose(a.covariates[0].values, b.covariates[0].values)


def test_standardize_unit_values_unchanged():
    x = np.array([[1.0, -1.0, 1.0], [-1.0, 1.0, -1.0]])
    # pooled sd with ddof=1 of six +-1 values is sqrt(6/5)
    out, _, scales = standardize(make_dataset(x, [1, 2]))
    np.testing.assert_allclose(scales, [np.sqrt(6 / 5)])


def test_standardize_constant_covariate_fails():
    with pytest.raises(DataError):
        standardize(make_dataset(np.ones((3, 4)), [1, 2, 1]))


def test_dataset_validation():
    grid = np.arange(4.0)
    cov = CovariateType("a", grid, np.zeros((3, 4)))
    with pytest.raises(DataError):
        Dataset((cov,), np.array([1, 2, 3]), 2)
    with pytest.raises(DataError):
        Dataset((cov,), np.array([1, 2]), 2)
    with pytest.raises(DataError):
        CovariateType("a", grid, np.zeros((3, 5)))
    d = Dataset((cov,), np.array([1, 2, 2]), 2)
    assert d.n == 3 and d.n_types == 1
    assert d.take([1, 2], require_all_classes=False).n == 2
