import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bisect_quantile, phi_cdf
from selfnorm.errors import DimensionMismatch, NotFactorable, NotSymmetric, OutOfRange, SingularDesign
from selfnorm.numlin import cholesky_jittered, least_squares, normal_quantile, solve_spd


def test_cholesky_identity():
    f = cholesky_jittered(np.eye(3))
    np.testing.assert_array_equal(f.lower, np.eye(3))
    assert f.jitter == 0


def test_cholesky_diagonal():
    f = cholesky_jittered([[4.0, 0.0], [0.0, 9.0]])
    np.testing.assert_allclose(f.lower, np.diag([2.0, 3.0]))


def test_cholesky_reconstructs_gram(rng):
    a = rng.standard_normal((7, 5))
    m = a.T @ a
    f = cholesky_jittered(m)
    assert np.max(np.abs(f.lower @ f.lower.T - m)) <= 1e-10 * np.max(np.abs(m))
    assert np.allclose(np.triu(f.lower, 1), 0)


def test_cholesky_rank_one_uses_jitter():
    f = cholesky_jittered(np.ones((4, 4)))
    assert 0 < f.jitter <= 1e-6
    recon = f.lower @ f.lower.T
    assert np.max(np.abs(recon - (np.ones((4, 4)) + f.jitter * np.eye(4)))) <= 1e-10


def test_cholesky_errors():
    with pytest.raises(NotSymmetric):
        cholesky_jittered([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(NotFactorable):
        cholesky_jittered([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(DimensionMismatch):
        cholesky_jittered(np.ones((2, 3)))


def test_solve_spd_examples():
    np.testing.assert_allclose(solve_spd(cholesky_jittered(np.eye(2)), [3.0, 5.0]), [3.0, 5.0])
    np.testing.assert_allclose(solve_spd(cholesky_jittered(np.diag([2.0, 4.0])), [2.0, 4.0]), [1.0, 1.0])
    with pytest.raises(DimensionMismatch):
        solve_spd(cholesky_jittered(np.eye(2)), [1.0, 2.0, 3.0])


def test_solve_spd_residual(rng):
    a = rng.standard_normal((10, 6))
    m = a.T @ a + 0.1 * np.eye(6)
    b = rng.standard_normal(6)
    x = solve_spd(cholesky_jittered(m), b)
    assert np.linalg.norm(m @ x - b) <= 1e-8 * np.linalg.norm(b)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_solve_spd_round_trip(p, seed):
    r = np.random.default_rng(seed)
    a = r.standard_normal((p + 3, p))
    m = a.T @ a + np.eye(p)
    x = r.standard_normal(p)
    got = solve_spd(cholesky_jittered(m), m @ x)
    assert np.linalg.norm(got - x) <= 1e-8 * np.linalg.norm(x)


def test_least_squares_examples():
    np.testing.assert_allclose(least_squares([[1.0], [1.0]], [1.0, 3.0]), [2.0])
    np.testing.assert_allclose(least_squares(np.eye(2), [4.5, -1.25]), [4.5, -1.25])


def test_least_squares_matches_normal_equations(rng):
    x = rng.standard_normal((50, 4))
    y = rng.standard_normal(50)
    oracle = np.linalg.solve(x.T @ x, x.T @ y)
    got = least_squares(x, y)
    np.testing.assert_allclose(got, oracle, atol=1e-8)
    score = x.T @ (y - x @ got)
    assert np.max(np.abs(score)) <= 1e-8 * np.max(np.abs(x.T @ y))


def test_least_squares_singular():
    x = np.column_stack([np.ones(5), np.ones(5)])
    with pytest.raises(SingularDesign):
        least_squares(x, np.arange(5.0))
    with pytest.raises(SingularDesign):
        least_squares(np.ones((1, 2)), [1.0])


def test_normal_quantile_examples():
    assert normal_quantile(0.5) == 0.0
    assert abs(normal_quantile(0.975) - bisect_quantile(0.975)) <= 1e-9
    assert abs(normal_quantile(0.9975) - bisect_quantile(0.9975)) <= 1e-9
    assert round(normal_quantile(0.975), 6) == 1.959964
    assert round(normal_quantile(0.9975), 6) == 2.807034


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_normal_quantile_range(u):
    with pytest.raises(OutOfRange):
        normal_quantile(u)


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-10, 1 - 1e-10))
def test_normal_quantile_inverts_cdf(u):
    z = normal_quantile(u)
    assert abs(phi_cdf(z) - u) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(st.floats(0.5, 1.0, exclude_max=True))
def test_normal_quantile_antisymmetric(u):
    # for u > 0.5 the complement 1 - u is exact, so the identity holds bit for bit
    assert normal_quantile(u) == -normal_quantile(1.0 - u)


def test_normal_quantile_deep_tail():
    for u in (1e-300, 1e-100, 1e-20):
        z = normal_quantile(u)
        assert math.isfinite(z)
        assert abs(phi_cdf(z) / u - 1) < 1e-10
