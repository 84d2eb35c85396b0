import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from selfnorm.confset import CalibratedSet, calibrate_lin, wald_from_rectangle
from selfnorm.errors import CenterOutside, Unbounded
from selfnorm.estimating import RegressionSample
from selfnorm.geometry import (
    Rect,
    diameter_estimate,
    directed_hausdorff_rect,
    first_exits,
    hausdorff_member_rect,
    hausdorff_member_rect_detail,
    hausdorff_rect_rect,
    rect_boundary_points,
)

TOL = 1e-6


def ball(r):
    return lambda pts: np.linalg.norm(np.atleast_2d(pts), axis=1) <= r


@pytest.mark.parametrize("p,r", [(1, 0.5), (2, 1.0), (5, 3.0)])
def test_ball_diameter(p, r):
    g = diameter_estimate(ball(r), np.zeros(p), directions=20, tol=TOL, seed=1)
    assert 2 * r - 2 * TOL <= g.diam2 <= 2 * r + 1e-12
    for _, tp, tn in g.per_direction_exit:
        assert abs(tp - r) <= TOL and abs(tn - r) <= TOL


def test_rectangle_axes_only():
    half = np.array([0.5, 2.0, 1.0])
    g = diameter_estimate(Rect(np.zeros(3), half), np.zeros(3), directions=0, corner_probes=False, tol=TOL)
    assert g.directions_used == 3
    assert abs(g.diam_inf - 4.0) <= 2 * TOL
    assert g.diam2 <= 2 * np.linalg.norm(half) + TOL


def test_rectangle_corner_direction_exact():
    half = np.array([0.5, 2.0, 1.0])
    center = np.array([1.0, -1.0, 3.0])
    g = diameter_estimate(wald_from_rectangle(center, half), center, directions=10, tol=TOL)
    exact = 2 * np.linalg.norm(half)
    assert exact - 4 * TOL <= g.diam2 <= exact + TOL


def test_center_outside_and_unbounded():
    with pytest.raises(CenterOutside):
        diameter_estimate(ball(1.0), np.array([2.0, 0.0]))
    slab = lambda pts: np.abs(np.atleast_2d(pts)[:, 0]) <= 1  # noqa: E731
    with pytest.raises(Unbounded) as info:
        diameter_estimate(slab, np.zeros(2), directions=0, t_max=1e3)
    assert info.value.t_max == 1e3


def test_first_exits_returns_member_radius():
    member = ball(1.0)
    dirs = np.eye(2)
    t = first_exits(member, np.zeros(2), dirs, tol=1e-9)
    assert np.all(member(t[:, None] * dirs))
    assert np.all(np.abs(t - 1.0) <= 1e-9)


def test_singleton_set():
    # integer data fitted exactly; with khat = 0 only the exact fit is a member
    x = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, -1.0]])
    beta = np.array([3.0, -2.0])
    s = RegressionSample(x, x @ beta)
    cs = CalibratedSet(variant="lin", khat=0.0, analysis_sample=s)
    assert cs.contains(beta)
    g = diameter_estimate(cs, beta, directions=20, tol=TOL)
    assert g.diam2 <= 2 * TOL


def p1_interval_length(sample, k):
    """Closed-form endpoints of {beta : T(beta) <= k} for p = 1 (a quadratic inequality)."""
    x, y = sample.X[:, 0], sample.y
    a, b = np.sum(x * y), np.sum(x * x)
    c, d, e = np.sum(x * x * y * y), np.sum(x ** 3 * y), np.sum(x ** 4)
    qa = b * b - k * k * e
    qb = -2 * (a * b - k * k * d)
    qc = a * a - k * k * c
    disc = qb * qb - 4 * qa * qc
    assert qa > 0 and disc > 0
    return math.sqrt(disc) / qa


def test_p1_lin_interval_matches_quadratic():
    r = np.random.default_rng(4)
    x = r.standard_normal((400, 1))
    s = RegressionSample(x, 2 * x[:, 0] + r.standard_normal(400))
    cs = calibrate_lin(s, 0.1, B=2000, seed=3)
    g = diameter_estimate(cs, cs.center, directions=4, tol=1e-9, scale=0.1)
    exact = p1_interval_length(cs.analysis_sample, cs.khat)
    assert exact - 4e-9 <= g.diam2 <= exact + 1e-12


def corner_oracle(a_half, b_half, off):
    best = 0.0
    for signs in itertools.product([-1.0, 1.0], repeat=len(a_half)):
        c = np.array(signs) * a_half
        lo, hi = off - b_half, off + b_half
        best = max(best, float(np.linalg.norm(c - np.clip(c, lo, hi))))
    return best


def test_rect_rect_examples():
    assert hausdorff_rect_rect([1.0, 2.0], [1.0, 2.0], [0.0, 0.0]) == (0.0, 0.0)
    assert hausdorff_rect_rect([2.0], [1.0]) == (1.0, 1.0)


@pytest.mark.parametrize("seed", range(8))
def test_rect_rect_corner_enumeration(seed):
    r = np.random.default_rng(seed)
    p = int(r.integers(1, 8))
    a, b = r.uniform(0, 2, p), r.uniform(0, 2, p)
    off = r.normal(size=p)
    d2, _ = hausdorff_rect_rect(a, b, off)
    oracle = max(corner_oracle(a, b, off), corner_oracle(b, a, -off))
    assert abs(d2 - oracle) <= 1e-12


def grid_boundary(half, per_axis=75):
    """Dense face grids (endpoints included) of a box centered at 0."""
    p = len(half)
    pts = []
    for j in range(p):
        others = [np.linspace(-half[k], half[k], per_axis) for k in range(p) if k != j]
        mesh = np.array(np.meshgrid(*others, indexing="ij")).reshape(p - 1, -1).T
        for sign in (-1.0, 1.0):
            full = np.insert(mesh, j, sign * half[j], axis=1)
            pts.append(full)
    return np.vstack(pts)


def test_rect_rect_dense_boundary_oracle():
    r = np.random.default_rng(17)
    a, b = r.uniform(0.2, 2, 3), r.uniform(0.2, 2, 3)
    pa, pb = grid_boundary(a, 129), grid_boundary(b, 129)
    pa = np.vstack([pa, r.uniform(-a, a, (10_000, 3))])
    assert pa.shape[0] + pb.shape[0] >= 10**5
    da = np.linalg.norm(pa - np.clip(pa, -b, b), axis=1).max()
    db = np.linalg.norm(pb - np.clip(pb, -a, a), axis=1).max()
    d2, _ = hausdorff_rect_rect(a, b)
    assert abs(d2 - max(da, db)) <= 1e-3


halves = arrays(np.float64, 4, elements=st.floats(0, 5))
centers = arrays(np.float64, 4, elements=st.floats(-5, 5))


@settings(max_examples=300, deadline=None)
@given(halves, halves, halves, centers, centers, centers)
def test_directed_triangle_inequality(ha, hb, hc, ca, cb, cc):
    a, b, c = Rect(ca, ha), Rect(cb, hb), Rect(cc, hc)
    ac = directed_hausdorff_rect(a, c)
    ab = directed_hausdorff_rect(a, b)
    bc = directed_hausdorff_rect(b, c)
    assert ac[0] <= ab[0] + bc[0] + 1e-9
    assert ac[1] <= ab[1] + bc[1] + 1e-9


@settings(max_examples=100, deadline=None)
@given(halves, centers, st.floats(0.1, 3.0), st.integers(0, 1000))
def test_diam2_lower_bound_on_rectangles(h, c, scale, seed):
    h = h + 0.01
    g = diameter_estimate(Rect(c, h), c, directions=10, tol=1e-7, seed=seed, scale=scale)
    assert g.diam2 <= 2 * np.linalg.norm(h) + 1e-7
    assert g.diam2 <= math.sqrt(4) * g.diam_inf + 1e-9


def test_diam_invariant_for_diagonal_rod():
    # thin set along the diagonal: axis chords alone would understate diam_inf
    v = np.ones(3) / math.sqrt(3)

    def rod(pts):
        pts = np.atleast_2d(pts)
        along = pts @ v
        perp = pts - along[:, None] * v
        return (np.abs(along) <= 2.0) & (np.linalg.norm(perp, axis=1) <= 0.01)

    g = diameter_estimate(rod, np.zeros(3), directions=50, tol=1e-7, seed=0)
    assert g.diam2 <= math.sqrt(3) * g.diam_inf + 1e-9
    assert g.diam2 >= 3.9


def test_hausdorff_identical_rectangles():
    rect = Rect(np.array([1.0, 2.0]), np.array([0.5, 0.25]))
    assert hausdorff_member_rect(rect, rect.center, rect, tol=TOL) <= TOL


def test_hausdorff_scaled_rectangle():
    half = np.array([0.5, 1.5, 1.0])
    inner = Rect(np.zeros(3), half)
    outer = wald_from_rectangle(np.zeros(3), 2 * half)
    est = hausdorff_member_rect_detail(inner, np.zeros(3), outer, tol=TOL)
    exact, _ = hausdorff_rect_rect(half, 2 * half)
    assert abs(exact - np.linalg.norm(half)) <= 1e-15
    assert abs(est.d2 - exact) <= 4 * TOL
    assert est.set_to_rect == 0.0
    # shrinking the implicit side swaps the roles
    est2 = hausdorff_member_rect_detail(Rect(np.zeros(3), 2 * half), np.zeros(3), Rect(np.zeros(3), half), tol=TOL)
    assert abs(est2.d2 - exact) <= 4 * TOL
    assert est2.rect_to_set == 0.0


def test_hausdorff_ball_vs_square():
    # unit disk against the square [-1, 1]^2: farthest square corner is sqrt(2) - 1 away
    est = hausdorff_member_rect(ball(1.0), np.zeros(2), Rect(np.zeros(2), np.ones(2)), tol=1e-8)
    assert abs(est - (math.sqrt(2) - 1)) <= 1e-6


def test_rect_boundary_points_on_boundary():
    rect = Rect(np.array([0.0, 1.0, -1.0]), np.array([1.0, 2.0, 0.5]))
    pts = rect_boundary_points(rect, n_faces=500, seed=2)
    ratio = np.abs(pts - rect.center) / rect.half
    np.testing.assert_allclose(ratio.max(axis=1), 1.0, atol=1e-12)
    assert pts.shape[0] == 8 + 6 + 500


def test_rect_distance_and_contains():
    rect = Rect(np.zeros(2), np.ones(2))
    np.testing.assert_allclose(rect.distance([[2.0, 2.0], [0.5, 0.0], [3.0, 0.0]]), [math.sqrt(2), 0.0, 2.0])
    np.testing.assert_array_equal(rect.contains([[1.0, 1.0], [1.0, 1.0 + 1e-12]]), [True, False])
    with pytest.raises(ValueError):
        Rect(np.zeros(2), np.array([1.0, -1.0]))
