import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relumin.errors import BallSwallowsApex
from relumin.geometry import Cone, angle_between, ball_in_cone_angle, barycentric, collapse_bound, compute_D, theta_star_j


def _sphere(center, radius, n=4000, plane=None):
    """Boundary points of a ball; in Q > 2 a dense circle in ``plane`` plus random points."""
    q = center.size
    a = np.linspace(0, 2 * np.pi, n, endpoint=False)
    if q == 2:
        return center[:, None] + radius * np.vstack([np.cos(a), np.sin(a)])
    v = np.random.default_rng(0).standard_normal((q, n))
    v /= np.linalg.norm(v, axis=0)
    if plane is not None:
        e1, e2 = np.linalg.qr(np.column_stack(plane))[0].T
        v = np.hstack([v, np.outer(e1, np.cos(a)) + np.outer(e2, np.sin(a))])
    return center[:, None] + radius * v


def _max_angle(points, apex, axis):
    v = points - apex[:, None]
    cos = axis @ v / np.linalg.norm(v, axis=0)
    return float(np.arccos(np.clip(cos, -1, 1)).max())


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 0.5), st.floats(0, 2 * np.pi))
def test_ball_angle_matches_boundary_scan(cx, cy, r, phi):
    c = np.array([cx, cy])
    axis = np.array([np.cos(phi), np.sin(phi)])
    if np.linalg.norm(c) <= r:
        with pytest.raises(BallSwallowsApex):
            ball_in_cone_angle(c, r, np.zeros(2), axis)
        return
    ang = ball_in_cone_angle(c, r, np.zeros(2), axis)
    scan = _max_angle(_sphere(c, r, 20000), np.zeros(2), axis)
    # the formula can exceed pi when the ball straddles the backward axis
    assert scan == pytest.approx(min(ang, np.pi), abs=2e-3)


def test_theta_star_j_is_minimal(q3):
    _, g = q3
    for j in range(g.q):
        apex, axis = g.means[:, j], g.directions[:, j]
        half = theta_star_j(g, j) / 2
        pts = np.hstack([_sphere(g.means[:, k], 4 * g.delta, plane=(axis, g.means[:, k] - apex))
                         for k in range(g.q) if k != j])
        assert Cone(axis, half + 1e-9, apex).contains(pts).all()
        assert not Cone(axis, half - 1e-3, apex).contains(pts).all()


def test_theta_star_j_equals_stored(q3):
    _, g = q3
    assert np.allclose([theta_star_j(g, j) for j in range(g.q)], g.theta_star_j)


def test_depth_bound_against_dense_scan(canonical):
    _, g = canonical
    half = g.theta_star / 2
    balls = {j: np.hstack([_sphere(g.means[:, k], g.delta) for k in range(g.q) if k != j]) for j in range(g.q)}

    def all_inside(t):
        for j in range(g.q):
            apex = g.means[:, j] + t * g.directions[:, j]
            if not Cone(g.directions[:, j], half, apex).contains(balls[j]).all():
                return False
        return True

    grid = np.arange(0.0, 1.5, 1e-3)
    first_fail = next(t for t in grid if not all_inside(t))
    assert compute_D(g) == pytest.approx(first_fail, abs=2e-3)
    assert compute_D(g) == pytest.approx(g.d_bound, abs=1e-9)


def test_collapse_bound_range(q3, canonical):
    for _, g in (q3, canonical):
        assert g.mu_floor < collapse_bound(g) <= g.d_bound + 1e-12
        assert collapse_bound(g) <= g.mean_dists.min() + 1e-12


def test_barycentric_of_means(q3):
    _, g = q3
    b = barycentric(g, g.means)
    assert np.allclose(b.kappa, np.eye(g.q))
    assert barycentric(g, g.grand_mean).inside


def test_angle_between_basic():
    assert angle_between([1, 0], [0, 1]) == pytest.approx(np.pi / 2)
    assert angle_between([1, 1], [2, 2]) == pytest.approx(0.0, abs=1e-7)


def test_cone_rejects_bad_axis():
    with pytest.raises(ValueError):
        Cone(np.array([2.0, 0.0]), 0.3, np.zeros(2))
