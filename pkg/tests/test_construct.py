import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relumin.construct import (
    build_family,
    collapsed_means,
    minimizer_family,
    plane_rotation,
    predict_truncation,
    rotation_to_diagonal,
    shrink_factor,
    shrink_matrix,
    theta_q,
)
from relumin.core import RegimeVector
from relumin.errors import ConeViolation, ShapeMismatch
from relumin.harness import all_patterns
from relumin.network import is_rank_preserving, truncate_composed

unit_vectors = st.integers(2, 7).flatmap(
    lambda q: st.lists(st.floats(-1, 1), min_size=q, max_size=q).filter(lambda v: np.linalg.norm(v) > 0.1))


@settings(max_examples=100, deadline=None)
@given(unit_vectors)
def test_rotation_to_diagonal(v):
    f = np.asarray(v) / np.linalg.norm(v)
    r = rotation_to_diagonal(f)
    q = f.size
    assert np.allclose(r @ r.T, np.eye(q), atol=1e-12)
    assert np.linalg.det(r) == pytest.approx(1.0)
    assert np.allclose(r @ f, np.ones(q) / np.sqrt(q), atol=1e-12)


@pytest.mark.parametrize("q", [2, 3, 5])
def test_rotation_antipodal(q):
    f = -np.ones(q) / np.sqrt(q)
    r = rotation_to_diagonal(f)
    assert np.allclose(r @ f, -f) and np.linalg.det(r) == pytest.approx(1.0)


def test_plane_rotation_identity_and_antipodal_error():
    a = np.array([1.0, 0.0, 0.0])
    assert np.allclose(plane_rotation(a, a), np.eye(3))
    with pytest.raises(ValueError):
        plane_rotation(a, -a)


@pytest.mark.parametrize("q", [2, 3, 4, 6])
def test_theta_q_boundary_rays(q):
    """The cone of half-angle theta_Q / 2 about the diagonal touches the coordinate faces."""
    half = theta_q(q) / 2
    rng = np.random.default_rng(q)
    u = np.ones(q) / np.sqrt(q)
    v = rng.standard_normal((q, 20000))
    v -= np.outer(u, u @ v)
    v /= np.linalg.norm(v, axis=0)
    inside = np.cos(half - 1e-6) * u[:, None] + np.sin(half - 1e-6) * v
    assert inside.min() > -1e-12
    outside = np.cos(half + 1e-2) * u[:, None] + np.sin(half + 1e-2) * v
    assert outside.min() < 0


@pytest.mark.parametrize("q", [2, 3, 5])
def test_shrink_matrix(q):
    tq = theta_q(q)
    theta = 0.5 * (tq + np.pi)
    w = shrink_matrix(q, theta)
    u = np.ones(q)
    assert np.allclose(w @ u, u)
    assert np.allclose(w, w.T)
    lam = shrink_factor(q, theta)
    assert np.allclose(np.sort(np.linalg.eigvalsh(w)), np.sort([1.0] + [lam] * (q - 1)))
    # rays on the theta_* cone map onto the theta_Q cone boundary
    rng = np.random.default_rng(0)
    v = rng.standard_normal(q)
    v -= (v @ u) / q * u
    v /= np.linalg.norm(v)
    ray = np.cos(theta / 2) * u / np.sqrt(q) + np.sin(theta / 2) * v
    img = w @ ray
    ang = np.arccos(img @ u / (np.linalg.norm(img) * np.sqrt(q)))
    assert ang == pytest.approx(tq / 2)
    assert np.allclose(shrink_matrix(q, tq / 2), np.eye(q))
    with pytest.raises(ConeViolation):
        shrink_matrix(q, np.pi)


def test_canonical_first_layer(canonical):
    _, g = canonical
    c = build_family(g, 2, [-0.2, -0.2])
    fam = minimizer_family(g, 2)
    assert np.allclose(fam.rotations[0], [[0, 1], [-1, 0]])
    assert np.allclose(c.cum_biases[0], [-0.14142136, 0.85857864], atol=1e-8)


@pytest.mark.parametrize("extra", [0, 2])
def test_truncation_matches_prediction_all_patterns(q3, extra):
    d, g = q3
    rng = np.random.default_rng(extra)
    fam = minimizer_family(g, g.q + extra)
    for s in all_patterns(g.q):
        reg = RegimeVector.sample(g, s, rng)
        c = fam.stack(reg)
        assert c.depth_l == g.q + extra
        assert np.allclose(truncate_composed(d.inputs, c), predict_truncation(g, reg), atol=1e-12)
        assert is_rank_preserving(d, c)


def test_collapsed_points_lie_between_mean_and_centre(q3):
    _, g = q3
    reg = RegimeVector.sample(g, (0, 0, 0), np.random.default_rng(0))
    pts = collapsed_means(g, reg)
    for j in range(g.q):
        before = np.linalg.norm(g.means[:, j] - g.grand_mean)
        assert np.linalg.norm(pts[:, j] - g.grand_mean) < before


def test_depth_below_q_rejected(q3):
    _, g = q3
    with pytest.raises(ShapeMismatch):
        minimizer_family(g, 2)
