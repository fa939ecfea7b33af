"""Cone geometry of the cluster means: ball containment, cone angles, translation depths."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ClusterGeometry, _frozen, is_invertible
from .errors import BallSwallowsApex, ConeViolation, NoValidInterval, SingularSimplex

BISECT_TOL = 1e-9


@dataclass(frozen=True)
class Cone:
    """Right circular cone ``apex + {x : angle(x, axis) <= half_angle}``."""

    axis: np.ndarray
    half_angle: float
    apex: np.ndarray

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        if not np.isclose(np.linalg.norm(axis), 1.0):
            raise ValueError("cone axis must be a unit vector")
        if not self.half_angle > 0:
            raise ValueError("cone half-angle must be positive")
        object.__setattr__(self, "axis", _frozen(axis))
        object.__setattr__(self, "apex", _frozen(self.apex))

    def contains(self, points) -> np.ndarray:
        """Membership test for the columns of ``points`` (or a single vector)."""
        p = np.asarray(points, dtype=float)
        v = (p.T - self.apex).T
        r = np.linalg.norm(v, axis=0)
        cos = np.divide(self.axis @ v, r, out=np.ones_like(r), where=r > 0)
        return np.arccos(np.clip(cos, -1.0, 1.0)) <= self.half_angle


@dataclass(frozen=True)
class BarycentricCoords:
    kappa: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kappa", _frozen(self.kappa))

    @property
    def inside(self) -> bool:
        k = self.kappa
        return bool(np.all(k >= 0) and np.allclose(k.sum(axis=0), 1.0))


def angle_between(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def ball_in_cone_angle(center, radius, apex, axis) -> float:
    """Smallest half-angle of a cone at ``apex`` along ``axis`` containing B_radius(center)."""
    v = np.asarray(center, dtype=float) - np.asarray(apex, dtype=float)
    dist = np.linalg.norm(v)
    if dist <= radius:
        raise BallSwallowsApex(f"ball radius {radius:.6g} >= distance {dist:.6g} to apex")
    return angle_between(v, axis) + float(np.arcsin(radius / dist))


def _theta_star_j(means, directions, delta, j) -> float:
    apex, axis = means[:, j], directions[:, j]
    worst = 0.0
    for k in range(means.shape[1]):
        if k == j:
            continue
        try:
            worst = max(worst, ball_in_cone_angle(means[:, k], 4.0 * delta, apex, axis))
        except BallSwallowsApex as exc:
            raise ConeViolation(str(exc)) from exc
    return 2.0 * worst


def theta_star_j(g: ClusterGeometry, j: int) -> float:
    """Opening angle of the cone at mean j (axis f_j) holding every other mean's 4 delta-ball."""
    t = _theta_star_j(g.means, g.directions, g.delta, j)
    if t >= np.pi:
        raise ConeViolation(f"theta_*,{j} = {t:.6g} >= pi")
    return t


def _bisect_true_false(pred, lo, hi, tol=BISECT_TOL) -> float:
    # pred(lo) is True, pred(hi) is False, pred monotone decreasing
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _ball_contained(c, radius, t, axis, half) -> bool:
    try:
        return ball_in_cone_angle(c, radius, t * axis, axis) <= half
    except BallSwallowsApex:
        return False


def pair_depth(c, radius, axis, half) -> float:
    """Largest apex shift t along ``axis`` with B_radius(c) inside the cone at t*axis."""
    if not _ball_contained(c, radius, 0.0, axis, half):
        return 0.0
    hi = max(float(c @ axis), 0.0) + radius
    return _bisect_true_false(lambda t: _ball_contained(c, radius, t, axis, half), 0.0, hi)


def _depth_bound(means, directions, delta, theta_star) -> float:
    q = means.shape[1]
    half = 0.5 * theta_star
    best = np.inf
    for j in range(q):
        for k in range(q):
            if k != j:
                c = means[:, k] - means[:, j]
                best = min(best, pair_depth(c, delta, directions[:, j], half))
    return float(best)


def compute_D(g: ClusterGeometry) -> float:
    """Largest apex translation depth D keeping all other delta-balls in the theta_* cones."""
    d = _depth_bound(g.means, g.directions, g.delta, g.theta_star)
    if d <= g.mu_floor:
        raise NoValidInterval(f"D={d:.6g} <= 2 delta sqrt(Q)={g.mu_floor:.6g}")
    return d


def _point_strictly_in_cone(p, apex, axis, half) -> bool:
    v = p - apex
    r = np.linalg.norm(v)
    if r == 0.0:
        return False
    return np.arccos(np.clip(v @ axis / r, -1.0, 1.0)) < half


def _collapse_bound(means, directions, dists, theta_star, floor, d_bound) -> float:
    half = 0.5 * theta_star
    q = means.shape[1]
    cap = min(d_bound, float(dists.min()))

    def ok(t):
        for j in range(q):
            for k in range(j + 1, q):
                apex = means[:, k] + t * directions[:, k]
                for s in (floor, t):
                    if not _point_strictly_in_cone(means[:, j] + s * directions[:, j], apex, directions[:, k], half):
                        return False
        return True

    if not ok(floor):
        return floor
    if ok(cap):
        return cap
    return _bisect_true_false(ok, floor, cap)


def collapse_bound(g: ClusterGeometry) -> float:
    """Upper end of |mu| for which the collapse construction keeps every class separate.

    Each collapsed point x_j + t f_j must stay strictly inside the cones of the
    later layers and must not pass the grand mean.
    """
    return _collapse_bound(g.means, g.directions, g.mean_dists, g.theta_star, g.mu_floor, g.d_bound)


def barycentric(g: ClusterGeometry, x) -> BarycentricCoords:
    """Coordinates kappa with x = sum_j kappa_j * mean_j (columns of ``x`` allowed)."""
    if not is_invertible(g.means):
        raise SingularSimplex("cluster means are not linearly independent")
    return BarycentricCoords(np.linalg.solve(g.means, np.asarray(x, dtype=float)))
