"""Explicit construction of the minimizing hidden layers.

Layer l (l <= Q) uses W^(l) = W_* R_l with R_l f_l = u_Q/|u_Q| and
b^(l) = -W^(l) mean_l + mu_l R_l f_l. A negative mu_l collapses class l to the
point mean_l - mu_l f_l and leaves every other class untouched; a positive mu_l
leaves all classes untouched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ClusterGeometry, CumulativeStack, RegimeVector, _frozen
from .errors import ConeViolation, ShapeMismatch


def theta_q(q: int) -> float:
    """Opening angle of the widest cone around the diagonal inside the positive sector."""
    return float(2.0 * np.arccos(np.sqrt((q - 1) / q)))


def plane_rotation(a, b) -> np.ndarray:
    """Rotation in span{a, b} taking unit vector a to unit vector b, identity elsewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = float(a @ b)
    w = b - c * a
    s = np.linalg.norm(w)
    if s < 1e-15:
        if c > 0:
            return np.eye(a.size)
        raise ValueError("antipodal vectors: rotation plane is not unique")
    w = w / s
    return (np.eye(a.size) + s * (np.outer(w, a) - np.outer(a, w))
            + (c - 1.0) * (np.outer(a, a) + np.outer(w, w)))


def rotation_to_diagonal(f) -> np.ndarray:
    """R in SO(Q) with R f = u_Q / sqrt(Q)."""
    f = np.asarray(f, dtype=float)
    q = f.size
    diag = np.full(q, 1.0 / np.sqrt(q))
    if f @ diag > -1.0 + 1e-12:
        return plane_rotation(f, diag)
    # antipodal: pass through a direction orthogonal to both
    e = np.zeros(q)
    e[int(np.argmin(np.abs(f)))] = 1.0
    e -= (e @ f) * f
    e /= np.linalg.norm(e)
    return plane_rotation(e, diag) @ plane_rotation(f, e)


def shrink_factor(q: int, theta_star: float) -> float:
    tq = theta_q(q)
    if theta_star > tq:
        return float(np.tan(tq / 2) / np.tan(theta_star / 2))
    return 1.0


def shrink_matrix(q: int, theta_star: float) -> np.ndarray:
    """W_*: fixes the diagonal, shrinks its orthogonal complement by lambda."""
    if not 0 < theta_star < np.pi:
        raise ConeViolation(f"theta_* = {theta_star:.6g} must lie in (0, pi)")
    e1 = np.zeros(q)
    e1[0] = 1.0
    rt = rotation_to_diagonal(e1)  # rt e1 = u/|u|
    scale = np.full(q, shrink_factor(q, theta_star))
    scale[0] = 1.0
    return (rt * scale) @ rt.T


def build_w_star(g: ClusterGeometry) -> np.ndarray:
    return shrink_matrix(g.q, g.theta_star)


@dataclass(frozen=True)
class MinimizerFamily:
    w_star: np.ndarray
    rotations: tuple
    theta_q: float
    lambda_shrink: float
    geometry: ClusterGeometry
    depth_l: int

    def __post_init__(self):
        object.__setattr__(self, "w_star", _frozen(self.w_star))
        object.__setattr__(self, "rotations", tuple(_frozen(r) for r in self.rotations))

    def stack(self, mu) -> CumulativeStack:
        return build_family(self.geometry, self.depth_l, mu, family=self)


def minimizer_family(g: ClusterGeometry, l: int) -> MinimizerFamily:
    if l < g.q:
        raise ShapeMismatch(f"construction needs L >= Q, got L={l}, Q={g.q}")
    rots = tuple(rotation_to_diagonal(g.directions[:, j]) for j in range(g.q))
    return MinimizerFamily(build_w_star(g), rots, theta_q(g.q), shrink_factor(g.q, g.theta_star), g, l)


def _regime(g: ClusterGeometry, mu) -> RegimeVector:
    if isinstance(mu, RegimeVector):
        return RegimeVector.classify(mu.mu, g)
    return RegimeVector.classify(mu, g)


def build_family(g: ClusterGeometry, l: int, mu, family: MinimizerFamily | None = None) -> CumulativeStack:
    """Cumulative hidden parameters (W^(l), b^(l)), l = 1..L, for bias parameters ``mu``.

    Layers beyond Q act as the identity on the truncated data: weight W_* and a
    bias that keeps every preactivation at least delta above zero.
    """
    reg = _regime(g, mu)
    fam = family if family is not None else minimizer_family(g, l)
    ws, bs = [], []
    for j in range(g.q):
        r = fam.rotations[j]
        w = fam.w_star @ r
        ws.append(w)
        bs.append(-w @ g.means[:, j] + reg.mu[j] * (r @ g.directions[:, j]))
    if l > g.q:
        reach = g.mean_dists.max() + max(g.delta, float(np.abs(reg.mu).max()))
        b_extra = -fam.w_star @ g.grand_mean + (reach + g.delta) * np.ones(g.q)
        for _ in range(l - g.q):
            ws.append(fam.w_star)
            bs.append(b_extra)
    return CumulativeStack(tuple(ws), tuple(bs))


def collapsed_means(g: ClusterGeometry, mu) -> np.ndarray:
    """Reduced means of the truncated data: mean_j - mu_j f_j where class j collapses."""
    reg = _regime(g, mu)
    m = np.array(g.means)
    for j, s in enumerate(reg.pattern_s):
        if s == 0:
            m[:, j] = g.means[:, j] - reg.mu[j] * g.directions[:, j]
    return m


def predict_truncation(g: ClusterGeometry, mu) -> np.ndarray:
    """Predicted output of the constructed truncation on the training inputs."""
    reg = _regime(g, mu)
    d = g.source
    out = np.array(d.inputs)
    pts = collapsed_means(g, reg)
    o = d.offsets
    for j, s in enumerate(reg.pattern_s):
        if s == 0:
            out[:, o[j]:o[j + 1]] = pts[:, [j]]
    return out

