"""Shared data model: clustered training data, derived geometry, parameter stacks.

All containers are frozen dataclasses whose numpy arrays are flagged read-only,
so instances can be shared freely.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConeViolation,
    DegenerateCluster,
    NoValidInterval,
    RegimeViolation,
    SeparationViolation,
    ShapeMismatch,
    SingularOutputs,
    SingularSimplex,
    SingularWeight,
)

COND_MAX = 1e12
DEFAULT_C0 = 0.2


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def is_invertible(m: np.ndarray, cond_max: float = COND_MAX) -> bool:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.all(np.isfinite(m)):
        return False
    return bool(np.linalg.cond(m) < cond_max)


@dataclass(frozen=True)
class ClusteredDataset:
    """Training inputs grouped by output class.

    ``inputs`` is Q x N with the columns of class j stored contiguously, in
    class order; column j of ``outputs`` is the target y_j.
    """

    dim_q: int
    class_sizes: tuple[int, ...]
    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        q = int(self.dim_q)
        sizes = tuple(int(n) for n in self.class_sizes)
        object.__setattr__(self, "dim_q", q)
        object.__setattr__(self, "class_sizes", sizes)
        object.__setattr__(self, "inputs", _frozen(self.inputs))
        object.__setattr__(self, "outputs", _frozen(self.outputs))
        if q < 2:
            raise ShapeMismatch("need Q >= 2")
        if len(sizes) != q or min(sizes) < 1:
            raise ShapeMismatch(f"class_sizes must hold {q} positive integers, got {sizes}")
        n = sum(sizes)
        if n < q + 1:
            raise ShapeMismatch(f"need N >= Q+1 training inputs, got N={n}")
        if self.inputs.shape != (q, n):
            raise ShapeMismatch(f"inputs must be {(q, n)}, got {self.inputs.shape}")
        if self.outputs.shape != (q, q):
            raise ShapeMismatch(f"outputs must be {(q, q)}, got {self.outputs.shape}")

    @property
    def n(self) -> int:
        return int(sum(self.class_sizes))

    @property
    def labels(self) -> np.ndarray:
        return np.repeat(np.arange(self.dim_q), self.class_sizes)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.class_sizes)])

    def block(self, j: int) -> np.ndarray:
        o = self.offsets
        return self.inputs[:, o[j]:o[j + 1]]

    @property
    def means(self) -> np.ndarray:
        """Reduced mean matrix: column j is the mean of class j."""
        return block_means(self.inputs, self.class_sizes)

    @property
    def y_ext(self) -> np.ndarray:
        return self.outputs[:, self.labels]

    # -- serialization -----------------------------------------------------
    def to_json_dict(self) -> dict:
        return {
            "q": self.dim_q,
            "class_sizes": list(self.class_sizes),
            "inputs": self.inputs.T.tolist(),
            "outputs": self.outputs.T.tolist(),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ClusteredDataset":
        q = int(obj["q"])
        inputs = np.asarray(obj["inputs"], dtype=float).reshape(-1, q).T
        outputs = np.asarray(obj["outputs"], dtype=float).reshape(q, q).T
        return cls(q, tuple(obj["class_sizes"]), inputs, outputs)


def block_means(x: np.ndarray, class_sizes) -> np.ndarray:
    """Per-class column means of a column-blocked matrix (Q x Q result)."""
    offsets = np.concatenate([[0], np.cumsum(class_sizes)])
    return np.stack([x[:, a:b].mean(axis=1) for a, b in zip(offsets[:-1], offsets[1:])], axis=1)


def block_deviations(x: np.ndarray, class_sizes) -> np.ndarray:
    labels = np.repeat(np.arange(len(class_sizes)), class_sizes)
    return x - block_means(x, class_sizes)[:, labels]


def save_dataset(d: ClusteredDataset, path) -> None:
    Path(path).write_text(json.dumps(d.to_json_dict()))


def load_dataset(path, outputs=None) -> ClusteredDataset:
    """Read a dataset from JSON, or from CSV with a trailing class-label column.

    CSV rows are samples; labels are integers 0..Q-1 (or 1..Q). CSV files carry
    no targets, so ``outputs`` defaults to the identity.
    """
    path = Path(path)
    if path.suffix.lower() != ".csv":
        return ClusteredDataset.from_json_dict(json.loads(path.read_text()))
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    data = np.array([[float(v) for v in r] for r in rows])
    feats, labels = data[:, :-1], data[:, -1].astype(int)
    labels = labels - labels.min()
    q = feats.shape[1]
    order = np.argsort(labels, kind="stable")
    sizes = np.bincount(labels, minlength=q)
    if outputs is None:
        outputs = np.eye(q)
    return ClusteredDataset(q, tuple(sizes), feats[order].T, outputs)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class ClusterGeometry:
    """Quantities derived from a clustered dataset.

    ``d_bound`` is the largest apex translation keeping every other cluster's
    delta-ball inside the translated cone. ``collapse_bound`` additionally keeps
    every already-collapsed cluster point inside all later cones and between its
    mean and the grand mean; it caps the collapse regime used for construction.
    """

    source: ClusteredDataset
    c0: float
    means: np.ndarray
    grand_mean: np.ndarray
    deviations: np.ndarray
    delta: float
    mean_dists: np.ndarray
    directions: np.ndarray
    theta_star_j: np.ndarray
    theta0: float
    theta_star: float
    d_bound: float
    collapse_bound: float

    def __post_init__(self):
        for name in ("means", "grand_mean", "deviations", "mean_dists", "directions", "theta_star_j"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def q(self) -> int:
        return self.source.dim_q

    @property
    def mu_floor(self) -> float:
        """2 delta |u_Q|: half-width of the excluded transitional band."""
        return 2.0 * self.delta * np.sqrt(self.q)

    @property
    def collapse_interval(self) -> tuple[float, float]:
        return (-self.collapse_bound, -self.mu_floor)

    @property
    def fixed_interval(self) -> tuple[float, float]:
        return (self.mu_floor, np.inf)


def validate_dataset(d: ClusteredDataset, c0: float = DEFAULT_C0, theta0: float | None = None) -> ClusterGeometry:
    from . import geometry as geo

    if not 0.0 < c0 < 0.25:
        raise ValueError(f"c0 must lie in (0, 1/4), got {c0}")
    if not is_invertible(d.outputs):
        raise SingularOutputs("output matrix Y is not invertible")
    means = d.means
    dev = block_deviations(d.inputs, d.class_sizes)
    for j in range(d.dim_q):
        o = d.offsets
        if not np.any(dev[:, o[j]:o[j + 1]]):
            raise DegenerateCluster(f"class {j} has zero deviation")
    if not is_invertible(means):
        raise SingularSimplex("cluster means are not linearly independent")
    grand = means.mean(axis=1)
    rel = means - grand[:, None]
    dists = np.linalg.norm(rel, axis=0)
    delta = float(np.max(np.linalg.norm(dev, axis=0)))
    if not delta < c0 * dists.min():
        raise SeparationViolation(f"delta={delta:.6g} >= c0*min|mean-grand|={c0 * dists.min():.6g}")
    directions = -rel / dists
    thetas = np.array([geo._theta_star_j(means, directions, delta, j) for j in range(d.dim_q)])
    if thetas.max() >= np.pi:
        raise ConeViolation(f"max cluster cone angle {thetas.max():.6g} >= pi")
    if theta0 is None:
        theta0 = min(0.1, (np.pi - thetas.max()) / 4.0)
    if theta0 <= 0:
        raise ValueError("theta0 must be positive")
    theta_star = float(theta0 + thetas.max())
    if theta_star >= np.pi:
        raise ConeViolation(f"theta_* = {theta_star:.6g} >= pi")
    floor = 2.0 * delta * np.sqrt(d.dim_q)
    d_bound = geo._depth_bound(means, directions, delta, theta_star)
    if d_bound <= floor:
        raise NoValidInterval(f"D={d_bound:.6g} <= 2 delta sqrt(Q)={floor:.6g}")
    collapse = geo._collapse_bound(means, directions, dists, theta_star, floor, d_bound)
    if collapse <= floor:
        raise NoValidInterval(f"collapse bound {collapse:.6g} <= 2 delta sqrt(Q)={floor:.6g}")
    return ClusterGeometry(
        source=d, c0=float(c0), means=means, grand_mean=grand, deviations=dev, delta=delta,
        mean_dists=dists, directions=directions, theta_star_j=thetas, theta0=float(theta0),
        theta_star=theta_star, d_bound=float(d_bound), collapse_bound=float(collapse),
    )


@dataclass(frozen=True)
class LayerStack:
    """Per-layer parameters (W_l, b_l); the last entry is the affine read-out layer."""

    weights: tuple
    biases: tuple

    def __post_init__(self):
        ws = tuple(_frozen(w) for w in self.weights)
        bs = tuple(_frozen(b) for b in self.biases)
        if len(ws) != len(bs) or not ws:
            raise ShapeMismatch("weights and biases must have equal nonzero length")
        q = ws[0].shape[0]
        for w, b in zip(ws, bs):
            if w.shape != (q, q) or b.shape != (q,):
                raise ShapeMismatch("every layer must be Q x Q with a Q-vector bias")
        for i, w in enumerate(ws[:-1]):
            if not is_invertible(w):
                raise SingularWeight(f"hidden weight {i + 1} is not invertible")
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    @property
    def depth_l(self) -> int:
        return len(self.weights) - 1

    @property
    def q(self) -> int:
        return self.weights[0].shape[0]


@dataclass(frozen=True)
class CumulativeStack:
    """Cumulative parameters W^(l) = W_l ... W_1 and the matching biases b^(l)."""

    cum_weights: tuple
    cum_biases: tuple

    def __post_init__(self):
        ws = tuple(_frozen(w) for w in self.cum_weights)
        bs = tuple(_frozen(b) for b in self.cum_biases)
        if len(ws) != len(bs) or not ws:
            raise ShapeMismatch("cum_weights and cum_biases must have equal nonzero length")
        object.__setattr__(self, "cum_weights", ws)
        object.__setattr__(self, "cum_biases", bs)

    @property
    def depth_l(self) -> int:
        return len(self.cum_weights)

    @property
    def q(self) -> int:
        return self.cum_weights[0].shape[0]

    def scaled(self, layer: int, lam: float) -> "CumulativeStack":
        """Copy with (W^(layer), b^(layer)) multiplied by ``lam``."""
        ws, bs = list(self.cum_weights), list(self.cum_biases)
        ws[layer] = ws[layer] * lam
        bs[layer] = bs[layer] * lam
        return CumulativeStack(tuple(ws), tuple(bs))


@dataclass(frozen=True)
class RegimeVector:
    """Bias parameters mu with their sign pattern (0 = collapse, 1 = fixed)."""

    mu: np.ndarray
    pattern_s: tuple

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu))
        object.__setattr__(self, "pattern_s", tuple(int(s) for s in self.pattern_s))

    @classmethod
    def classify(cls, mu, g: ClusterGeometry) -> "RegimeVector":
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        if mu.shape == (1,):
            mu = np.full(g.q, mu[0])
        if mu.shape != (g.q,):
            raise ShapeMismatch(f"mu must have {g.q} entries")
        lo, hi = g.collapse_interval
        s = []
        for j, m in enumerate(mu):
            if lo < m < hi:
                s.append(0)
            elif m > g.mu_floor and np.isfinite(m):
                s.append(1)
            elif -g.mu_floor <= m <= g.mu_floor:
                raise RegimeViolation(f"mu[{j}]={m:.6g} lies in the transitional band [-{g.mu_floor:.6g}, {g.mu_floor:.6g}]")
            else:
                raise RegimeViolation(f"mu[{j}]={m:.6g} is below the collapse regime lower end {lo:.6g}")
        return cls(mu, tuple(s))

    @classmethod
    def sample(cls, g: ClusterGeometry, pattern, rng: np.random.Generator) -> "RegimeVector":
        """Draw mu uniformly inside the regimes selected by ``pattern``.

        The unbounded fixed regime is sampled on (2 delta sqrt(Q), 2 delta sqrt(Q) + 10 D).
        """
        pattern = tuple(int(s) for s in pattern)
        lo0, hi0 = g.collapse_interval
        lo1, hi1 = g.mu_floor, g.mu_floor + 10.0 * g.d_bound
        mu = np.empty(g.q)
        for j, s in enumerate(pattern):
            a, b = (lo0, hi0) if s == 0 else (lo1, hi1)
            # keep away from the open endpoints
            mu[j] = rng.uniform(a + 1e-3 * (b - a), b - 1e-3 * (b - a))
        return cls(mu, pattern)
