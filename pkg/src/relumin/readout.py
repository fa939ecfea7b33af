"""Weighted least-squares read-out, the N-weighted projector and closed-form costs.

Read-out convention: the terminal layer satisfies b_{L+1} = -W_{L+1} b^(L), i.e.
the cumulative terminal bias b^(L+1) vanishes and the output is
W^(L+1) tau(X_0). The closed-form cost expressions are exact for this
read-out. An unconstrained affine read-out is available as
``free_bias_readout`` and is never larger.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .core import ClusteredDataset, CumulativeStack, block_deviations, block_means, is_invertible
from .errors import NotPSD, RankDeficient, ShapeMismatch, SingularReducedMeans
from .network import assemble, forward, hidden_forward, truncate_composed

MAX_DENSE_PROJECTOR = 2000
PSD_TOL = 1e-10
EIG_CLAMP = 1e-14


@dataclass(frozen=True)
class WeightedNorm:
    """Inner product tr(A N^{-1} B^T) with N = diag(N_j * identity_{N_j})."""

    class_sizes: tuple

    def __post_init__(self):
        object.__setattr__(self, "class_sizes", tuple(int(n) for n in self.class_sizes))

    @property
    def weights(self) -> np.ndarray:
        sizes = np.asarray(self.class_sizes, dtype=float)
        return 1.0 / np.repeat(sizes, self.class_sizes)

    def inner(self, a, b) -> float:
        return float(np.sum(np.asarray(a) * np.asarray(b) * self.weights))

    def norm(self, a) -> float:
        return float(np.sqrt(max(self.inner(a, a), 0.0)))


@dataclass(frozen=True)
class Readout:
    weight: np.ndarray
    bias: np.ndarray
    cost: float


def weighted_cost(xl1, y_ext, n: WeightedNorm) -> float:
    """sqrt(sum_j 1/N_j sum_i |x_{j,i} - y_j|^2)."""
    xl1 = np.asarray(xl1, dtype=float)
    y_ext = np.asarray(y_ext, dtype=float)
    if xl1.shape != y_ext.shape or xl1.shape[1] != sum(n.class_sizes):
        raise ShapeMismatch(f"shapes {xl1.shape} and {y_ext.shape} disagree with N={sum(n.class_sizes)}")
    r = xl1 - y_ext
    return float(np.sqrt(np.sum(r * r * n.weights)))


def _gram(x, n: WeightedNorm) -> np.ndarray:
    return (x * n.weights) @ x.T


def build_projector(xl, n: WeightedNorm, max_dense: int = MAX_DENSE_PROJECTOR) -> np.ndarray:
    """Dense N x N projector N^{-1} X^T (X N^{-1} X^T)^{-1} X."""
    xl = np.asarray(xl, dtype=float)
    if xl.shape[1] > max_dense:
        raise ValueError(f"N={xl.shape[1]} exceeds the dense projector limit {max_dense}; use projector_cost")
    g = _gram(xl, n)
    if not is_invertible(g):
        raise RankDeficient("X N^{-1} X^T is singular")
    return (xl.T * n.weights[:, None]) @ np.linalg.solve(g, xl)


def projector_cost(y_ext, xl, n: WeightedNorm) -> float:
    """||Y^ext (1 - P)||, with P applied in factored form."""
    xl = np.asarray(xl, dtype=float)
    g = _gram(xl, n)
    if not is_invertible(g):
        raise RankDeficient("X N^{-1} X^T is singular")
    yp = np.linalg.solve(g, _gram_cross(xl, y_ext, n)).T @ xl
    return n.norm(y_ext - yp)


def _gram_cross(x, y, n):
    return (x * n.weights) @ np.asarray(y).T


def _weighted_lstsq(z, y_ext, n: WeightedNorm) -> np.ndarray:
    sw = np.sqrt(n.weights)
    sol, *_ = np.linalg.lstsq((z * sw).T, (y_ext * sw).T, rcond=None)
    return sol.T


def optimal_readout(xl, target, n: WeightedNorm, offset=None) -> Readout:
    """Minimize ||W (X^(L) - offset u^T) - Y^ext|| over W; bias = -W offset.

    ``target`` is a ClusteredDataset or Y^ext. With ``offset = b^(L)`` this is
    the read-out whose cumulative terminal bias is zero. Non-unique minimizers
    are resolved by the pseudoinverse.
    """
    xl = np.asarray(xl, dtype=float)
    y_ext = target.y_ext if isinstance(target, ClusteredDataset) else np.asarray(target, dtype=float)
    off = np.zeros(xl.shape[0]) if offset is None else np.asarray(offset, dtype=float)
    z = xl - off[:, None]
    w = _weighted_lstsq(z, y_ext, n)
    b = -w @ off
    return Readout(w, b, weighted_cost(w @ xl + b[:, None], y_ext, n))


def free_bias_readout(xl, target, n: WeightedNorm) -> Readout:
    """Unconstrained affine read-out min_{W,b} ||W X + b u^T - Y^ext||."""
    xl = np.asarray(xl, dtype=float)
    y_ext = target.y_ext if isinstance(target, ClusteredDataset) else np.asarray(target, dtype=float)
    aug = np.vstack([xl, np.ones(xl.shape[1])])
    wa = _weighted_lstsq(aug, y_ext, n)
    w, b = wa[:, :-1], wa[:, -1]
    return Readout(w, b, weighted_cost(w @ xl + b[:, None], y_ext, n))


def delta_diagnostics(xl, n: WeightedNorm):
    """(Delta_1, Delta_2, delta_P): deviations in barycentric coordinates of the class means."""
    xl = np.asarray(xl, dtype=float)
    means = block_means(xl, n.class_sizes)
    if not is_invertible(means):
        raise SingularReducedMeans("reduced mean matrix is singular")
    d1 = np.linalg.solve(means, block_deviations(xl, n.class_sizes))
    d2 = (d1 * n.weights) @ d1.T
    d2 = 0.5 * (d2 + d2.T)
    return d1, d2, float(np.linalg.norm(d1, axis=0).max())


def pattern_deltas(means, deviations, n: WeightedNorm, pattern):
    """Delta_1[s], Delta_2[s] from the original means, zeroing collapsed classes' deviations."""
    dev = np.array(deviations, dtype=float)
    offsets = np.concatenate([[0], np.cumsum(n.class_sizes)])
    for j, s in enumerate(pattern):
        if int(s) == 0:
            dev[:, offsets[j]:offsets[j + 1]] = 0.0
    d1 = np.linalg.solve(means, dev)
    d2 = (d1 * n.weights) @ d1.T
    return d1, 0.5 * (d2 + d2.T)


def _shrunk_root(delta2) -> np.ndarray:
    d2 = np.asarray(delta2, dtype=float)
    d2 = 0.5 * (d2 + d2.T)
    ev, u = np.linalg.eigh(d2)
    if ev.min() < -PSD_TOL:
        raise NotPSD(f"Delta_2 has eigenvalue {ev.min():.3g}")
    ev = np.where(ev < EIG_CLAMP, 0.0, ev)
    return (u * np.sqrt(ev / (1.0 + ev))) @ u.T


def cost_closed_form(y, delta2) -> float:
    """|| Y |Delta_2|^{1/2} (1 + Delta_2)^{-1/2} ||_F."""
    return float(np.linalg.norm(np.asarray(y) @ _shrunk_root(delta2)))


def upper_bound_check(y, delta1, delta2, n: WeightedNorm) -> bool:
    lhs = cost_closed_form(y, delta2)
    rhs = n.norm(np.asarray(y) @ np.asarray(delta1))
    return lhs <= rhs + 1e-12 * (1.0 + rhs)


@dataclass(frozen=True)
class CostReport:
    cost_forward: float
    cost_projector: float
    cost_closed: float
    delta1: np.ndarray
    delta2: np.ndarray
    delta_p: float
    readout_w: np.ndarray
    readout_b: np.ndarray
    cost_free_bias: float

    def to_json_dict(self, include_delta1: bool = True) -> dict:
        out = {}
        for k, v in asdict(self).items():
            if k == "delta1" and not include_delta1:
                continue
            out[k] = v.tolist() if isinstance(v, np.ndarray) else float(v)
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_json_dict(**kw))

    def agreement(self) -> float:
        """Largest deviation of the projector and closed-form costs from the forward cost."""
        return max(abs(self.cost_forward - self.cost_projector), abs(self.cost_forward - self.cost_closed))


def cost_report(d: ClusteredDataset, hidden: CumulativeStack) -> CostReport:
    """Evaluate the three cost routes for hidden layers ``hidden`` with the optimal read-out."""
    n = WeightedNorm(d.class_sizes)
    y_ext = d.y_ext
    xl = hidden_forward(d.inputs, hidden)
    b_cum = hidden.cum_biases[-1]
    ro = optimal_readout(xl, y_ext, n, offset=b_cum)
    net = assemble(hidden, ro.weight, ro.bias)
    cost_fwd = weighted_cost(forward(d.inputs, net).output, y_ext, n)
    centred = xl - b_cum[:, None]
    cost_proj = projector_cost(y_ext, centred, n)
    tau = truncate_composed(d.inputs, hidden)
    d1, d2, dp = delta_diagnostics(tau, n)
    return CostReport(
        cost_forward=cost_fwd,
        cost_projector=cost_proj,
        cost_closed=cost_closed_form(d.outputs, d2),
        delta1=d1, delta2=d2, delta_p=dp,
        readout_w=ro.weight, readout_b=ro.bias,
        cost_free_bias=free_bias_readout(xl, y_ext, n).cost,
    )
