"""Classifier induced by a global minimizer: the input-space metric and output matching."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .construct import build_family, collapsed_means
from .core import ClusterGeometry, CumulativeStack, LayerStack, RegimeVector, _frozen
from .errors import RegimeViolation
from .network import assemble, forward, truncate_composed

TIE_RTOL = 1e-12


@dataclass(frozen=True)
class TrainedClassifier:
    stack: CumulativeStack
    mu: RegimeVector
    metric_matrix: np.ndarray
    collapsed_means: np.ndarray
    network: LayerStack
    outputs: np.ndarray

    def __post_init__(self):
        for k in ("metric_matrix", "collapsed_means", "outputs"):
            object.__setattr__(self, k, _frozen(getattr(self, k)))


@dataclass(frozen=True)
class Match:
    index: np.ndarray
    distance: np.ndarray
    network_index: np.ndarray
    tie: np.ndarray


def default_mu(g: ClusterGeometry) -> np.ndarray:
    lo, hi = g.collapse_interval
    return np.full(g.q, 0.5 * (lo + hi))


def train_classifier(g: ClusterGeometry, l: int, mu=None) -> TrainedClassifier:
    """Global-minimum network for bias parameters ``mu`` (all in the collapse regime)."""
    reg = RegimeVector.classify(default_mu(g) if mu is None else mu, g)
    if any(reg.pattern_s):
        raise RegimeViolation("the induced metric is defined only when every class collapses")
    hidden = build_family(g, l, reg)
    pts = collapsed_means(g, reg)
    y = g.source.outputs
    metric = np.linalg.solve(pts.T, y.T).T
    # W_{L+1} W^(L) = metric, cumulative terminal bias zero
    w_out = np.linalg.solve(hidden.cum_weights[-1].T, metric.T).T
    b_out = -w_out @ hidden.cum_biases[-1]
    return TrainedClassifier(hidden, reg, metric, pts, assemble(hidden, w_out, b_out), y)


def metric_d(c: TrainedClassifier, x, x2) -> float:
    diff = np.asarray(x, dtype=float) - np.asarray(x2, dtype=float)
    return float(np.linalg.norm(c.metric_matrix @ diff))


def _argmin_with_tie(dist):
    idx = np.argmin(dist, axis=0)
    srt = np.sort(dist, axis=0)
    tie = srt[1] - srt[0] <= TIE_RTOL * (1.0 + srt[0])
    return idx, tie


def match_batch(c: TrainedClassifier, xs) -> Match:
    """Class index for every column of ``xs`` by both argmin formulations.

    Ties resolve to the smallest index (np.argmin) and are flagged.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    t = truncate_composed(xs, c.stack)
    mapped = c.metric_matrix @ t
    targets = c.metric_matrix @ c.collapsed_means
    dist = np.linalg.norm(mapped[:, None, :] - targets[:, :, None], axis=0)
    out = forward(xs, c.network).output
    net_dist = np.linalg.norm(out[:, None, :] - c.outputs[:, :, None], axis=0)
    idx, tie = _argmin_with_tie(dist)
    net_idx, net_tie = _argmin_with_tie(net_dist)
    return Match(idx, dist[idx, np.arange(xs.shape[1])], net_idx, tie | net_tie)


def match_output(c: TrainedClassifier, x) -> tuple[int, float, bool]:
    m = match_batch(c, x)
    if m.index[0] != m.network_index[0] and not m.tie[0]:
        raise AssertionError("argmin formulations disagree away from a tie")
    return int(m.index[0]), float(m.distance[0]), bool(m.tie[0])
