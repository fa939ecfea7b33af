"""Forward pass, truncation maps and the two parameterizations of the hidden layers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ClusteredDataset, CumulativeStack, LayerStack, block_means, is_invertible
from .errors import ShapeMismatch, SingularWeight

RANK_RTOL = 1e-8


def relu(a):
    return np.maximum(a, 0.0)


@dataclass(frozen=True)
class LayerTrace:
    """States X^(0), ..., X^(L+1) of one forward pass."""

    states: tuple

    @property
    def output(self) -> np.ndarray:
        return self.states[-1]

    @property
    def hidden(self) -> tuple:
        return self.states[1:-1]


def _inputs(x) -> np.ndarray:
    if isinstance(x, ClusteredDataset):
        return x.inputs
    return np.asarray(x, dtype=float)


def forward(x, p: LayerStack) -> LayerTrace:
    x0 = _inputs(x)
    if x0.ndim == 1:
        x0 = x0[:, None]
    if x0.shape[0] != p.q:
        raise ShapeMismatch(f"inputs have dimension {x0.shape[0]}, network expects {p.q}")
    states = [x0]
    for w, b in zip(p.weights[:-1], p.biases[:-1]):
        states.append(relu(w @ states[-1] + b[:, None]))
    states.append(p.weights[-1] @ states[-1] + p.biases[-1][:, None])
    return LayerTrace(tuple(states))


def truncate(x, w, b) -> np.ndarray:
    """Truncation map W^{-1}(relu(W X + b u^T) - b u^T)."""
    w = np.asarray(w, dtype=float)
    b = np.asarray(b, dtype=float)[:, None]
    if not is_invertible(w):
        raise SingularWeight("truncation weight is not invertible")
    return np.linalg.solve(w, relu(w @ x + b) - b)


def truncate_composed(x0, c: CumulativeStack) -> np.ndarray:
    """Nested truncations with the cumulative parameters, innermost first."""
    z = _inputs(x0)
    for w, b in zip(c.cum_weights, c.cum_biases):
        z = truncate(z, w, b)
    return z


def hidden_forward(x, c: CumulativeStack) -> np.ndarray:
    """X^(L) computed layer by layer (ReLU on every layer of ``c``)."""
    z = _inputs(x)
    for w, b in zip(*_layerwise(c)):
        z = relu(w @ z + b[:, None])
    return z


def _layerwise(c: CumulativeStack):
    ws, bs = [], []
    w_prev, b_prev = np.eye(c.q), np.zeros(c.q)
    for wc, bc in zip(c.cum_weights, c.cum_biases):
        if not is_invertible(w_prev):
            raise SingularWeight("cumulative weight is not invertible")
        w = np.linalg.solve(w_prev.T, wc.T).T
        ws.append(w)
        bs.append(bc - w @ b_prev)
        w_prev, b_prev = wc, bc
    return ws, bs


def layerwise_to_cumulative(p) -> CumulativeStack:
    weights, biases = (p.weights, p.biases) if isinstance(p, LayerStack) else p
    cw, cb = [], []
    w_prev = np.eye(weights[0].shape[0])
    b_prev = np.zeros(weights[0].shape[0])
    for w, b in zip(weights, biases):
        w_prev = w @ w_prev
        b_prev = w @ b_prev + b
        cw.append(w_prev)
        cb.append(b_prev)
    return CumulativeStack(tuple(cw), tuple(cb))


def cumulative_to_layerwise(c: CumulativeStack) -> LayerStack:
    ws, bs = _layerwise(c)
    return LayerStack(tuple(ws), tuple(bs))


def assemble(hidden: CumulativeStack, w_out, b_out) -> LayerStack:
    """Layerwise network from cumulative hidden parameters plus a read-out layer."""
    p = cumulative_to_layerwise(hidden)
    return LayerStack(p.weights + (np.asarray(w_out, dtype=float),), p.biases + (np.asarray(b_out, dtype=float),))


def numerical_rank(m, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(np.asarray(m, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def is_rank_preserving(d: ClusteredDataset, c: CumulativeStack) -> bool:
    try:
        t = truncate_composed(d.inputs, c)
    except SingularWeight:
        return False
    if not np.all(np.isfinite(t)):
        return False
    return (numerical_rank(t) == numerical_rank(d.inputs)
            and numerical_rank(block_means(t, d.class_sizes)) == numerical_rank(d.means))


def preactivation_margin(x, p: LayerStack) -> float:
    """Smallest |entry| of any hidden-layer preactivation; distance to the ReLU kink."""
    z = _inputs(x)
    margin = np.inf
    for w, b in zip(p.weights[:-1], p.biases[:-1]):
        a = w @ z + b[:, None]
        margin = min(margin, float(np.abs(a).min()))
        z = relu(a)
    return margin
