"""Shared random constructions for the test suite."""
import numpy as np

from relumin.core import CumulativeStack, LayerStack
from relumin.network import layerwise_to_cumulative


def random_orthogonal(rng, q):
    m, r = np.linalg.qr(rng.standard_normal((q, q)))
    return m * np.sign(np.diag(r))


def random_weight(rng, q, lo=0.5, hi=2.0):
    """Well-conditioned weight: orthogonal * diag(uniform[lo, hi]) * orthogonal."""
    return random_orthogonal(rng, q) @ np.diag(rng.uniform(lo, hi, q)) @ random_orthogonal(rng, q)


def random_layers(rng, q, depth, bias_scale=0.5):
    ws = [random_weight(rng, q) for _ in range(depth)]
    bs = [bias_scale * rng.standard_normal(q) for _ in range(depth)]
    return ws, bs


def random_stack(rng, q, depth, bias_scale=0.5) -> LayerStack:
    ws, bs = random_layers(rng, q, depth + 1, bias_scale)
    return LayerStack(tuple(ws), tuple(bs))


def random_cumulative(rng, q, depth, bias_scale=0.5) -> CumulativeStack:
    return layerwise_to_cumulative(random_layers(rng, q, depth, bias_scale))


def ball_samples(rng, center, radius, n):
    q = center.size
    v = rng.standard_normal((q, n))
    v /= np.linalg.norm(v, axis=0)
    return center[:, None] + v * radius * rng.uniform(size=n) ** (1.0 / q)
