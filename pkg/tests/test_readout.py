import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relumin.construct import build_family
from relumin.errors import NotPSD, RankDeficient, ShapeMismatch
from relumin.network import hidden_forward
from relumin.readout import (
    WeightedNorm,
    build_projector,
    cost_closed_form,
    cost_report,
    delta_diagnostics,
    free_bias_readout,
    optimal_readout,
    pattern_deltas,
    projector_cost,
    upper_bound_check,
    weighted_cost,
)

seeds = st.integers(0, 2**32 - 1)


def _random_blocks(rng, q, sizes):
    return rng.standard_normal((q, q))[:, np.repeat(np.arange(q), sizes)] + 0.1 * rng.standard_normal((q, sum(sizes)))


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(2, 4))
def test_projector_is_weighted_orthogonal(seed, q):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(2, 8, q)
    n = WeightedNorm(sizes)
    x = _random_blocks(rng, q, sizes)
    p = build_projector(x, n)
    assert np.allclose(p @ p, p, atol=1e-9)
    # self-adjoint for tr(A N^-1 B^T): N^-1 P^T = P N^-1
    ninv = np.diag(n.weights)
    assert np.allclose(ninv @ p.T, p @ ninv, atol=1e-9)
    assert np.allclose(x @ p, x, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(2, 4))
def test_projector_cost_matches_dense_and_lstsq(seed, q):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(2, 8, q)
    n = WeightedNorm(sizes)
    x = _random_blocks(rng, q, sizes)
    y_ext = rng.standard_normal((q, q))[:, np.repeat(np.arange(q), sizes)]
    dense = n.norm(y_ext - y_ext @ build_projector(x, n))
    assert projector_cost(y_ext, x, n) == pytest.approx(dense, abs=1e-10)
    assert optimal_readout(x, y_ext, n).cost == pytest.approx(dense, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(2, 4))
def test_closed_form_equals_projector(seed, q):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(2, 8, q)
    n = WeightedNorm(sizes)
    x = _random_blocks(rng, q, sizes)
    y = rng.standard_normal((q, q))
    y_ext = y[:, np.repeat(np.arange(q), sizes)]
    d1, d2, _ = delta_diagnostics(x, n)
    assert cost_closed_form(y, d2) == pytest.approx(projector_cost(y_ext, x, n), abs=1e-10)
    assert upper_bound_check(y, d1, d2, n)


def test_weighted_cost_value():
    n = WeightedNorm((1, 2))
    r = np.array([[1.0, 1.0, 1.0]])
    assert weighted_cost(r, np.zeros((1, 3)), n) == pytest.approx(np.sqrt(2.0))
    with pytest.raises(ShapeMismatch):
        weighted_cost(np.zeros((1, 2)), np.zeros((1, 3)), n)


def test_rank_deficient_and_dense_limit():
    n = WeightedNorm((2, 2))
    with pytest.raises(RankDeficient):
        build_projector(np.ones((2, 4)), n)
    with pytest.raises(ValueError):
        build_projector(np.eye(2, 4), n, max_dense=3)


def test_not_psd():
    with pytest.raises(NotPSD):
        cost_closed_form(np.eye(2), -np.eye(2))


def test_canonical_values(canonical):
    d, g = canonical
    n = WeightedNorm(d.class_sizes)
    _, d2 = pattern_deltas(g.means, g.deviations, n, (1, 1))
    assert np.allclose(d2, 0.0025 * np.eye(2))
    d1, _ = pattern_deltas(g.means, g.deviations, n, (1, 1))
    assert n.norm(d.outputs @ d1) == pytest.approx(0.0707107, abs=1e-7)
    cr = cost_report(d, build_family(g, 2, [0.5, 0.5]))
    assert cr.cost_forward == pytest.approx(0.0706224551546, abs=1e-12)
    assert cr.cost_free_bias == pytest.approx(0.049938, abs=1e-6)
    assert cr.agreement() < 1e-12


def test_free_bias_never_worse(q3):
    d, g = q3
    n = WeightedNorm(d.class_sizes)
    c = build_family(g, 3, [0.5, 0.5, 0.5])
    xl = hidden_forward(d.inputs, c)
    tied = optimal_readout(xl, d, n, offset=c.cum_biases[-1])
    assert free_bias_readout(xl, d, n).cost <= tied.cost + 1e-12


def test_zero_pattern_deltas_vanish(q3):
    d, g = q3
    d1, d2 = pattern_deltas(g.means, g.deviations, WeightedNorm(d.class_sizes), (0, 0, 0))
    assert not d1.any() and not d2.any()


def test_report_json(canonical):
    d, g = canonical
    cr = cost_report(d, build_family(g, 2, [0.5, 0.5]))
    assert "delta1" not in cr.to_json_dict(include_delta1=False)
    assert '"cost_forward"' in cr.to_json()
