"""Experiment runners: dataset generation, minimizer verification, criticality, GD baseline."""
from __future__ import annotations

import csv
import itertools
import json
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .construct import build_family, minimizer_family, theta_q
from .core import ClusteredDataset, ClusterGeometry, CumulativeStack, RegimeVector, validate_dataset
from .errors import GenerationFailed, NonSmoothPoint, ReluminError
from .network import is_rank_preserving, relu
from .readout import (
    WeightedNorm,
    cost_closed_form,
    cost_report,
    pattern_deltas,
    weighted_cost,
)

SCHEMA = "v1"
MAX_ROUNDS = 100


@dataclass
class Tolerances:
    global_cost: float = 1e-8
    local_rel: float = 1e-8
    degeneracy: float = 1e-10
    identity: float = 1e-9
    grad: float = 1e-4
    descent: float = 1e-8


@dataclass
class ExperimentConfig:
    q: int = 2
    l: int | None = None
    class_sizes: list | None = None
    cluster_spread: float = 0.05
    c0: float = 0.2
    theta0: float | None = None
    mu_samples: int = 5
    seed: int = 0
    mu: list | None = None
    fd_step: float = 1e-6
    perturbations: int = 200
    perturb_norm: float = 1e-3
    gd_inits: int = 20
    gd_steps: int = 100_000
    gd_lr: float = 1e-2
    tol: Tolerances = field(default_factory=Tolerances)
    out: str | None = None

    def __post_init__(self):
        if isinstance(self.tol, dict):
            self.tol = Tolerances(**self.tol)
        if self.l is None:
            self.l = self.q
        if self.class_sizes is None:
            self.class_sizes = [20] * self.q
        if self.l < self.q:
            raise ValueError(f"need l >= q, got l={self.l}, q={self.q}")
        if len(self.class_sizes) != self.q:
            raise ValueError("class_sizes must have q entries")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        obj = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in obj.items() if k in known})

    def to_json_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunReport:
    config: dict = field(default_factory=dict)
    geometry: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def check(self, name: str, passed: bool, **detail) -> bool:
        self.checks.append({"name": name, "passed": bool(passed), **_plain(detail)})
        return bool(passed)

    def table(self, name: str, header: list, rows: list) -> None:
        self.tables[name] = {"header": list(header), "rows": [list(r) for r in rows]}

    def merge(self, other: "RunReport") -> "RunReport":
        self.geometry = self.geometry or other.geometry
        self.checks += other.checks
        self.tables.update(other.tables)
        self.timings.update(other.timings)
        return self


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


# -- datasets ----------------------------------------------------------------

def canonical_dataset() -> ClusteredDataset:
    """Q = 2: means e1, e2, deviations +-0.05 along the mean directions, Y = I."""
    x = np.array([[1.05, 0.95, 0.0, 0.0], [0.0, 0.0, 1.05, 0.95]])
    return ClusteredDataset(2, (2, 2), x, np.eye(2))


def _ball_deviations(rng, q, n, radius):
    d = rng.standard_normal((q, n))
    d /= np.linalg.norm(d, axis=0)
    d *= radius * rng.uniform(size=n) ** (1.0 / q)
    d -= d.mean(axis=1, keepdims=True)
    return d * (radius / np.linalg.norm(d, axis=0).max())


def generate_dataset(cfg: ExperimentConfig) -> ClusteredDataset:
    """Seeded clustered data: perturbed unit-vector means, deviations uniform in a ball.

    Deviations are recentred and rescaled so the noise radius delta equals the
    configured spread exactly. Draws are rejected until the dataset validates.
    """
    if min(cfg.class_sizes) < 2:
        raise ValueError("every class needs at least two samples")
    rng = np.random.default_rng(cfg.seed)
    q = cfg.q
    for _ in range(MAX_ROUNDS):
        means = np.eye(q) + 0.1 * rng.standard_normal((q, q))
        y = np.eye(q) + 0.3 * rng.standard_normal((q, q))
        if np.linalg.cond(means) >= 1e3 or np.linalg.cond(y) >= 1e3:
            continue
        blocks = [means[:, [j]] + _ball_deviations(rng, q, n, cfg.cluster_spread)
                  for j, n in enumerate(cfg.class_sizes)]
        d = ClusteredDataset(q, tuple(cfg.class_sizes), np.hstack(blocks), y)
        try:
            validate_dataset(d, cfg.c0, cfg.theta0)
        except ReluminError:
            continue
        return d
    raise GenerationFailed(f"no valid dataset after {MAX_ROUNDS} rounds (spread={cfg.cluster_spread})")


def geometry_summary(g: ClusterGeometry) -> dict:
    return _plain({
        "q": g.q, "n": g.source.n, "c0": g.c0, "delta": g.delta, "mean_dists": g.mean_dists,
        "theta_star_j": g.theta_star_j, "theta0": g.theta0, "theta_star": g.theta_star,
        "theta_q": theta_q(g.q), "d_bound": g.d_bound, "collapse_bound": g.collapse_bound,
        "mu_floor": g.mu_floor,
    })


def all_patterns(q: int):
    return list(itertools.product((0, 1), repeat=q))


def _pattern_str(s) -> str:
    return "".join(str(int(v)) for v in s)


# -- experiments -------------------------------------------------------------

def run_global_min(cfg: ExperimentConfig, d: ClusteredDataset | None = None) -> RunReport:
    """Cost of the constructed global minimizers for several mu in the collapse regime."""
    t0 = time.perf_counter()
    d = d if d is not None else generate_dataset(cfg)
    g = validate_dataset(d, cfg.c0, cfg.theta0)
    rng = np.random.default_rng(cfg.seed + 1)
    fam = minimizer_family(g, cfg.l)
    scale = 1.0 + np.linalg.norm(d.outputs)
    zeros = (0,) * g.q
    mus = [RegimeVector.classify(cfg.mu, g)] if cfg.mu is not None else []
    mus += [RegimeVector.sample(g, zeros, rng) for _ in range(max(cfg.mu_samples, 5))]
    rows = []
    rep = RunReport(config=cfg.to_json_dict(), geometry=geometry_summary(g))
    for i, reg in enumerate(mus):
        hidden = fam.stack(reg)
        cr = cost_report(d, hidden)
        rows.append([i, *reg.mu.tolist(), cr.cost_forward, cr.cost_projector, cr.cost_closed,
                     float(np.abs(cr.delta1).max()), is_rank_preserving(d, hidden)])
    costs = np.array([r[g.q + 1] for r in rows])
    rep.table("global_min", ["sample", *[f"mu{j + 1}" for j in range(g.q)], "cost_forward",
                             "cost_projector", "cost_closed", "max_abs_delta1", "rank_preserving"], rows)
    rep.check("global_min_cost", bool(np.all(costs <= cfg.tol.global_cost * scale)),
              max_cost=costs.max(), bound=cfg.tol.global_cost * scale)
    rep.check("global_min_rank_preserving", all(r[-1] for r in rows))
    rep.check("global_min_degenerate", costs.std() < cfg.tol.degeneracy * (1 + costs.mean()),
              std=costs.std())
    rep.timings["global_min"] = time.perf_counter() - t0
    return rep


def run_local_min_enum(cfg: ExperimentConfig, d: ClusteredDataset | None = None) -> RunReport:
    """Every sign pattern: forward cost against the closed-form value, and mu-independence.

    Runs with L = Q. Three cost values are tabulated per sample: the forward
    cost, the closed form with Delta_2[s] from the original cluster means, and
    the closed form evaluated on the actual truncated data.
    """
    t0 = time.perf_counter()
    d = d if d is not None else generate_dataset(cfg)
    g = validate_dataset(d, cfg.c0, cfg.theta0)
    n = WeightedNorm(d.class_sizes)
    rng = np.random.default_rng(cfg.seed + 2)
    fam = minimizer_family(g, g.q)
    scale = 1.0 + np.linalg.norm(d.outputs)
    rep = RunReport(config=cfg.to_json_dict(), geometry=geometry_summary(g))
    rows, summary = [], []
    for s in all_patterns(g.q):
        _, d2 = pattern_deltas(g.means, g.deviations, n, s)
        predicted = cost_closed_form(d.outputs, d2)
        costs = []
        for i in range(max(cfg.mu_samples, 5)):
            reg = RegimeVector.sample(g, s, rng)
            cr = cost_report(d, fam.stack(reg))
            costs.append(cr.cost_forward)
            rows.append([_pattern_str(s), i, *reg.mu.tolist(), cr.cost_forward, predicted,
                         cr.cost_closed, cr.cost_free_bias])
        costs = np.array(costs)
        if any(s):
            err = float(np.max(np.abs(costs - predicted)) / predicted)
            ok = err <= cfg.tol.local_rel
        else:
            err = float(np.max(np.abs(costs)))
            ok = err <= cfg.tol.global_cost * scale
        spread = float(costs.std())
        summary.append([_pattern_str(s), float(costs.mean()), predicted, err, spread, ok,
                        spread < cfg.tol.degeneracy * (1 + costs.mean())])
    rep.table("local_min_samples", ["pattern", "sample", *[f"mu{j + 1}" for j in range(g.q)],
                                    "cost_forward", "cost_closed_pattern", "cost_closed_truncated",
                                    "cost_free_bias"], rows)
    rep.table("local_min_patterns", ["pattern", "mean_cost", "closed_form", "error", "std",
                                     "closed_form_ok", "mu_independent"], summary)
    zero = [r for r in summary if r[1] <= cfg.tol.global_cost * scale]
    rep.check("local_closed_form_all_patterns", all(r[5] for r in summary),
              failing=[r[0] for r in summary if not r[5]])
    rep.check("local_mu_independence", all(r[6] for r in summary),
              failing=[r[0] for r in summary if not r[6]])
    rep.check("local_zero_count", len(zero) == 1 and zero[0][0] == "0" * g.q,
              zero_patterns=[r[0] for r in zero], expected_positive=2 ** g.q - 1)
    rep.timings["local_min_enum"] = time.perf_counter() - t0
    return rep


# -- criticality ---------------------------------------------------------------

@dataclass
class _Flat:
    """Layerwise hidden parameters plus W_{L+1} (and b_{L+1} when free) as one vector."""

    q: int
    depth: int
    free_bias: bool

    def size(self) -> int:
        return self.depth * (self.q * self.q + self.q) + self.q * self.q + (self.q if self.free_bias else 0)

    def pack(self, ws, bs, w_out, b_out) -> np.ndarray:
        parts = []
        for w, b in zip(ws, bs):
            parts += [w.ravel(), b]
        parts.append(w_out.ravel())
        if self.free_bias:
            parts.append(b_out)
        return np.concatenate(parts)

    def unpack(self, theta):
        q, k = self.q, 0
        ws, bs = [], []
        for _ in range(self.depth):
            ws.append(theta[k:k + q * q].reshape(q, q))
            k += q * q
            bs.append(theta[k:k + q])
            k += q
        w_out = theta[k:k + q * q].reshape(q, q)
        k += q * q
        b_out = theta[k:k + q] if self.free_bias else None
        return ws, bs, w_out, b_out


def _joint_cost(theta, flat: _Flat, x0, y_ext, n: WeightedNorm):
    ws, bs, w_out, b_out = flat.unpack(theta)
    z = x0
    b_cum = np.zeros(flat.q)
    for w, b in zip(ws, bs):
        z = relu(w @ z + b[:, None])
        b_cum = w @ b_cum + b
    if b_out is None:
        b_out = -w_out @ b_cum
    return weighted_cost(w_out @ z + b_out[:, None], y_ext, n)


@dataclass(frozen=True)
class GradCheck:
    max_grad: float
    min_change: float
    margin: float
    n_params: int
    cost: float


def grad_check(d: ClusteredDataset, hidden: CumulativeStack, h: float = 1e-6, perturbations: int = 200,
               perturb_norm: float = 1e-3, seed: int = 0, terminal_bias: str = "tied") -> GradCheck:
    """Central finite differences of the joint cost at hidden layers plus optimal read-out.

    ``terminal_bias="tied"`` keeps b_{L+1} = -W_{L+1} b^(L) (cumulative terminal
    bias zero) while every other W_l, b_l and W_{L+1} vary; ``"free"`` also
    varies b_{L+1}.
    """
    from .network import assemble, preactivation_margin
    from .readout import optimal_readout
    from .network import hidden_forward

    n = WeightedNorm(d.class_sizes)
    y_ext = d.y_ext
    xl = hidden_forward(d.inputs, hidden)
    ro = optimal_readout(xl, y_ext, n, offset=hidden.cum_biases[-1])
    net = assemble(hidden, ro.weight, ro.bias)
    margin = preactivation_margin(d.inputs, net)
    if margin <= 10 * h:
        raise NonSmoothPoint(f"preactivation margin {margin:.3g} <= 10 h = {10 * h:.3g}")
    flat = _Flat(net.q, net.depth_l, terminal_bias == "free")
    theta = flat.pack(net.weights[:-1], net.biases[:-1], net.weights[-1], net.biases[-1])
    f0 = _joint_cost(theta, flat, d.inputs, y_ext, n)
    grad = np.empty(theta.size)
    for k in range(theta.size):
        e = np.zeros(theta.size)
        e[k] = h
        grad[k] = (_joint_cost(theta + e, flat, d.inputs, y_ext, n)
                   - _joint_cost(theta - e, flat, d.inputs, y_ext, n)) / (2 * h)
    rng = np.random.default_rng(seed)
    changes = []
    for _ in range(perturbations):
        p = rng.standard_normal(theta.size)
        p *= perturb_norm / np.linalg.norm(p)
        changes.append(_joint_cost(theta + p, flat, d.inputs, y_ext, n) - f0)
    return GradCheck(float(np.abs(grad).max()), float(min(changes)) if changes else 0.0, margin, theta.size, f0)


def run_grad_checks(cfg: ExperimentConfig, d: ClusteredDataset | None = None, patterns=None) -> RunReport:
    """Criticality at the constructed minima of every requested sign pattern (L = Q)."""
    t0 = time.perf_counter()
    d = d if d is not None else generate_dataset(cfg)
    g = validate_dataset(d, cfg.c0, cfg.theta0)
    rng = np.random.default_rng(cfg.seed + 3)
    patterns = all_patterns(g.q) if patterns is None else [tuple(p) for p in patterns]
    rep = RunReport(config=cfg.to_json_dict(), geometry=geometry_summary(g))
    rows = []
    for s in patterns:
        depth = cfg.l if not any(s) else g.q
        reg = RegimeVector.sample(g, s, rng)
        gc = grad_check(d, build_family(g, depth, reg), cfg.fd_step, cfg.perturbations,
                        cfg.perturb_norm, seed=cfg.seed)
        ok = gc.max_grad < cfg.tol.grad and gc.min_change >= -cfg.tol.descent
        rows.append([_pattern_str(s), depth, gc.cost, gc.max_grad, gc.min_change, gc.margin, ok])
    rep.table("grad_check", ["pattern", "depth", "cost", "max_grad", "min_perturb_change", "margin", "passed"], rows)
    rep.check("criticality_all_patterns", all(r[-1] for r in rows), failing=[r[0] for r in rows if not r[-1]])
    rep.timings["grad_check"] = time.perf_counter() - t0
    return rep


# -- gradient-descent baseline -------------------------------------------------

def _gd_loss_grad(ws, bs, x0, y_ext, wts):
    zs = [x0]
    pre = []
    for w, b in zip(ws[:-1], bs[:-1]):
        a = w @ zs[-1] + b[:, None]
        pre.append(a)
        zs.append(relu(a))
    out = ws[-1] @ zs[-1] + bs[-1][:, None]
    r = out - y_ext
    loss = float(np.sum(r * r * wts))
    g = 2.0 * r * wts
    gw = [None] * len(ws)
    gb = [None] * len(bs)
    gw[-1] = g @ zs[-1].T
    gb[-1] = g.sum(axis=1)
    g = ws[-1].T @ g
    for i in range(len(ws) - 2, -1, -1):
        g = g * (pre[i] > 0)
        gw[i] = g @ zs[i].T
        gb[i] = g.sum(axis=1)
        g = ws[i].T @ g
    return loss, gw, gb


def gd_baseline(cfg: ExperimentConfig, d: ClusteredDataset | None = None) -> RunReport:
    """Full-batch gradient descent on the squared cost from seeded random starts.

    Descriptive only: terminal costs are compared against zero and the
    closed-form pattern values; every output bias is trained freely.
    """
    t0 = time.perf_counter()
    d = d if d is not None else generate_dataset(cfg)
    g = validate_dataset(d, cfg.c0, cfg.theta0)
    n = WeightedNorm(d.class_sizes)
    wts = n.weights
    y_ext = d.y_ext
    levels = {"global": 0.0}
    for s in all_patterns(g.q):
        if any(s):
            levels[_pattern_str(s)] = cost_closed_form(d.outputs, pattern_deltas(g.means, g.deviations, n, s)[1])
    rng = np.random.default_rng(cfg.seed + 4)
    rows = []
    for run in range(cfg.gd_inits):
        ws = [np.eye(g.q) + 0.3 * rng.standard_normal((g.q, g.q)) for _ in range(cfg.l + 1)]
        bs = [0.1 * rng.standard_normal(g.q) for _ in range(cfg.l + 1)]
        loss0, *_ = _gd_loss_grad(ws, bs, d.inputs, y_ext, wts)
        loss, prev, steps = loss0, np.inf, 0
        for steps in range(1, cfg.gd_steps + 1):
            loss, gw, gb = _gd_loss_grad(ws, bs, d.inputs, y_ext, wts)
            if not np.isfinite(loss):
                break
            ws = [w - cfg.gd_lr * gwi for w, gwi in zip(ws, gw)]
            bs = [b - cfg.gd_lr * gbi for b, gbi in zip(bs, gb)]
            if steps % 100 == 0:
                if abs(prev - loss) < 1e-14:
                    break
                prev = loss
        loss, *_ = _gd_loss_grad(ws, bs, d.inputs, y_ext, wts)
        cost = float(np.sqrt(loss)) if np.isfinite(loss) else float("nan")
        nearest = min(levels, key=lambda k: abs(levels[k] - cost)) if np.isfinite(cost) else "diverged"
        label = "global-level" if cost < 1e-4 else nearest
        rows.append([run, float(np.sqrt(loss0)), cost, steps, nearest, label])
    rep = RunReport(config=cfg.to_json_dict(), geometry=geometry_summary(g))
    rep.table("gd_levels", ["level", "cost"], [["global", 0.0]] + [[k, v] for k, v in levels.items() if k != "global"])
    rep.table("gd_runs", ["run", "initial_cost", "terminal_cost", "steps", "nearest_level", "label"], rows)
    rep.timings["gd_baseline"] = time.perf_counter() - t0
    return rep


# -- output --------------------------------------------------------------------

def emit_report(r: RunReport, path) -> int:
    """Write the JSON report and one CSV per table; return the process exit code."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"schema": SCHEMA, "passed": r.passed, "config": _plain(r.config), "geometry": r.geometry,
            "checks": r.checks, "tables": sorted(r.tables), "timings": r.timings}
    path.write_text(json.dumps(body, indent=2, default=str))
    for name, tab in r.tables.items():
        with path.with_name(f"{path.stem}_{name}.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(tab["header"])
            for row in tab["rows"]:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return 0 if r.passed else 1
