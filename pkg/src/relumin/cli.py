"""Command-line entry point."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .classify import match_batch, train_classifier
from .core import load_dataset, save_dataset, validate_dataset
from .errors import ReluminError
from .harness import (
    ExperimentConfig,
    RunReport,
    canonical_dataset,
    emit_report,
    gd_baseline,
    generate_dataset,
    run_global_min,
    run_grad_checks,
    run_local_min_enum,
)


def _config(args) -> ExperimentConfig:
    base = ExperimentConfig.from_json(args.config).to_json_dict() if args.config else {}
    for key, val in (("q", args.q), ("l", args.l), ("seed", args.seed), ("cluster_spread", args.spread),
                     ("c0", args.c0), ("theta0", args.theta0), ("out", args.out)):
        if val is not None:
            base[key] = val
    if args.n_per_class is not None:
        base["class_sizes"] = [args.n_per_class] * base.get("q", 2)
    elif args.q is not None:
        base.pop("class_sizes", None)
        if args.l is None:
            base.pop("l", None)
    if args.mu is not None:
        base["mu"] = [float(v) for v in args.mu.split(",")]
    if args.tol is not None:
        base["tol"] = {**base.get("tol", {}), "global_cost": args.tol, "local_rel": args.tol}
    if os.environ.get("SEED_OVERRIDE"):
        base["seed"] = int(os.environ["SEED_OVERRIDE"])
    try:
        return ExperimentConfig(**base)
    except ValueError as e:
        raise SystemExit(f"error: {e}")


def _dataset(args, cfg):
    if args.canonical:
        return canonical_dataset()
    if args.dataset:
        return load_dataset(args.dataset)
    return generate_dataset(cfg)


def _read_vectors(path) -> np.ndarray:
    """Query vectors as columns; JSON list of vectors or CSV with one vector per row."""
    path = Path(path)
    if path.suffix == ".json":
        return np.asarray(json.loads(path.read_text()), dtype=float).T
    rows = [r for r in csv.reader(path.open()) if r]
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    return np.asarray(rows, dtype=float).T


def _finish(rep: RunReport, cfg, name) -> int:
    out = cfg.out or f"reports/{name}.json"
    code = emit_report(rep, out)
    for c in rep.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
    print(f"report: {out}")
    return code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=int)
    common.add_argument("--l", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--spread", type=float, help="noise radius delta of generated clusters")
    common.add_argument("--c0", type=float)
    common.add_argument("--theta0", type=float)
    common.add_argument("--mu", help="comma-separated bias parameters")
    common.add_argument("--out")
    common.add_argument("--tol", type=float, help="cost tolerance for verify-global/verify-local")
    common.add_argument("--config", help="JSON file with ExperimentConfig fields")
    common.add_argument("--n-per-class", type=int, default=None)
    common.add_argument("--dataset", help="load a dataset (JSON or CSV) instead of generating one")
    common.add_argument("--canonical", action="store_true", help="use the two-class canonical dataset")

    p = argparse.ArgumentParser(prog="relumin", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)
    sub.add_parser("gen", parents=[common], help="generate and save a clustered dataset")
    sub.add_parser("verify-global", parents=[common], help="check the constructed global minimizers")
    sub.add_parser("verify-local", parents=[common], help="enumerate sign patterns and compare costs")
    g = sub.add_parser("grad-check", parents=[common], help="finite-difference criticality check")
    g.add_argument("--pattern", action="append", help="sign pattern like 011; repeatable")
    gd = sub.add_parser("gd-baseline", parents=[common], help="gradient-descent contrast runs")
    gd.add_argument("--inits", type=int, default=20)
    gd.add_argument("--steps", type=int, default=100_000)
    gd.add_argument("--lr", type=float, default=1e-2)
    c = sub.add_parser("classify", parents=[common], help="match query vectors to classes")
    c.add_argument("--inputs", required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        d = _dataset(args, cfg)
        if args.cmd == "gen":
            out = cfg.out or "dataset.json"
            save_dataset(d, out)
            print(out)
            return 0
        if args.cmd == "verify-global":
            return _finish(run_global_min(cfg, d), cfg, "global")
        if args.cmd == "verify-local":
            return _finish(run_local_min_enum(cfg, d), cfg, "local")
        if args.cmd == "grad-check":
            pats = [tuple(int(ch) for ch in s) for s in args.pattern] if args.pattern else None
            return _finish(run_grad_checks(cfg, d, pats), cfg, "grad")
        if args.cmd == "gd-baseline":
            cfg.gd_inits, cfg.gd_steps, cfg.gd_lr = args.inits, args.steps, args.lr
            return _finish(gd_baseline(cfg, d), cfg, "gd")
        if args.cmd == "classify":
            g = validate_dataset(d, cfg.c0, cfg.theta0)
            clf = train_classifier(g, max(cfg.l, g.q), cfg.mu)
            m = match_batch(clf, _read_vectors(args.inputs))
            fh = open(cfg.out, "w", newline="") if cfg.out else sys.stdout
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "distance", "tie"])
            for i, dist, tie in zip(m.index, m.distance, m.tie):
                w.writerow([int(i), repr(float(dist)), int(tie)])
            if cfg.out:
                fh.close()
            return 0
    except ReluminError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
