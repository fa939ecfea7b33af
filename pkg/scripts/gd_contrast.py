"""Gradient descent from random starts next to the constructed cost levels."""
import argparse

from relumin.harness import ExperimentConfig, canonical_dataset, emit_report, gd_baseline


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--inits", type=int, default=20)
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--out", default="reports/gd_contrast.json")
    args = ap.parse_args()
    cfg = ExperimentConfig(q=2, gd_inits=args.inits, gd_steps=args.steps)
    rep = gd_baseline(cfg, canonical_dataset())
    for name, cost in rep.tables["gd_levels"]["rows"]:
        print(f"level {name:7s} {cost:.6f}")
    for run, c0, c1, steps, nearest, label in rep.tables["gd_runs"]["rows"]:
        print(f"run {run:2d}  {c0:.4f} -> {c1:.6f}  ({steps} steps)  {label}")
    emit_report(rep, args.out)


if __name__ == "__main__":
    main()
