"""Two-class canonical example: geometry, the constructed minima and their costs."""
import numpy as np

from relumin import RegimeVector, cost_report, minimizer_family, validate_dataset
from relumin.harness import all_patterns, canonical_dataset


def main():
    d = canonical_dataset()
    g = validate_dataset(d)
    print(f"delta={g.delta:.4f}  theta*={g.theta_star:.6f}  D={g.d_bound:.6f}  collapse bound={g.collapse_bound:.6f}")
    fam = minimizer_family(g, 2)
    print(f"lambda={fam.lambda_shrink:.6f}")
    rng = np.random.default_rng(0)
    print("pattern  mu                 forward     projector   closed      free-bias")
    for s in all_patterns(2):
        reg = RegimeVector.sample(g, s, rng)
        cr = cost_report(d, fam.stack(reg))
        mu = ", ".join(f"{m:+.3f}" for m in reg.mu)
        print(f"{''.join(map(str, s)):7s}  ({mu})  {cr.cost_forward:.8f}  {cr.cost_projector:.8f}  "
              f"{cr.cost_closed:.8f}  {cr.cost_free_bias:.8f}")


if __name__ == "__main__":
    main()
