"""Einstein system along the known models, plus a negative control.

Writes one CSV of (t, eq1, eq2, c) per configuration and prints the worst
residuals.  Both positive models are complex hyperbolic (C = -6, n = 2).
"""

import argparse
import os

import numpy as np

from dwplab import dwp as W
from dwplab import einstein as E
from dwplab.flows import get_model
from dwplab.report import to_csv, write_text

CASES = [
    ("hopf-s3", "sinh-cosh", -6.0),
    ("heisenberg3", "exp", -6.0),
    ("hopf-s3", "linear", -6.0),
    ("hopf-s5", "sinh-cosh", -8.0),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="results/einstein")
    ap.add_argument("--t-count", type=int, default=60)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    for model, profile, C in CASES:
        dwp = W.build(get_model(model), W.preset(profile))
        lo, hi = dwp.profile.grid_interval()
        ts = np.linspace(lo, hi, args.t_count)
        x = dwp.base.sample(1, rng)[0]
        rows = E.einstein_scan(dwp, C, ts, x)
        name = f"{model}_{profile}_C{C:g}.csv"
        write_text(os.path.join(args.out_dir, name), to_csv(("t", "eq1", "eq2", "c"), rows))
        eq1 = max(abs(r[1]) for r in rows)
        eq2 = max(r[2] for r in rows)
        cs = [r[3] for r in rows]
        print(f"{model:12s} {profile:10s} C={C:5g}  max|eq1|={eq1:.2e}  max eq2={eq2:.2e}  c in [{min(cs):.6g}, {max(cs):.6g}]")


if __name__ == "__main__":
    main()
