"""Hessian structure of u = rho^2 and the metric rebuilt from its normal flow.

    python scripts/obata_demo.py --model hopf-s3 --profile sinh-cosh --shear 0.1,0.05,0.1
"""

import argparse
import os

import numpy as np

from dwplab import dwp as W
from dwplab import obata as O
from dwplab.flows import get_model
from dwplab.report import aggregate, to_csv, to_json, write_text


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="hopf-s3")
    ap.add_argument("--profile", default="sinh-cosh")
    ap.add_argument("--points", type=int, default=20)
    ap.add_argument("--shear", type=lambda s: [float(v) for v in s.split(",")], default=None)
    ap.add_argument("--out-dir", default="results/obata")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    dwp = W.build(get_model(args.model), W.preset(args.profile))
    target = O.sheared(dwp, args.shear) if args.shear else dwp
    u = O.rho_squared(target)
    rng = np.random.default_rng(args.seed)
    pts = dwp.random_points(args.points, rng)
    if args.shear:
        pts = np.array([target.chart_point(P) for P in pts])

    reps = O.obata_reports(target, u, pts, seed=args.seed)
    for line in aggregate(reps).lines():
        print(line)
    spectra = [O.hessian_spectrum(target, u, P) for P in pts]
    rows = [(float(s.P[0]), s.u, s.grad_norm, s.lam, s.mu) for s in spectra]

    lo, hi = dwp.profile.grid_interval()
    level = dwp.profile.rho.value(0.5 * (lo + hi)) ** 2
    rec = O.flow_reconstruct(target, u, level, rng_seed=args.seed)
    for line in aggregate(rec.reports()).lines():
        print(line)

    os.makedirs(args.out_dir, exist_ok=True)
    tag = f"{args.model}_{args.profile}" + ("_sheared" if args.shear else "")
    write_text(os.path.join(args.out_dir, f"{tag}_spectrum.csv"), to_csv(("t", "u", "grad_norm", "lambda", "mu"), rows))
    write_text(os.path.join(args.out_dir, f"{tag}_flow.csv"), to_csv(rec.HEADER, rec.rows()))
    write_text(os.path.join(args.out_dir, f"{tag}_reports.json"), to_json({"obata": reps, "flow": rec.reports()}))


if __name__ == "__main__":
    main()
