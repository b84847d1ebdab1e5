"""Scan the warping-ODE parameter grid and write the regime map.

    python scripts/regime_atlas.py --out-dir results/atlas --jobs 4
"""

import argparse
import os
from collections import Counter
from dataclasses import asdict, dataclass, field

from dwplab import atlas
from dwplab.report import to_csv, to_json, write_text


@dataclass
class AtlasRun:
    ns: tuple = atlas.DEFAULT_N
    eps: tuple = atlas.DEFAULT_EPS
    cs: tuple = atlas.DEFAULT_C
    Ds: tuple = atlas.DEFAULT_D
    horizon: float = 5.0
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="results/atlas")
    ap.add_argument("--horizon", type=float, default=5.0)
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()

    run = AtlasRun(horizon=args.horizon, jobs=args.jobs)
    configs = atlas.default_grid(run.ns, run.eps, run.cs, run.Ds)
    entries = atlas.run_atlas(configs, run.horizon, run.jobs)

    os.makedirs(args.out_dir, exist_ok=True)
    write_text(os.path.join(args.out_dir, "atlas.csv"), to_csv(atlas.AtlasEntry.HEADER, [e.row() for e in entries]))
    write_text(os.path.join(args.out_dir, "atlas.json"), to_json({"run": asdict(run), "entries": entries}))

    kinds = Counter(e.kind for e in entries)
    bad = [e for e in entries if not e.agree]
    print(f"{len(entries)} configurations: " + ", ".join(f"{k}={v}" for k, v in sorted(kinds.items())))
    print(f"disagreements: {len(bad)}; max z drift {max(e.z_drift for e in entries):.2e}")
    for e in bad:
        print(f"  n={e.n} eps={e.eps} c={e.c} D={e.D} rho0={e.rho0:.6g}: {'; '.join(e.notes)}")
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
