"""Sweep uncertainty informativeness on synthetic ensembles.

For each r, generates several seeded 3-model fixtures and reports mean UA
of every fusion method plus the mean Cohen's d of the single models.

    python scripts/informativeness_sweep.py --samples 600 --seeds 5
"""
import argparse

import numpy as np

from fusekit.fusion import METHODS
from fusekit.io import pct
from fusekit.pipeline import run_methods
from fusekit.syngen import SynSpec, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=600)
    ap.add_argument("--classes", type=int, default=4)
    ap.add_argument("--accs", default="0.6,0.65,0.7")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--steps", type=int, default=6)
    args = ap.parse_args()
    accs = tuple(float(a) for a in args.accs.split(","))

    print("r     " + "  ".join(f"{m:>5}" for m in METHODS) + "   best1     d")
    for r in np.linspace(0, 1, args.steps):
        ua = {m: [] for m in METHODS}
        best, ds = [], []
        for seed in range(args.seeds):
            ps = generate(SynSpec(args.samples, args.classes, accs, float(r), seed))
            run = run_methods(ps)
            for m in METHODS:
                ua[m].append(run.reports[m].ua)
            best.append(max(rep.ua for rep in run.singles.values()))
            ds += [e.d for e in run.effects.values() if e.d is not None]
        cells = "  ".join(f"{pct(np.mean(ua[m])):>5}" for m in METHODS)
        print(f"{r:.2f}  {cells}   {pct(np.mean(best)):>5}  {np.mean(ds):5.2f}")


if __name__ == "__main__":
    main()
