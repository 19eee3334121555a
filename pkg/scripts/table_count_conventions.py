"""Improvement counts on the transcribed result tables under several conventions.

Shows how the per-method count of "ensemble beats the best single model"
cells moves with the comparison (> vs >=), the reference set (all single
models of the dataset vs only the models in the combination) and the
aggregation level (every cell vs one per dataset and metric).

    python scripts/table_count_conventions.py
"""
import operator
from collections import defaultdict
from pathlib import Path

from fusekit.fusion import METHODS
from fusekit.io import read_score_table

DATA = Path(__file__).resolve().parents[1] / "data"
SHORT = {"aud": "audmodel", "hub": "hubert", "wav": "wavlm", "os": "os", "praat": "praat"}


def counts(ensemble, single, cmp, members_only, per_dataset):
    hits = defaultdict(set)
    for (dataset, combo, method, metric), v in ensemble.items():
        models = ([SHORT[x] for x in combo.split("+")] if members_only
                  else [k[1] for k in single if k[0] == dataset])
        best = max(single[(dataset, m, metric)] for m in models)
        if cmp(v, best):
            key = (dataset, metric) if per_dataset else (dataset, combo, metric)
            hits[method].add(key)
    return {m: len(hits[m]) for m in METHODS}


def main():
    ensemble = read_score_table(DATA / "paper_table2_ensemble.csv", ensemble=True)
    single = read_score_table(DATA / "paper_table1_single.csv", ensemble=False)
    print(f"{'cmp':<4}{'reference':<12}{'level':<10}" + "".join(f"{m:>6}" for m in METHODS))
    print(f"{'':<26}" + "".join(f"{v:>6}" for v in (15, 17, 17, 14, 14, 12)) + "  (reported)")
    for name, cmp in ((">", operator.gt), (">=", operator.ge)):
        for members in (False, True):
            for per_ds in (False, True):
                c = counts(ensemble, single, cmp, members, per_ds)
                print(f"{name:<4}{'members' if members else 'all':<12}"
                      f"{'dataset' if per_ds else 'cell':<10}"
                      + "".join(f"{c[m]:>6}" for m in METHODS))


if __name__ == "__main__":
    main()
