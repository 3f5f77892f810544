"""Significance analysis of the published MSE table.

Runs the Friedman test and STCN-vs-each Wilcoxon tests on
``data/table2_mse.csv``, applies the three corrections to the published
unadjusted p-values, and shows which table column each published p-value
is recovered from.
"""

from __future__ import annotations

import argparse
import itertools
from pathlib import Path

import numpy as np

from stcn.stats import adjust_pvalues, friedman_test, read_mse_table, wilcoxon_signed_rank

ROOT = Path(__file__).resolve().parent.parent

PUBLISHED = {"LREG": 7.767e-6, "kNN": 1.224e-5, "MLP": 0.001858, "SVM": 0.013389, "RF": 0.079676}
PUBLISHED_ASSOCIATIVE = {"Hopfield": 2.477e-7, "FCM": 5.278e-6}


def show_corrections(published):
    named = list(published.items())
    cols = {m: dict(adjust_pvalues(named, m)) for m in ("bonferroni", "holm", "holland")}
    print(f"{'algorithm':10s} {'p':>10s} {'bonferroni':>11s} {'holm':>11s} {'holland':>11s}")
    for name, p in named:
        print(f"{name:10s} {p:10.4g} " + " ".join(f"{cols[m][name]:11.5g}" for m in cols))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--table", type=Path, default=ROOT / "data" / "table2_mse.csv")
    args = ap.parse_args()

    _, algorithms, x = read_mse_table(args.table)
    stat, p = friedman_test(x)
    print(f"Friedman chi2 = {stat:.4f}, p = {p:.6g}")

    control = x[:, algorithms.index("STCN")]
    computed = {a: wilcoxon_signed_rank(control, x[:, j])[1]
                for j, a in enumerate(algorithms) if a != "STCN"}
    print("\nWilcoxon STCN vs column, computed and published under the same label:")
    for a, pv in computed.items():
        print(f"  {a:5s} computed {pv:.4g}   published {PUBLISHED[a]:.4g}   ratio {pv / PUBLISHED[a]:.3g}")

    # best one-to-one assignment of columns to published labels by log-ratio
    names = list(PUBLISHED)
    best = min(itertools.permutations(computed),
               key=lambda perm: sum(abs(np.log(computed[c] / PUBLISHED[n])) for c, n in zip(perm, names)))
    print("\nClosest column for each published label:")
    for label, col in zip(names, best):
        print(f"  {label:5s} <- column {col:5s} ratio {computed[col] / PUBLISHED[label]:.3f}")

    print("\nCorrections applied to the published regression p-values:")
    show_corrections(PUBLISHED)
    print("\nCorrections applied to the published associative p-values:")
    show_corrections(PUBLISHED_ASSOCIATIVE)


if __name__ == "__main__":
    main()
