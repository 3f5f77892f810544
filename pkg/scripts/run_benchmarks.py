"""Cross-validate every bundled dataset under both protocols.

Writes ``regression.csv`` and ``associative.csv`` (one row per dataset, mean
test MSE per algorithm) plus JSON reports with per-fold values, then the
significance tables for the associative run.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from stcn.harness import BenchmarkConfig, load_csv, run_benchmark
from stcn.stats import significance_table

ROOT = Path(__file__).resolve().parent.parent
BUNDLED = ["iris", "iris-5an-nn", "iris-10an-nn", "iris-20an-nn", "wine", "wine-5an-nn"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data-dir", type=Path, default=ROOT / "data")
    ap.add_argument("--datasets", nargs="+", default=BUNDLED)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=ROOT / "results" / "benchmarks")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    datasets = [load_csv(args.data_dir / f"{n}.csv", class_column="class") for n in args.datasets]
    cfg = BenchmarkConfig()
    for protocol in ("regression", "associative"):
        report = run_benchmark(datasets, protocol=protocol, cfg=cfg, seed=args.seed, jobs=args.jobs)
        (args.out / f"{protocol}.csv").write_text(report.to_csv(), encoding="utf-8")
        (args.out / f"{protocol}.json").write_text(report.to_json(), encoding="utf-8")
        print(f"== {protocol}")
        print(report.to_csv(), end="")
        if protocol == "associative" and len(datasets) >= 5:
            table = significance_table(report.table(), report.algorithms, "STCN")
            print(f"Friedman chi2={table.friedman_statistic:.4f}, p={table.friedman_p:.4g}")
            print(table.to_csv(), end="")
            (args.out / "associative_significance.csv").write_text(table.to_csv(), encoding="utf-8")


if __name__ == "__main__":
    main()
