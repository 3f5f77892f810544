"""Write the bundled benchmark CSVs into data/.

iris and wine come from scikit-learn's bundled copies of the UCI files. The
``-Nan-nn`` variants add attribute noise the KEEL way: in every attribute,
N% of the instances get a value drawn uniformly from that attribute's
observed range. Noise is seeded, so the files are reproducible.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
from sklearn.datasets import load_iris, load_wine

NOISE_SEED = 20180101


def add_attribute_noise(x: np.ndarray, percent: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    out = x.copy()
    k = x.shape[0]
    n = int(round(k * percent / 100))
    for j in range(x.shape[1]):
        rows = rng.choice(k, n, replace=False)
        lo, hi = x[:, j].min(), x[:, j].max()
        out[rows, j] = np.round(rng.uniform(lo, hi, n), 4)
    return out


def write(path: Path, names, x, y):
    lines = [",".join([*names, "class"])]
    for row, c in zip(x, y):
        lines.append(",".join([*(f"{v:g}" for v in row), str(int(c))]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=Path(__file__).resolve().parent.parent / "data", type=Path)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    sources = {"iris": load_iris(), "wine": load_wine()}
    noisy = {"iris": (5, 10, 20), "wine": (5,)}
    for name, bunch in sources.items():
        cols = [f"X{j + 1}" for j in range(bunch.data.shape[1])]
        write(args.out / f"{name}.csv", cols, bunch.data, bunch.target)
        for pct in noisy[name]:
            x = add_attribute_noise(bunch.data, pct, NOISE_SEED + pct)
            write(args.out / f"{name}-{pct}an-nn.csv", cols, x, bunch.target)
    print(f"wrote datasets to {args.out}")


if __name__ == "__main__":
    main()
