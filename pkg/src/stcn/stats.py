"""Nonparametric comparison of algorithms over datasets.

Friedman's rank test across all algorithms, then Wilcoxon signed-rank tests
of every algorithm against a control with Bonferroni, Holm and Holland
corrections.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import chi2, norm, rankdata

EXACT_MAX_N = 15
METHODS = ("bonferroni", "holm", "holland")


def friedman_test(table) -> tuple[float, float]:
    """Chi-square Friedman statistic for an ``(N datasets, k algorithms)`` table.

    Lower values rank better; ties share the average rank.
    """
    x = np.asarray(table, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise ValueError(f"need at least a 2x2 table, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("table has missing cells")
    n, k = x.shape
    ranks = np.apply_along_axis(rankdata, 1, x)
    mean_ranks = ranks.mean(axis=0)
    stat = 12.0 * n / (k * (k + 1)) * (np.sum(mean_ranks ** 2) - k * (k + 1) ** 2 / 4.0)
    stat = max(float(stat), 0.0)
    return stat, float(chi2.sf(stat, k - 1))


def _exact_upper_tail(doubled_ranks: np.ndarray, w2: int) -> tuple[float, float]:
    """P(W+ <= w) and P(W+ >= w) under random signs; ranks and w are doubled to stay integral."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled_ranks.astype(int):
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    probs = counts / counts.sum()
    return float(probs[: w2 + 1].sum()), float(probs[w2:].sum())


def wilcoxon_signed_rank(a, b, min_n: int = 5) -> tuple[float, float]:
    """Two-sided Wilcoxon signed-rank test of paired samples.

    Zero differences are discarded. Up to 15 pairs the p-value is exact;
    above that a normal approximation with tie-corrected variance and
    continuity correction is used. Returns ``(min(W+, W-), p)``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("samples must be 1-D and paired")
    d = a - b
    d = d[d != 0]
    n = d.size
    if n == 0:
        return 0.0, 1.0
    if n < min_n:
        raise ValueError(f"only {n} non-zero differences, need at least {min_n}")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    stat = min(w_plus, w_minus)
    if n <= EXACT_MAX_N:
        lower, upper = _exact_upper_tail(np.rint(2 * ranks), int(round(2 * w_plus)))
        return stat, min(1.0, 2.0 * min(lower, upper))
    mean = n * (n + 1) / 4.0
    _, ties = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(ties ** 3 - ties) / 48.0
    z = max(abs(w_plus - mean) - 0.5, 0.0) / np.sqrt(var)
    return stat, float(min(1.0, 2.0 * norm.sf(z)))


def adjust_pvalues(unadjusted, method: str) -> list[tuple[str, float]]:
    """Family-wise corrections for ``[(name, p), ...]``; output keeps the input order."""
    names = [n for n, _ in unadjusted]
    p = np.array([float(v) for _, v in unadjusted])
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    if method == "bonferroni":
        adj = np.minimum(1.0, m * p)
    elif method in ("holm", "holland"):
        order = np.argsort(p, kind="stable")
        factors = m - np.arange(m)
        ps = p[order]
        raw = factors * ps if method == "holm" else 1.0 - (1.0 - ps) ** factors
        stepped = np.minimum(1.0, np.maximum.accumulate(raw))
        adj = np.empty(m)
        adj[order] = stepped
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return list(zip(names, adj.tolist()))


@dataclass
class SignificanceRow:
    algorithm: str
    p: float
    bonferroni: float
    holm: float
    holland: float


@dataclass
class SignificanceTable:
    control: str
    friedman_statistic: float
    friedman_p: float
    rows: list[SignificanceRow]

    def to_csv(self) -> str:
        lines = ["algorithm,p,bonferroni,holm,holland"]
        for r in self.rows:
            lines.append(f"{r.algorithm},{r.p:.6g},{r.bonferroni:.6g},{r.holm:.6g},{r.holland:.6g}")
        return "\n".join(lines) + "\n"


def corrected_rows(unadjusted) -> list[SignificanceRow]:
    """Rows sorted by unadjusted p, each with all three corrections."""
    cols = {m: dict(adjust_pvalues(unadjusted, m)) for m in METHODS}
    ordered = sorted(unadjusted, key=lambda t: t[1])
    return [SignificanceRow(n, float(p), cols["bonferroni"][n], cols["holm"][n], cols["holland"][n])
            for n, p in ordered]


def significance_table(table, algorithms, control: str) -> SignificanceTable:
    """Friedman test plus control-vs-each Wilcoxon tests with corrections."""
    x = np.asarray(table, dtype=np.float64)
    algorithms = list(algorithms)
    if control not in algorithms:
        raise ValueError(f"control {control!r} not among {algorithms}")
    stat, p = friedman_test(x)
    c = algorithms.index(control)
    unadjusted = [(a, wilcoxon_signed_rank(x[:, c], x[:, j])[1])
                  for j, a in enumerate(algorithms) if j != c]
    return SignificanceTable(control, stat, p, corrected_rows(unadjusted))


def read_mse_table(path) -> tuple[list[str], list[str], np.ndarray]:
    """Read ``dataset,alg1,alg2,...`` as written by the benchmark command."""
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    algorithms = [a.strip() for a in rows[0][1:]]
    datasets, values = [], []
    for r in rows[1:]:
        datasets.append(r[0].strip())
        try:
            values.append([float(v) for v in r[1:]])
        except ValueError:
            raise ValueError(f"{path}: non-numeric cell in row {r[0]!r}") from None
    return datasets, algorithms, np.array(values)
