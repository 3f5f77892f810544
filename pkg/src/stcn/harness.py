"""Datasets, cross-validation, corruption and benchmark orchestration."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import model as core
from .baselines import fcm, hopfield, ols
from .initialization import apply_bounds, build_initial_model, column_bounds
from .learning import LearnerConfig, train_network

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Malformed or unusable input data."""


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    columns: tuple[str, ...]
    values: np.ndarray  # (K, M), modeling columns only

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]


def load_csv(path, class_column: str | int | None = None, name: str | None = None) -> Dataset:
    """Read a numeric CSV with a header row; ``class_column`` (name or index) is dropped."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    if not body:
        raise DataError(f"{path}: no data rows")
    drop = None
    if class_column is not None:
        if isinstance(class_column, int) or str(class_column).lstrip("-").isdigit():
            drop = int(class_column) % len(header)
        elif class_column in header:
            drop = header.index(class_column)
        else:
            raise DataError(f"{path}: no column named {class_column!r}")
    keep = [j for j in range(len(header)) if j != drop]
    values = np.empty((len(body), len(keep)))
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r} has {len(row)} fields, header has {len(header)}")
        for c, j in enumerate(keep):
            try:
                values[r - 2, c] = float(row[j])
            except ValueError:
                raise DataError(f"{path}: non-numeric value {row[j]!r} at row {r}, column {header[j]!r}") from None
    return Dataset(name or path.stem, tuple(header[j] for j in keep), values)


def write_csv(path, columns: Sequence[str], values) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in np.asarray(values):
            w.writerow([repr(float(x)) for x in row])


def kfold_split(k: int, folds: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded shuffle, then contiguous folds whose sizes differ by at most one."""
    if not 1 <= folds <= k:
        raise ValueError(f"need 1 <= folds <= K, got folds={folds}, K={k}")
    order = np.random.default_rng(seed).permutation(k)
    parts = np.array_split(order, folds)
    return [(np.sort(np.concatenate(parts[:f] + parts[f + 1:])), np.sort(parts[f]))
            for f in range(folds)]


def corrupt(data, p: float, seed: int, mode: str = "field") -> np.ndarray:
    """Zero each cell (``field``) or each whole row (``record``) with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    x = np.array(data, dtype=np.float64)
    rng = np.random.default_rng(seed)
    if mode == "field":
        x[rng.random(x.shape) < p] = 0.0
    elif mode == "record":
        x[rng.random(x.shape[0]) < p] = 0.0
    else:
        raise ValueError(f"unknown corruption mode {mode!r}")
    return x


def evaluate_mse(predictions, truth) -> float:
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    return float(np.mean((p - t) ** 2))


def unit_scale(sig) -> np.ndarray:
    """Sigmoid-space values back onto the plain [0, 1] min-max scale."""
    return (np.asarray(sig) - core.MARGIN) / (1.0 - 2.0 * core.MARGIN)


@dataclass(frozen=True)
class BenchmarkConfig:
    folds: int = 10
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    init: str = "regression"
    corrupt_p: float = 0.2
    corrupt_mode: str = "field"
    ga: fcm.GaConfig = field(default_factory=fcm.GaConfig)
    hopfield_sweeps: int = 100

    def to_dict(self) -> dict:
        return asdict(self)


# -- per-fold algorithm runners ---------------------------------------------
# Each takes (train, probe, cfg, seed) in sigmoid space and returns predictions
# in sigmoid space for every probe row and every variable.

def _run_stcn(train, probe, cfg: BenchmarkConfig, seed: int, bounds) -> np.ndarray:
    m0 = build_initial_model(train, bounds, init=cfg.init, seed=seed)
    trained, _ = train_network(m0, train, cfg.learner)
    return core.predict(trained, probe)


def _run_lreg(train, probe, cfg, seed, bounds) -> np.ndarray:
    return ols.predict_all_targets(ols.fit_all_targets(train), probe)


def _run_fcm(train, probe, cfg: BenchmarkConfig, seed, bounds) -> np.ndarray:
    result = fcm.rcga_learn(train, cfg.ga, seed=seed)
    return result.model.step(probe)


def _run_hopfield(train, probe, cfg: BenchmarkConfig, seed, bounds) -> np.ndarray:
    w = hopfield.hopfield_train(train)
    out = hopfield.hopfield_recall_batch(w, probe, cfg.hopfield_sweeps)
    # recall lives on {0, 1}; place it on the sigmoid-space scale of the truth
    return core.MARGIN + out * (1.0 - 2.0 * core.MARGIN)


ALGORITHMS: dict[str, Callable] = {
    "STCN": _run_stcn,
    "LREG": _run_lreg,
    "FCM": _run_fcm,
    "Hopfield": _run_hopfield,
}
PROTOCOL_DEFAULTS = {
    "regression": ("STCN", "LREG"),
    "associative": ("STCN", "FCM", "Hopfield"),
}


def prepare_fold(values: np.ndarray, train_idx, test_idx):
    """Sigmoid-space train and test sets, normalized with training-fold bounds only."""
    train_raw, test_raw = values[train_idx], values[test_idx]
    bounds = column_bounds(train_raw)
    flat = np.flatnonzero(bounds[:, 1] <= bounds[:, 0])
    if flat.size:
        # widen constant training columns so the min-max map exists
        bounds[flat, 1] = bounds[flat, 0] + 1.0
    return apply_bounds(train_raw, bounds), apply_bounds(test_raw, bounds), bounds


def run_fold(values: np.ndarray, train_idx, test_idx, algorithm: str, protocol: str,
             cfg: BenchmarkConfig, seed: int) -> float:
    """Train on one fold and return the test MSE on the [0, 1] scale."""
    train, truth, bounds = prepare_fold(values, train_idx, test_idx)
    probe = truth
    if protocol == "associative":
        probe = corrupt(truth, cfg.corrupt_p, seed + 7919, cfg.corrupt_mode)
    elif protocol != "regression":
        raise ValueError(f"unknown protocol {protocol!r}")
    pred = ALGORITHMS[algorithm](train, probe, cfg, seed, bounds)
    return evaluate_mse(unit_scale(pred), unit_scale(truth))


@dataclass
class BenchmarkReport:
    protocol: str
    algorithms: list[str]
    datasets: list[str]
    cells: dict[str, dict[str, float | None]]
    fold_details: dict[str, dict[str, list[float]]]
    failures: dict[str, dict[str, str]]
    seed: int
    config: dict

    def table(self) -> np.ndarray:
        return np.array([[np.nan if self.cells[d][a] is None else self.cells[d][a]
                          for a in self.algorithms] for d in self.datasets])

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        lines = [",".join(["dataset", *self.algorithms])]
        for d in self.datasets:
            cells = [("failed" if self.cells[d][a] is None else f"{self.cells[d][a]:.5f}")
                     for a in self.algorithms]
            lines.append(",".join([d, *cells]))
        return "\n".join(lines) + "\n"


def _job(args):
    ds_name, values, tr, te, alg, protocol, cfg, seed, fold = args
    try:
        return ds_name, alg, fold, run_fold(values, tr, te, alg, protocol, cfg, seed), None
    except Exception as exc:  # noqa: BLE001 - a failed cell must not stop the sweep
        log.error("%s/%s fold %d failed: %s", ds_name, alg, fold, exc)
        return ds_name, alg, fold, None, f"{type(exc).__name__}: {exc}"


def run_benchmark(datasets: Sequence[Dataset], algorithms: Sequence[str] | None = None,
                  protocol: str = "regression", cfg: BenchmarkConfig = BenchmarkConfig(),
                  seed: int = 0, jobs: int = 1) -> BenchmarkReport:
    """Cross-validate every algorithm on every dataset.

    Rows are put in canonical (sorted) order before the seeded split, so
    results do not depend on the row order of the input file. Fold seeds are
    derived from ``seed`` and the fold index only.
    """
    algorithms = list(algorithms or PROTOCOL_DEFAULTS[protocol])
    unknown = [a for a in algorithms if a not in ALGORITHMS]
    if unknown:
        raise ValueError(f"unknown algorithms {unknown}; available: {sorted(ALGORITHMS)}")
    tasks = []
    for ds in datasets:
        values = ds.values[np.lexsort(ds.values.T[::-1])]
        for fold, (tr, te) in enumerate(kfold_split(ds.k, cfg.folds, seed)):
            for alg in algorithms:
                tasks.append((ds.name, values, tr, te, alg, protocol, cfg, seed + 1000 * fold, fold))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_job, tasks))
    else:
        results = [_job(t) for t in tasks]

    names = [ds.name for ds in datasets]
    details = {d: {a: [None] * cfg.folds for a in algorithms} for d in names}
    failures: dict[str, dict[str, str]] = {}
    for d, a, fold, mse, err in results:
        if err is not None:
            failures.setdefault(d, {})[a] = err
        else:
            details[d][a][fold] = mse
    cells = {d: {a: (None if a in failures.get(d, {}) else float(np.mean(details[d][a])))
                 for a in algorithms} for d in names}
    return BenchmarkReport(protocol, algorithms, names, cells, details, failures, seed, cfg.to_dict())
