"""Build an initial STCN from data: pairwise regression weights and offsets."""

from __future__ import annotations

import logging

import numpy as np

from .model import MARGIN, StcnModel

log = logging.getLogger(__name__)

INIT_MODES = ("regression", "paper", "random")
FIXED_START = (5.0, 0.5, 1.0, 1.0)


class DegenerateColumnError(ValueError):
    """A column has zero variance, so no slope or min-max map exists."""


def _sums(xj, xi):
    xj = np.asarray(xj, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    if xj.shape != xi.shape or xj.ndim != 1 or xj.size < 2:
        raise ValueError("columns must be 1-D, of equal length >= 2")
    k = xj.size
    den = k * np.sum(xj * xj) - np.sum(xj) ** 2
    # relative test: the two terms cancel exactly for constant columns
    if abs(den) <= 1e-12 * k * np.sum(xj * xj):
        raise DegenerateColumnError("predictor column has zero variance")
    return xj, xi, k, den


def regression_weight(xj, xi) -> float:
    """Slope of the least-squares line predicting ``xi`` from ``xj``."""
    xj, xi, k, den = _sums(xj, xi)
    return float((k * np.sum(xj * xi) - np.sum(xj) * np.sum(xi)) / den)


def regression_residual(xj, xi) -> float:
    """Intercept of the same line."""
    xj, xi, k, den = _sums(xj, xi)
    return float((np.sum(xj * xj) * np.sum(xi) - np.sum(xj * xi) * np.sum(xj)) / den)


def regression_matrices(data) -> tuple[np.ndarray, np.ndarray]:
    """All pairwise slopes and intercepts; ``[j, i]`` regresses column ``i`` on ``j``.

    Zero-variance predictors get slope and intercept 0 (with a warning); the
    diagonal is left at 0.
    """
    x = np.asarray(data, dtype=np.float64)
    m = x.shape[1]
    w = np.zeros((m, m))
    r = np.zeros((m, m))
    for j in range(m):
        for i in range(m):
            if i == j:
                continue
            try:
                w[j, i] = regression_weight(x[:, j], x[:, i])
                r[j, i] = regression_residual(x[:, j], x[:, i])
            except DegenerateColumnError:
                log.warning("column %d has zero variance; weight %d->%d set to 0", j, j, i)
    return w, r


def column_bounds(raw) -> np.ndarray:
    x = np.asarray(raw, dtype=np.float64)
    return np.column_stack([x.min(axis=0), x.max(axis=0)])


def apply_bounds(raw, bounds, margin: float = MARGIN) -> np.ndarray:
    """Min-max map onto ``[margin, 1 - margin]`` with fixed bounds, clamping outliers."""
    b = np.asarray(bounds, dtype=np.float64)
    lo, hi = b[:, 0], b[:, 1]
    x = np.asarray(raw, dtype=np.float64)
    y = margin + (x - lo) / (hi - lo) * (1.0 - 2.0 * margin)
    return np.clip(y, margin, 1.0 - margin)


def to_sigmoid_space(raw, margin: float = MARGIN) -> tuple[np.ndarray, np.ndarray]:
    """Normalize each column onto ``[margin, 1 - margin]``; returns ``(data, bounds)``."""
    x = np.asarray(raw, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError(f"expected a non-empty 2-D array, got shape {x.shape}")
    bounds = column_bounds(x)
    flat = np.flatnonzero(bounds[:, 1] <= bounds[:, 0])
    if flat.size:
        raise DegenerateColumnError(f"constant columns: {flat.tolist()}")
    return apply_bounds(x, bounds, margin), bounds


def initial_params(m: int, offsets: np.ndarray, mode: str, rng: np.random.Generator) -> np.ndarray:
    """Layer-1 parameters ``(M, 4)`` for the given init mode."""
    if mode == "paper":
        return np.tile(FIXED_START, (m, 1)).astype(np.float64)
    lam = rng.uniform(1.0, 5.0, m)
    q = rng.uniform(0.8, 1.2, m)
    v = rng.uniform(0.8, 1.2, m)
    if mode == "regression":
        h = offsets
    elif mode == "random":
        h = rng.uniform(0.0, 1.0, m)
    else:
        raise ValueError(f"unknown init mode {mode!r}; expected one of {INIT_MODES}")
    return np.column_stack([lam, h, q, v])


def build_initial_model(data, bounds, init: str = "regression", seed: int = 0,
                        weights=None, allow_self_loops: bool = False, names=()) -> StcnModel:
    """Initial single-layer model.

    ``data`` is the sigmoid-space training set and ``bounds`` the original
    ``(lower, upper)`` of each column. Without expert ``weights``, the weight
    from ``j`` to ``i`` is the slope of regressing column ``i`` on column ``j``.
    The offset of neuron ``i`` starts at ``min(1, sum_j r_ji)`` over the
    matching intercepts.
    """
    x = np.asarray(data, dtype=np.float64)
    m = x.shape[1]
    var = x.var(axis=0)
    if np.all(var == 0):
        raise DegenerateColumnError("every column is constant")
    w, r = regression_matrices(x)
    offsets = np.minimum(1.0, r.sum(axis=0))
    if weights is not None:
        w = np.array(weights, dtype=np.float64)
        if w.shape != (m, m):
            raise ValueError(f"expert weights have shape {w.shape}, data has {m} columns")
    rng = np.random.default_rng(seed)
    params = initial_params(m, offsets, init, rng)
    return StcnModel(w, params[None], bounds, seed=seed, allow_self_loops=allow_self_loops, names=names)
