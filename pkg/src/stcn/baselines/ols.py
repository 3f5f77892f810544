"""Ordinary least squares with intercept, one model per target variable."""

from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger(__name__)

RIDGE = 1e-8


def _design(x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return np.column_stack([np.ones(x.shape[0]), x])


def ols_fit(x, y) -> np.ndarray:
    """Coefficients ``[intercept, slopes...]``; rank-deficient designs fall back to ridge."""
    a = _design(x)
    y = np.asarray(y, dtype=np.float64)
    if np.linalg.matrix_rank(a) < a.shape[1]:
        log.warning("rank-deficient design (%d x %d), using ridge penalty %g", *a.shape, RIDGE)
        return np.linalg.solve(a.T @ a + RIDGE * np.eye(a.shape[1]), a.T @ y)
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    return coef


def ols_predict(coef, x) -> np.ndarray:
    return np.clip(_design(x) @ coef, 0.0, 1.0)


def fit_all_targets(data) -> list[np.ndarray]:
    """One model per column, predicting it from every other column."""
    x = np.asarray(data, dtype=np.float64)
    m = x.shape[1]
    return [ols_fit(np.delete(x, i, axis=1), x[:, i]) for i in range(m)]


def predict_all_targets(coefs, data) -> np.ndarray:
    x = np.asarray(data, dtype=np.float64)
    return np.column_stack([ols_predict(c, np.delete(x, i, axis=1)) for i, c in enumerate(coefs)])
