"""Discrete Hopfield associative memory with Hebbian storage and synchronous recall."""

from __future__ import annotations

import numpy as np


def bipolarize(x, threshold: float = 0.5) -> np.ndarray:
    return np.where(np.asarray(x, dtype=np.float64) > threshold, 1.0, -1.0)


def hopfield_train(data) -> np.ndarray:
    """Hebbian weights ``(1/K) sum_k s_k s_k^T`` with zero diagonal."""
    s = bipolarize(np.atleast_2d(data))
    w = s.T @ s / s.shape[0]
    np.fill_diagonal(w, 0.0)
    return w


def energy(w, s) -> float:
    s = np.asarray(s, dtype=np.float64)
    return float(-0.5 * s @ w @ s)


def hopfield_recall(w, probe, max_sweeps: int = 100) -> tuple[np.ndarray, bool]:
    """Synchronous sign updates from the bipolarized probe.

    Zero net input keeps the previous state. Returns the final pattern mapped
    to {0, 1} and whether a fixed point was reached within ``max_sweeps``.
    """
    w = np.asarray(w, dtype=np.float64)
    s = bipolarize(probe)
    for _ in range(max_sweeps):
        net = w @ s
        nxt = np.where(net > 0, 1.0, np.where(net < 0, -1.0, s))
        if np.array_equal(nxt, s):
            return (s + 1) / 2, True
        s = nxt
    return (s + 1) / 2, False


def hopfield_recall_batch(w, probes, max_sweeps: int = 100) -> np.ndarray:
    return np.array([hopfield_recall(w, p, max_sweeps)[0] for p in np.atleast_2d(probes)])
