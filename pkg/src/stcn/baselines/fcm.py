"""Sigmoid fuzzy cognitive maps: inference, attractor classification, bounds, RCGA."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


def logistic(x, lam: float = 1.0):
    return 1.0 / (1.0 + np.exp(-lam * np.asarray(x, dtype=np.float64)))


@dataclass(frozen=True, eq=False)
class FcmModel:
    weights: np.ndarray  # weights[j, i]: influence of concept j on concept i
    lam: float = 1.0
    max_steps: int = 100
    tolerance: float = 1e-5

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weight matrix must be square, got {w.shape}")
        if np.any(np.abs(w) > 1.0):
            raise ValueError("FCM weights must lie in [-1, 1]")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        np.fill_diagonal(w, 0.0)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return self.weights.shape[0]

    def step(self, a) -> np.ndarray:
        """One inference step for a vector or a ``(K, M)`` batch."""
        return logistic(np.asarray(a, dtype=np.float64) @ self.weights, self.lam)

    def to_dict(self) -> dict:
        return {"kind": "fcm", "m": self.m, "lambda": self.lam, "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FcmModel":
        return cls(np.array(d["weights"], dtype=np.float64), lam=float(d.get("lambda", 1.0)))


class Attractor(str, enum.Enum):
    FIXED_POINT = "fixed-point"
    LIMIT_CYCLE = "limit-cycle"
    CHAOS = "chaos"


@dataclass
class AttractorReport:
    kind: Attractor
    onset: int | None
    period: int | None
    trajectory: list[np.ndarray] = field(repr=False)


def _close(a, b, tol) -> bool:
    return float(np.max(np.abs(a - b))) <= tol


def fcm_infer(model: FcmModel, a0) -> AttractorReport:
    """Iterate the map from ``a0`` and classify where the trajectory ends up.

    States count as equal when they differ by at most ``model.tolerance`` in
    max-norm. A limit cycle needs at least two full repetitions before the
    step budget runs out.
    """
    a = np.asarray(a0, dtype=np.float64)
    if a.shape != (model.m,) or np.any(a < 0) or np.any(a > 1):
        raise ValueError(f"initial vector must be in [0, 1]^{model.m}")
    traj = [a]
    tol = model.tolerance
    for t in range(1, model.max_steps + 1):
        traj.append(model.step(traj[-1]))
        if _close(traj[t], traj[t - 1], tol):
            return AttractorReport(Attractor.FIXED_POINT, max(1, t - 1), None, traj)
    n = len(traj)
    for period in range(2, n // 3 + 1):
        if not _close(traj[-1], traj[-1 - period], tol):
            continue
        # walk back to the first state from which the orbit repeats
        onset = n - 1 - period
        while onset - 1 >= 0 and _close(traj[onset - 1], traj[onset - 1 + period], tol):
            onset -= 1
        if n - onset >= 3 * period:
            return AttractorReport(Attractor.LIMIT_CYCLE, onset, period, traj)
    return AttractorReport(Attractor.CHAOS, None, None, traj)


def activation_bounds(model: FcmModel, i: int) -> tuple[float, float]:
    """Interval any activation of concept ``i`` stays in after the first step.

    Inputs lie in [0, 1], so the weighted sum is smallest when only the
    negative incoming weights fire and largest when only the positive ones do.
    """
    col = model.weights[:, i].copy()
    col[i] = 0.0
    lo = np.sum(col * (1 - np.sign(col)) / 2)
    hi = np.sum(col * (1 + np.sign(col)) / 2)
    return float(logistic(lo, model.lam)), float(logistic(hi, model.lam))


@dataclass(frozen=True)
class GaConfig:
    generations: int = 100
    crossover_p: float = 0.9
    mutation_p: float = 0.1
    blx_alpha: float = 0.5
    tournament: int = 2
    # None: one chromosome per weight to estimate
    population: int | None = None
    lam: float = 1.0


def one_step_mse(weights: np.ndarray, data: np.ndarray, lam: float = 1.0) -> np.ndarray:
    """Reconstruction MSE of one FCM step for a stack ``(P, M, M)`` of weight matrices."""
    out = logistic(np.einsum("km,pmn->pkn", data, weights), lam)
    return np.mean((out - data[None]) ** 2, axis=(1, 2))


def _unflatten(genes: np.ndarray, m: int) -> np.ndarray:
    p = genes.shape[0]
    w = np.zeros((p, m, m))
    off = ~np.eye(m, dtype=bool)
    w[:, off] = genes
    return w


@dataclass
class RcgaResult:
    model: FcmModel
    best_fitness: list[float]


def rcga_learn(data, cfg: GaConfig = GaConfig(), seed: int = 0) -> RcgaResult:
    """Elitist real-coded GA over off-diagonal weights in [-1, 1].

    Fitness is ``1 / (1 + MSE)`` of reconstructing each instance from itself
    in one inference step. Tournament selection, BLX-alpha crossover and
    per-gene uniform-reset mutation; the best individual always survives.
    """
    x = np.asarray(data, dtype=np.float64)
    m = x.shape[1]
    n_genes = m * (m - 1)
    pop_size = cfg.population or n_genes
    if pop_size < 2:
        log.warning("population of %d is too small, using 4", pop_size)
        pop_size = 4
    rng = np.random.default_rng(seed)
    pop = rng.uniform(-1.0, 1.0, (pop_size, n_genes))

    def fitness(genes):
        return 1.0 / (1.0 + one_step_mse(_unflatten(genes, m), x, cfg.lam))

    fit = fitness(pop)
    history = [float(fit.max())]
    for _ in range(cfg.generations):
        elite = pop[np.argmax(fit)].copy()
        contenders = rng.integers(0, pop_size, (pop_size, cfg.tournament))
        parents = pop[contenders[np.arange(pop_size), np.argmax(fit[contenders], axis=1)]]
        children = parents.copy()
        for a in range(0, pop_size - 1, 2):
            if rng.random() < cfg.crossover_p:
                p1, p2 = parents[a], parents[a + 1]
                lo, hi = np.minimum(p1, p2), np.maximum(p1, p2)
                spread = cfg.blx_alpha * (hi - lo)
                children[a] = rng.uniform(lo - spread, hi + spread)
                children[a + 1] = rng.uniform(lo - spread, hi + spread)
        mutate = rng.random(children.shape) < cfg.mutation_p
        children[mutate] = rng.uniform(-1.0, 1.0, int(mutate.sum()))
        np.clip(children, -1.0, 1.0, out=children)
        children[0] = elite
        pop = children
        fit = fitness(pop)
        history.append(float(fit.max()))
    best = _unflatten(pop[np.argmax(fit)][None], m)[0]
    return RcgaResult(FcmModel(best, lam=cfg.lam), history)
