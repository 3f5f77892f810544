"""Short-term Cognitive Network reasoning.

An STCN keeps a fixed weight matrix and learns, for every iteration ``t`` and
every neuron ``i``, the four parameters of a generalized sigmoid. Inference at
iteration ``t`` is a two-layer map from the *initial* activation vector::

    psi(t-1) = a0                                  if t == 1
             = f(t-1)(a0 @ W)                      otherwise
    A(t)     = f(t)(psi(t-1) @ W)

Arrays follow the row convention: activation vectors are rows, and
``weights[j, i]`` is the influence of neuron ``j`` on neuron ``i``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

PARAM_NAMES = ("lambda", "h", "q", "v")


class DomainError(ValueError):
    """Argument outside the domain where a transfer function is defined."""


@dataclass(frozen=True)
class TransferParams:
    """Generalized sigmoid parameters for one neuron at one iteration."""

    lam: float
    h: float
    q: float
    v: float

    def __post_init__(self):
        vals = (self.lam, self.h, self.q, self.v)
        if not all(math.isfinite(x) for x in vals):
            raise ValueError(f"non-finite transfer parameters: {vals}")
        if self.lam <= 0 or self.q <= 0 or self.v <= 0:
            raise ValueError(f"lambda, q and v must be positive, got {vals}")

    def as_array(self) -> np.ndarray:
        return np.array([self.lam, self.h, self.q, self.v], dtype=np.float64)

    @classmethod
    def from_array(cls, x) -> "TransferParams":
        return cls(*(float(c) for c in x))

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "h": self.h, "q": self.q, "v": self.v}

    @classmethod
    def from_dict(cls, d: dict) -> "TransferParams":
        return cls(float(d["lambda"]), float(d["h"]), float(d["q"]), float(d["v"]))


STANDARD = TransferParams(1.0, 0.0, 1.0, 1.0)


def log1p_q_exp(z, q):
    """``log(1 + q * exp(z))`` without overflow."""
    return np.logaddexp(0.0, np.log(q) + z)


def sigmoid(x, lam, h, q, v):
    """Vectorized generalized sigmoid; parameters broadcast against ``x``."""
    z = -lam * (np.asarray(x, dtype=np.float64) - h)
    return np.exp(-log1p_q_exp(z, q) / v)


def generalized_sigmoid(x: float, p: TransferParams) -> float:
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x}")
    return float(sigmoid(x, p.lam, p.h, p.q, p.v))


def inverse_sigmoid(y: float, p: TransferParams) -> float:
    """Pre-activation ``x`` with ``generalized_sigmoid(x, p) == y``, for 0 < y < 1."""
    if not (0.0 < y < 1.0):
        raise DomainError(f"inverse sigmoid is defined on (0, 1) only, got {y}")
    # y**-v - 1, computed without cancellation for y close to 1
    u = math.expm1(-p.v * math.log(y))
    return p.h - math.log(u / p.q) / p.lam


def effective_weights(weights: np.ndarray, allow_self_loops: bool = False) -> np.ndarray:
    w = np.array(weights, dtype=np.float64)
    if not allow_self_loops:
        np.fill_diagonal(w, 0.0)
    return w


def raw_activation(weights, evidence, i: int, allow_self_loops: bool = False) -> float:
    """Weighted input ``sum_j w[j, i] * evidence[j]`` reaching neuron ``i``."""
    w = np.asarray(weights, dtype=np.float64)
    e = np.asarray(evidence, dtype=np.float64)
    m = w.shape[0]
    if w.ndim != 2 or w.shape != (m, m):
        raise ValueError(f"weight matrix must be square, got shape {w.shape}")
    if e.shape != (m,):
        raise ValueError(f"evidence has shape {e.shape}, expected ({m},)")
    if not 0 <= i < m:
        raise ValueError(f"neuron index {i} out of range for M={m}")
    col = w[:, i].copy()
    if not allow_self_loops:
        col[i] = 0.0
    return float(col @ e)


@dataclass(frozen=True, eq=False)
class StcnModel:
    """Fixed weights plus one row of transfer parameters per iteration.

    ``params`` has shape ``(T, M, 4)`` with columns ``(lambda, h, q, v)``.
    ``bounds`` has shape ``(M, 2)`` holding the observed ``(lower, upper)``
    of every variable in original units.
    """

    weights: np.ndarray
    params: np.ndarray
    bounds: np.ndarray
    seed: int = 0
    allow_self_loops: bool = False
    names: tuple = field(default=())

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] == 0:
            raise ValueError(f"weight matrix must be square and non-empty, got {w.shape}")
        m = w.shape[0]
        if not self.allow_self_loops:
            np.fill_diagonal(w, 0.0)
        p = np.array(self.params, dtype=np.float64)
        if p.ndim != 3 or p.shape[1:] != (m, 4) or p.shape[0] == 0:
            raise ValueError(f"params must have shape (T, {m}, 4), got {p.shape}")
        if np.any(p[..., [0, 2, 3]] <= 0) or not np.all(np.isfinite(p)):
            raise ValueError("lambda, q and v must be finite and positive")
        b = np.array(self.bounds, dtype=np.float64)
        if b.shape != (m, 2):
            raise ValueError(f"bounds must have shape ({m}, 2), got {b.shape}")
        if np.any(b[:, 0] >= b[:, 1]):
            bad = np.flatnonzero(b[:, 0] >= b[:, 1]).tolist()
            raise ValueError(f"degenerate bounds (lower >= upper) for variables {bad}")
        for arr in (w, p, b):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "params", p)
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def m(self) -> int:
        return self.weights.shape[0]

    @property
    def iterations(self) -> int:
        return self.params.shape[0]

    @property
    def layers(self) -> list[list[TransferParams]]:
        return [[TransferParams.from_array(row) for row in layer] for layer in self.params]

    def layer(self, t: int) -> list[TransferParams]:
        """Transfer parameters of iteration ``t`` (1-based)."""
        self._check_t(t, lo=1)
        return [TransferParams.from_array(row) for row in self.params[t - 1]]

    def with_params(self, params) -> "StcnModel":
        return StcnModel(self.weights, params, self.bounds, self.seed,
                         self.allow_self_loops, self.names)

    def _check_t(self, t: int, lo: int = 0):
        if not lo <= t <= self.iterations:
            raise IndexError(f"iteration {t} outside [{lo}, {self.iterations}]")

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "m": self.m,
            "t": self.iterations,
            "weights": self.weights.tolist(),
            "layers": [[dict(zip(PARAM_NAMES, map(float, row))) for row in layer]
                       for layer in self.params],
            "bounds": [{"lower": float(lo), "upper": float(hi)} for lo, hi in self.bounds],
            "seed": int(self.seed),
        }
        if self.allow_self_loops:
            d["allow_self_loops"] = True
        if self.names:
            d["names"] = list(self.names)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StcnModel":
        params = [[[row[k] for k in PARAM_NAMES] for row in layer] for layer in d["layers"]]
        model = cls(
            weights=d["weights"],
            params=params,
            bounds=[[b["lower"], b["upper"]] for b in d["bounds"]],
            seed=int(d.get("seed", 0)),
            allow_self_loops=bool(d.get("allow_self_loops", False)),
            names=tuple(d.get("names", ())),
        )
        if model.m != d["m"] or model.iterations != d["t"]:
            raise ValueError("model file header (m, t) disagrees with its contents")
        return model

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "StcnModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _as_batch(model: StcnModel, a0) -> tuple[np.ndarray, bool]:
    a = np.asarray(a0, dtype=np.float64)
    single = a.ndim == 1
    a = np.atleast_2d(a)
    if a.ndim != 2 or a.shape[1] != model.m:
        raise ValueError(f"activation vectors must have {model.m} components, got shape {a.shape}")
    if np.any(a < 0) or np.any(a > 1) or not np.all(np.isfinite(a)):
        raise ValueError("activation values must lie in [0, 1]")
    return a, single


def _apply_layer(params_t: np.ndarray, raw: np.ndarray) -> np.ndarray:
    lam, h, q, v = params_t.T
    return sigmoid(raw, lam, h, q, v)


def evidence_batch(model: StcnModel, a0: np.ndarray, t: int) -> np.ndarray:
    """Short-term evidence for a ``(K, M)`` batch of initial vectors (no validation)."""
    if t == 0:
        return a0
    return _apply_layer(model.params[t - 1], a0 @ model.weights)


def step_batch(model: StcnModel, a0: np.ndarray, t: int) -> np.ndarray:
    return _apply_layer(model.params[t - 1], evidence_batch(model, a0, t - 1) @ model.weights)


def short_term_evidence(model: StcnModel, a0, t: int) -> np.ndarray:
    model._check_t(t, lo=0)
    a, single = _as_batch(model, a0)
    out = evidence_batch(model, a, t)
    return out[0] if single else out


def stcn_step(model: StcnModel, a0, t: int) -> np.ndarray:
    """Activation vector produced at iteration ``t`` (1-based) from ``a0``."""
    model._check_t(t, lo=1)
    a, single = _as_batch(model, a0)
    out = step_batch(model, a, t)
    return out[0] if single else out


def stcn_simulate(model: StcnModel, a0) -> list[np.ndarray]:
    """Outputs of every iteration ``1..T``; the last one is the prediction."""
    a, single = _as_batch(model, a0)
    outs = [step_batch(model, a, t) for t in range(1, model.iterations + 1)]
    return [o[0] for o in outs] if single else outs


def predict(model: StcnModel, a0) -> np.ndarray:
    return stcn_simulate(model, a0)[-1]


# Margin keeping sigmoid-space data away from 0 and 1, where the inverse
# transfer function is unbounded or undefined.
MARGIN = 0.01


def to_original_units(model_or_bounds, normalized, margin: float = MARGIN) -> np.ndarray:
    """Undo the sigmoid-space min-max map and clamp every value to ``[L_i, U_i]``."""
    b = model_or_bounds.bounds if isinstance(model_or_bounds, StcnModel) else np.asarray(model_or_bounds)
    lo, hi = b[:, 0], b[:, 1]
    y = np.asarray(normalized, dtype=np.float64)
    x = lo + (y - margin) / (1.0 - 2.0 * margin) * (hi - lo)
    return np.clip(x, lo, hi)


def transfer_shapes(params: np.ndarray, bound: float, n: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Sample every neuron's transfer function of each layer on ``[-bound, bound]``.

    Returns ``(x, y)`` with ``y`` of shape ``(T, M, n)``.
    """
    x = np.linspace(-bound, bound, n)
    p = np.asarray(params, dtype=np.float64)
    lam, h, q, v = (p[..., k][..., None] for k in range(4))
    return x, sigmoid(x, lam, h, q, v)


def stack_params(layers: Sequence[Sequence[TransferParams]]) -> np.ndarray:
    return np.array([[p.as_array() for p in layer] for layer in layers], dtype=np.float64)
