"""Nonsynaptic learning: fit transfer parameters layer by layer, weights fixed.

Each neuron of each iteration is fitted independently by gradient descent with
momentum on its squared simulation error. Layers are trained in sequence;
layer ``t`` starts from the parameters fitted for layer ``t - 1``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .model import StcnModel, TransferParams, evidence_batch, log1p_q_exp, sigmoid

log = logging.getLogger(__name__)

# Parameters that must stay strictly positive: lambda, q, v.
POSITIVE = np.array([True, False, True, True])


@dataclass(frozen=True)
class LearnerConfig:
    eta: float = 0.001
    beta: float = 0.85
    epochs: int = 500
    xi1: float = 1e-5
    xi2: float = 1e-4
    max_iterations: int = 20
    param_floor: float = 1e-4
    # max-norm parameter movement below which a neuron stops early
    move_tol: float = 1e-9
    quad_panels: int = 1024

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not self.beta >= 0:
            raise ValueError("beta must be non-negative")
        if not self.param_floor > 0:
            raise ValueError("param_floor must be positive")
        if self.epochs < 0 or self.max_iterations < 1:
            raise ValueError("epochs must be >= 0 and max_iterations >= 1")
        if not (self.xi1 > 0 and self.xi2 > 0):
            raise ValueError("xi1 and xi2 must be positive")


@dataclass(frozen=True)
class GradientTerms:
    gamma: np.ndarray
    theta: np.ndarray
    partials: np.ndarray  # (d/dlambda, d/dh, d/dq, d/dv)


class StopReason(str, enum.Enum):
    MAX_ITERATIONS = "max-iterations"
    STATIONARY = "stationary"


class Stationarity(str, enum.Enum):
    CONTINUE = "continue"
    STATIONARY = "stationary"


@dataclass
class LayerRecord:
    t: int
    error: float
    delta: float | None
    max_shape_distance: float | None
    stationary: bool
    epochs: list[int]
    restarts: list[int]

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "E": self.error,
            "delta_E": self.delta,
            "max_shape_distance": self.max_shape_distance,
            "stationary": self.stationary,
            "epochs": self.epochs,
            "restarts": self.restarts,
        }


@dataclass
class TrainingTrace:
    per_iteration_error: list[float]
    stop_reason: StopReason
    chosen_T: int
    layers: list[LayerRecord] = field(default_factory=list)


def _check_pair(raw, targets) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(raw, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if a.shape != y.shape or a.ndim != 1 or a.size == 0:
        raise ValueError(f"raw and targets must be equal-length 1-D, got {a.shape} and {y.shape}")
    return a, y


def neuron_error(params: TransferParams, raw, targets) -> float:
    a, y = _check_pair(raw, targets)
    r = sigmoid(a, params.lam, params.h, params.q, params.v) - y
    return float(r @ r)


def _gradients(x: np.ndarray, raw: np.ndarray, y: np.ndarray):
    """Error and partials for stacked neurons.

    ``x`` is ``(M, 4)``; ``raw`` and ``y`` are ``(K, M)``. Returns the per-neuron
    error ``(M,)``, the partials ``(M, 4)``, and the per-example ``gamma`` and
    ``theta`` factors. Everything is carried in log space so that saturated
    neurons give finite values.
    """
    lam, h, q, v = x.T
    z = -(raw - h) * lam                     # log of exp(-(A - h) * lambda)
    log_theta = log1p_q_exp(z, q)
    out = np.exp(-log_theta / v)             # theta ** (-1 / v)
    resid = out - y
    # gamma * theta ** (-1 - 1/v) with gamma = 2 exp(z)
    g = 2.0 * np.exp(z - (1.0 + 1.0 / v) * log_theta)
    common = g * resid / v
    d_lam = np.sum(common * (raw - h) * q, axis=0)
    d_h = -np.sum(common * q * lam, axis=0)
    d_q = -np.sum(common, axis=0)
    d_v = np.sum(2.0 * out * log_theta * resid, axis=0) / (v * v)
    err = np.sum(resid * resid, axis=0)
    return err, np.stack([d_lam, d_h, d_q, d_v], axis=1), z, log_theta


def error_gradient(params: TransferParams, raw, targets) -> GradientTerms:
    a, y = _check_pair(raw, targets)
    x = params.as_array()[None, :]
    _, grad, z, log_theta = _gradients(x, a[:, None], y[:, None])
    return GradientTerms(gamma=2.0 * np.exp(z[:, 0]), theta=np.exp(log_theta[:, 0]),
                         partials=grad[0])


def finite_difference_gradient(params: TransferParams, raw, targets, step: float = 1e-6) -> np.ndarray:
    """Central differences of :func:`neuron_error` in each of the four parameters."""
    if not step > 0:
        raise ValueError("step must be positive")
    a, y = _check_pair(raw, targets)
    x0 = params.as_array()
    out = np.empty(4)
    for k in range(4):
        s = step
        if POSITIVE[k] and x0[k] - s <= 0:
            s = x0[k] / 2.0
            if not s > 0:
                raise ValueError(f"cannot perturb parameter {k} feasibly")
        xp, xm = x0.copy(), x0.copy()
        xp[k] += s
        xm[k] -= s
        ep = neuron_error(TransferParams.from_array(xp), a, y)
        em = neuron_error(TransferParams.from_array(xm), a, y)
        out[k] = (ep - em) / (2.0 * s)
    return out


def gradient_step(x, z_prev, grad, cfg: LearnerConfig) -> tuple[np.ndarray, np.ndarray]:
    """One momentum update; lambda, q and v are projected back onto ``>= param_floor``."""
    x = np.asarray(x, dtype=np.float64)
    z_next = cfg.beta * np.asarray(z_prev, dtype=np.float64) + cfg.eta * np.asarray(grad, dtype=np.float64)
    x_next = x - z_next
    x_next = np.where(POSITIVE, np.maximum(x_next, cfg.param_floor), x_next)
    return x_next, z_next


def _descend(x0: np.ndarray, raw: np.ndarray, y: np.ndarray, cfg: LearnerConfig, eta: np.ndarray):
    """Momentum descent for a stack of independent neurons.

    Returns the best parameters seen, their errors, epochs run per neuron and
    a mask of neurons that produced a non-finite error.
    """
    m = x0.shape[0]
    x = x0.copy()
    z = np.zeros_like(x)
    best_x = x0.copy()
    best_e = np.full(m, np.inf)
    active = np.ones(m, dtype=bool)
    diverged = np.zeros(m, dtype=bool)
    epochs = np.zeros(m, dtype=int)
    for _ in range(cfg.epochs):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        err, grad, _, _ = _gradients(x[idx], raw[:, idx], y[:, idx])
        bad = ~(np.isfinite(err) & np.all(np.isfinite(grad), axis=1))
        if bad.any():
            diverged[idx[bad]] = True
            active[idx[bad]] = False
        ok = idx[~bad]
        err, grad = err[~bad], grad[~bad]
        better = err < best_e[ok]
        best_e[ok[better]] = err[better]
        best_x[ok[better]] = x[ok[better]]
        z_new = cfg.beta * z[ok] + eta[ok, None] * grad
        x_new = x[ok] - z_new
        x_new[:, POSITIVE] = np.maximum(x_new[:, POSITIVE], cfg.param_floor)
        moved = np.max(np.abs(x_new - x[ok]), axis=1)
        x[ok], z[ok] = x_new, z_new
        epochs[ok] += 1
        active[ok[moved < cfg.move_tol]] = False
    # the final iterate has not been scored yet
    idx = np.flatnonzero(~diverged)
    if idx.size:
        err, _, _, _ = _gradients(x[idx], raw[:, idx], y[:, idx])
        better = np.isfinite(err) & (err < best_e[idx])
        best_e[idx[better]] = err[better]
        best_x[idx[better]] = x[idx[better]]
    return best_x, best_e, epochs, diverged


def fit_neurons(x0: np.ndarray, raw: np.ndarray, y: np.ndarray, cfg: LearnerConfig):
    """Fit ``x0`` (``(M, 4)``) to targets ``y`` given raw inputs, both ``(K, M)``.

    A neuron whose error turns non-finite is restarted from its initial
    parameters with half the learning rate, at most three times; after that
    the best parameters seen are kept.
    """
    x0 = np.array(x0, dtype=np.float64)
    m = x0.shape[0]
    eta = np.full(m, cfg.eta)
    init_err, _, _, _ = _gradients(x0, raw, y)
    best_x, best_e, epochs, diverged = _descend(x0, raw, y, cfg, eta)
    restarts = np.zeros(m, dtype=int)
    for _ in range(3):
        if not diverged.any():
            break
        idx = np.flatnonzero(diverged)
        log.warning("non-finite error for neurons %s, halving eta and restarting", idx.tolist())
        eta[idx] /= 2.0
        restarts[idx] += 1
        bx, be, ep, dv = _descend(x0[idx], raw[:, idx], y[:, idx], cfg, eta[idx])
        better = be < best_e[idx]
        best_e[idx[better]] = be[better]
        best_x[idx[better]] = bx[better]
        epochs[idx] = ep
        diverged[:] = False
        diverged[idx[dv]] = True
    # epochs == 0 or immediate divergence: fall back to the starting point
    unset = ~np.isfinite(best_e)
    best_x[unset] = x0[unset]
    best_e[unset] = init_err[unset]
    return best_x, best_e, epochs, restarts


def layer_inputs(model: StcnModel, t: int, a0: np.ndarray) -> np.ndarray:
    """Raw activations feeding iteration ``t`` for a batch of initial vectors."""
    return evidence_batch(model, a0, t - 1) @ model.weights


def train_layer(model: StcnModel, t: int, data, cfg: LearnerConfig, targets=None, init=None):
    """Fit the transfer parameters of iteration ``t``.

    ``data`` is the ``(K, M)`` sigmoid-space training set, used both as the
    initial activation vectors and (unless ``targets`` is given) as the
    expected outputs. Layers ``1..t-1`` of ``model`` must already be trained.
    The starting point is ``init``, else the model's own layer ``t`` if it
    has one, else layer ``t - 1``.

    Returns ``(params, error, info)`` with ``params`` a list of
    :class:`TransferParams` and ``error`` the summed squared error.
    """
    a0 = np.asarray(data, dtype=np.float64)
    y = a0 if targets is None else np.asarray(targets, dtype=np.float64)
    if not 1 <= t <= model.iterations + 1:
        raise IndexError(f"cannot train iteration {t} of a model with {model.iterations} layers")
    if init is None:
        init = model.params[t - 1] if t <= model.iterations else model.params[t - 2]
    x0 = np.array([p.as_array() for p in init] if isinstance(init[0], TransferParams) else init,
                  dtype=np.float64)
    raw = layer_inputs(model, t, a0)
    x, err, epochs, restarts = fit_neurons(x0, raw, y, cfg)
    params = [TransferParams.from_array(row) for row in x]
    info = {"epochs": epochs.tolist(), "restarts": restarts.tolist(), "neuron_errors": err.tolist()}
    return params, float(np.sum(err)), info


def shape_distance(p1: TransferParams, p2: TransferParams, bound: float, panels: int = 1024) -> float:
    """Integral of the squared difference of two transfer functions over ``[-bound, bound]``."""
    x = np.linspace(-bound, bound, panels + 1)
    d = sigmoid(x, p1.lam, p1.h, p1.q, p1.v) - sigmoid(x, p2.lam, p2.h, p2.q, p2.v)
    return float(simpson(d * d, x=x))


def stationarity_check(prev_layer, curr_layer, e_prev: float, e_curr: float,
                       cfg: LearnerConfig, bound: float | None = None) -> Stationarity:
    """Stationary when the error barely moved and every transfer function kept its shape.

    A small error change with some function changing shape signals a
    different optimum of equal quality, so training should continue.
    ``bound`` defaults to the neuron count.
    """
    if len(prev_layer) != len(curr_layer):
        raise ValueError("layers differ in length")
    if (e_prev - e_curr) ** 2 >= cfg.xi1:
        return Stationarity.CONTINUE
    bound = float(len(curr_layer)) if bound is None else bound
    for p1, p2 in zip(prev_layer, curr_layer):
        if shape_distance(p1, p2, bound, cfg.quad_panels) > cfg.xi2:
            return Stationarity.CONTINUE
    return Stationarity.STATIONARY


def train_network(model: StcnModel, data, cfg: LearnerConfig, targets=None,
                  truncate: bool = True) -> tuple[StcnModel, TrainingTrace]:
    """Train iterations ``1, 2, ...`` until stationary or ``cfg.max_iterations``.

    ``model`` supplies the weights and the layer-1 starting parameters. The
    returned model keeps the layers up to the one with the lowest global
    training error (ties go to the earlier layer), or every trained layer
    when ``truncate`` is false.
    """
    a0 = np.asarray(data, dtype=np.float64)
    work = model.with_params(model.params[:1])
    fitted: list[np.ndarray] = []
    errors: list[float] = []
    records: list[LayerRecord] = []
    reason = StopReason.MAX_ITERATIONS
    for t in range(1, cfg.max_iterations + 1):
        params, err, info = train_layer(work, t, a0, cfg, targets=targets)
        arr = np.array([p.as_array() for p in params])
        fitted.append(arr)
        errors.append(err)
        work = work.with_params(np.array(fitted))
        delta = dist = None
        status = Stationarity.CONTINUE
        if t > 1:
            prev = [TransferParams.from_array(r) for r in fitted[-2]]
            delta = (errors[-2] - err) ** 2
            bound = float(model.m)
            dist = max(shape_distance(p1, p2, bound, cfg.quad_panels) for p1, p2 in zip(prev, params))
            status = stationarity_check(prev, params, errors[-2], err, cfg)
        records.append(LayerRecord(t, err, delta, dist, status is Stationarity.STATIONARY,
                                   info["epochs"], info["restarts"]))
        log.debug("layer %d: E=%.6g", t, err)
        if status is Stationarity.STATIONARY:
            reason = StopReason.STATIONARY
            break
    chosen = int(np.argmin(errors)) + 1
    trained = model.with_params(np.array(fitted[:chosen] if truncate else fitted))
    return trained, TrainingTrace(errors, reason, chosen, records)
