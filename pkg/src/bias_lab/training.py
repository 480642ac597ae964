"""Gradient descent on the exponential loss over any parameterization.

The update is ``u <- u - eta_t * J_P(u)^T grad_w L(P(u))`` with
``L(w) = sum_n exp(-y_n <x_n, w>)``. Step policies:

fixed
    ``eta_t = eta``.
loss_adaptive
    ``eta_t = eta / L(P(u))``. The ratio ``grad_w L / L`` is evaluated as a
    softmax over negative margins so it never under- or overflows.
homogeneous_adaptive
    ``eta_t = eta / (L(P(u)) * ||u||^(depth - 2))``. Keeps the relative
    parameter change per step bounded for depth >= 3, where loss_adaptive
    grows like ``||u||^(depth - 1)`` and overflows in finite time. Same as
    loss_adaptive at depth 2.
predictor_adaptive
    ``eta_t = eta / (L(P(u)) * max(1, ||u||)^(2 depth - 2))``. Moves the
    predictor by O(eta) per step, so ``||w||`` grows linearly and margins
    of support vectors stay balanced in absolute units. Same as
    loss_adaptive at depth 1 once ``||u|| >= 1``.
"""
import csv
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import models
from .errors import Diverged, DimensionMismatch, LossOverflow, NonPositiveMargin

EXPONENT_CLAMP = 700.0
TRACE_COLUMNS = ("t", "loss", "w_norm", "min_margin", "dir_change", "cos_to_reference")


class StepPolicy(str, Enum):
    FIXED = "fixed"
    LOSS_ADAPTIVE = "loss_adaptive"
    HOMOGENEOUS_ADAPTIVE = "homogeneous_adaptive"
    PREDICTOR_ADAPTIVE = "predictor_adaptive"


@dataclass
class TrainConfig:
    step_policy: StepPolicy = StepPolicy.LOSS_ADAPTIVE
    eta: float = 0.01
    init_scale: float = 0.1
    seed: int = 0
    max_iters: int = 100_000
    direction_tol: float = 0.0
    trace_stride: int = 100
    max_norm: float = 1e100

    def __post_init__(self):
        self.step_policy = StepPolicy(self.step_policy)
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.init_scale > 0:
            raise ValueError(f"init_scale must be positive, got {self.init_scale}")
        if self.max_iters < 1 or self.trace_stride < 1:
            raise ValueError("max_iters and trace_stride must be >= 1")

    def to_dict(self):
        d = asdict(self)
        d["step_policy"] = self.step_policy.value
        return d


@dataclass
class TraceRecord:
    t: int
    loss: float
    log_loss: float
    w_norm: float
    param_norm: float
    min_margin: float
    dir_change: float
    direction: np.ndarray
    grad_direction: np.ndarray
    cos_to_reference: float = math.nan


@dataclass
class TrainTrace:
    records: list = field(default_factory=list)
    stop_reason: str = ""
    iterations: int = 0
    loss_increases: int = 0

    @property
    def final(self):
        return self.records[-1]

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def set_reference(self, w_ref):
        ref = np.asarray(w_ref, dtype=float)
        ref = ref / np.linalg.norm(ref)
        for r in self.records:
            r.cos_to_reference = float(r.direction @ ref)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for r in self.records:
                writer.writerow([r.t] + [repr(float(getattr(r, c))) for c in TRACE_COLUMNS[1:]])


def _check_dims(w, data):
    w = np.asarray(w.w if isinstance(w, models.Predictor) else w, dtype=float).ravel()
    if w.shape[0] != data.dim:
        raise DimensionMismatch(f"predictor has length {w.shape[0]}, data has D={data.dim}")
    return w


def margins(w, data):
    """``y_n <x_n, w>`` for every sample."""
    return data.signed @ _check_dims(w, data)


def exp_loss(w, data):
    """``sum_n exp(-y_n <x_n, w>)``; ``inf`` when an exponent exceeds 700."""
    neg = -margins(w, data)
    if neg.max() > EXPONENT_CLAMP:
        return math.inf
    return float(np.sum(np.exp(neg)))


def loss_grad_w(w, data):
    """``grad_w L = -sum_n exp(-y_n <x_n, w>) y_n x_n``."""
    neg = -margins(w, data)
    if neg.max() > EXPONENT_CLAMP:
        raise LossOverflow(f"exponent {neg.max():.1f} exceeds clamp {EXPONENT_CLAMP}")
    return -(data.signed.T @ np.exp(neg))


def normalize_to_unit_margin(w, data):
    """Rescale ``w`` so that its smallest margin is exactly one."""
    w = _check_dims(w, data)
    m = margins(w, data).min()
    if not m > 0:
        raise NonPositiveMargin(f"minimum margin {m:.3e} is not positive")
    return models.Predictor.from_w(w / m)


def _loss_terms(A, w):
    neg = -(A @ w)
    top = neg.max()
    if top > EXPONENT_CLAMP:
        raise LossOverflow(f"exponent {top:.1f} exceeds clamp {EXPONENT_CLAMP}")
    e = np.exp(neg - top)
    s = e.sum()
    return top + math.log(s), e / s


def gd_step(kind, layers, A, policy, eta):
    """One gradient step on bare layer arrays.

    Returns ``(new_layers, log_loss, softmax_weights)`` where the last two
    describe the point *before* the step.
    """
    w = models.raw_predictor(kind, layers)
    log_loss, weights = _loss_terms(A, w)
    # grad_w L / L
    g = -(A.T @ weights)
    if policy is StepPolicy.FIXED:
        scale = eta * math.exp(log_loss)
    elif policy is StepPolicy.LOSS_ADAPTIVE:
        scale = eta
    else:
        L = len(layers)
        nrm = math.sqrt(sum(float(np.sum(u * u)) for u in layers))
        if policy is StepPolicy.HOMOGENEOUS_ADAPTIVE:
            scale = eta / nrm ** (L - 2)
        else:
            scale = eta / max(1.0, nrm) ** (2 * L - 2)
    grads = models.raw_grad(kind, layers, g)
    return [u - scale * v for u, v in zip(layers, grads)], log_loss, weights


def _record(t, kind, layers, A, prev_dir):
    w = models.raw_predictor(kind, layers)
    log_loss, weights = _loss_terms(A, w)
    w_norm = float(np.linalg.norm(w))
    direction = w / w_norm if w_norm > 0 else np.zeros_like(w)
    z = A.T @ weights
    z_norm = np.linalg.norm(z)
    dir_change = math.nan if prev_dir is None else float(np.linalg.norm(direction - prev_dir))
    return TraceRecord(
        t=t,
        loss=math.exp(log_loss),
        log_loss=log_loss,
        w_norm=w_norm,
        param_norm=math.sqrt(sum(float(np.sum(u * u)) for u in layers)),
        min_margin=float((A @ direction).min()),
        dir_change=dir_change,
        direction=direction,
        grad_direction=z / z_norm if z_norm > 0 else z,
    )


def gd_train(arch, data, config, init=None):
    """Run gradient descent and return ``(final NetworkParams, TrainTrace)``.

    Stops after ``max_iters`` steps, when the predictor direction moved
    less than ``direction_tol`` over three consecutive trace strides, or
    when ``||w||`` exceeds ``max_norm``.
    """
    if arch.dim != data.dim:
        raise DimensionMismatch(f"architecture dim {arch.dim} != data dim {data.dim}")
    if init is None:
        init = models.init_params(arch, config.init_scale, np.random.default_rng(config.seed))
    layers = [u.astype(float).copy() for u in init.layers]
    kind, A = arch.kind, data.signed
    policy, eta = config.step_policy, config.eta
    trace = TrainTrace()
    rec = _record(0, kind, layers, A, None)
    trace.records.append(rec)
    recent = deque(maxlen=100)
    quiet = 0
    t = 0
    trace.stop_reason = "max_iters"
    while t < config.max_iters:
        new_layers, log_loss, _ = gd_step(kind, layers, A, policy, eta)
        if not all(np.all(np.isfinite(u)) for u in new_layers):
            raise Diverged(f"non-finite parameters at step {t + 1}")
        layers = new_layers
        t += 1
        if policy is StepPolicy.FIXED:
            # log-loss of the point before this step; compare against 100 steps earlier
            if len(recent) == recent.maxlen and log_loss - recent[0] > math.log(10.0):
                raise Diverged(f"loss grew more than 10x over 100 steps (t={t})")
            if recent and log_loss > recent[-1] + 1e-12 * max(1.0, abs(recent[-1])):
                trace.loss_increases += 1
            recent.append(log_loss)
        if t % config.trace_stride == 0 or t == config.max_iters:
            rec = _record(t, kind, layers, A, trace.records[-1].direction)
            trace.records.append(rec)
            if rec.w_norm > config.max_norm:
                trace.stop_reason = "norm_saturated"
                break
            if config.direction_tol > 0:
                quiet = quiet + 1 if rec.dir_change < config.direction_tol else 0
                if quiet >= 3:
                    trace.stop_reason = "direction_converged"
                    break
    if trace.records[-1].t != t:
        trace.records.append(_record(t, kind, layers, A, trace.records[-1].direction))
    trace.iterations = t
    return models.NetworkParams(arch, layers), trace


def fourier_gd_trajectory(hat_layers, data, eta, steps):
    """Fixed-step gradient descent run directly on complex Fourier-domain
    diagonal parameters; returns the list of iterates (including the start).

    Serves as an independent check of the time-domain convolutional
    dynamics: the DFT of each time-domain iterate must match.
    """
    X_hat = data.X_hat
    y = data.y
    cur = [np.asarray(u, dtype=complex).copy() for u in hat_layers]
    out = [[u.copy() for u in cur]]
    for _ in range(steps):
        w_hat = models.diag_product(cur)
        m = y * np.real(X_hat @ np.conj(w_hat))
        coef = -y * np.exp(-m)
        g_hat = coef @ X_hat
        grads = models.fourier_diag_grad(cur, g_hat)
        cur = [u - eta * g for u, g in zip(cur, grads)]
        out.append([u.copy() for u in cur])
    return out


def time_gd_trajectory(params, data, eta, steps):
    """Fixed-step time-domain iterates (including the start)."""
    kind, A = params.arch.kind, data.signed
    cur = [u.copy() for u in params.layers]
    out = [[u.copy() for u in cur]]
    for _ in range(steps):
        cur, _, _ = gd_step(kind, cur, A, StepPolicy.FIXED, eta)
        out.append([u.copy() for u in cur])
    return out


def unit_direction(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def cosine(a, b):
    return float(unit_direction(a) @ unit_direction(b))

