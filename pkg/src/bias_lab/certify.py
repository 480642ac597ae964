"""Reference solvers and stationarity certificates.

* ``l2_max_margin``: hard-margin SVM without bias, by dual coordinate ascent.
* ``l1_fourier_max_margin``: min ``||dft(w)||_1`` s.t. unit margins, by ADMM.
* ``kkt_residual_bridge``: first-order certificate for
  min ``||dft(w)||_p`` s.t. unit margins, ``0 < p <= 1``.
* ``param_stationarity_residual``: ``u`` parallel to ``J_P(u)^T z``.
* ``rp_numeric_oracle``: ``min ||u||^2 s.t. P(u) = w`` by constrained
  numerical minimization, independent of the closed forms.
"""
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize

from . import models, spectral, training
from .errors import (
    DidNotConverge,
    EmptySupport,
    NonPositiveMargin,
    NonUnitMargin,
    ZeroJacobianAction,
    ZeroPredictor,
)


class Status(str, Enum):
    OPTIMAL = "optimal"
    MAX_ITERS = "max_iters"
    INFEASIBLE = "infeasible"


@dataclass
class SolverReport:
    solution: models.Predictor
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    status: Status
    alphas: np.ndarray = None
    gap: float = math.nan

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL

    def to_dict(self):
        return {
            "status": self.status.value,
            "objective": self.objective,
            "iterations": self.iterations,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "gap": self.gap,
            "w": self.solution.w.tolist(),
            "alphas": None if self.alphas is None else self.alphas.tolist(),
        }


# --------------------------------------------------------------------------
# l2 hard margin
# --------------------------------------------------------------------------

def _l2_kkt(A, alpha):
    w = A.T @ alpha
    m = A @ w
    primal = float(max(0.0, np.max(1.0 - m)))
    slack = float(np.max(alpha * np.abs(m - 1.0)))
    return w, m, primal, slack


def _polish_l2(A, alpha, tol):
    """Re-solve the dual on the current support exactly; None if it fails."""
    S = np.flatnonzero(alpha > 0)
    if S.size == 0:
        return None
    Q = A[S] @ A[S].T
    a_S, *_ = np.linalg.lstsq(Q, np.ones(S.size), rcond=None)
    if np.any(a_S < 0):
        return None
    cand = np.zeros_like(alpha)
    cand[S] = a_S
    _, _, primal, slack = _l2_kkt(A, cand)
    if primal <= tol and slack <= tol:
        return cand
    return None


def l2_max_margin(data, tol=1e-8, max_sweeps=100_000, infeasible_tol=1e-9):
    """``argmin ||w||^2  s.t.  y_n <x_n, w> >= 1`` (no bias term).

    Hildreth-style coordinate ascent on the dual
    ``max sum(a) - 0.5 ||sum a_n y_n x_n||^2, a >= 0``. Every iterate gives
    the margin bound ``||A^T a|| / sum(a)``; when it falls below
    ``infeasible_tol * max ||x_n||`` the data cannot be separated.
    """
    A = data.signed
    N = A.shape[0]
    diag = np.einsum("ij,ij->i", A, A)
    scale = math.sqrt(diag.max()) if diag.max() > 0 else 1.0
    alpha = np.zeros(N)
    v = np.zeros(A.shape[1])
    live = diag > 0
    status = Status.MAX_ITERS
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for i in np.flatnonzero(live):
            new = max(0.0, alpha[i] + (1.0 - A[i] @ v) / diag[i])
            if new != alpha[i]:
                v += (new - alpha[i]) * A[i]
                alpha[i] = new
        total = alpha.sum()
        if total > 0 and np.linalg.norm(v) / total < infeasible_tol * scale:
            status = Status.INFEASIBLE
            break
        _, _, primal, slack = _l2_kkt(A, alpha)
        if primal <= tol and slack <= tol:
            status = Status.OPTIMAL
            break
        if primal <= 1e-3 and sweeps % 10 == 0:
            polished = _polish_l2(A, alpha, tol)
            if polished is not None:
                alpha = polished
                status = Status.OPTIMAL
                break
    if not np.all(live) and status is not Status.INFEASIBLE:
        # a zero feature vector can never reach margin one
        status = Status.INFEASIBLE
    w, m, primal, slack = _l2_kkt(A, alpha)
    if status is Status.MAX_ITERS and np.min(m) <= 0:
        status = Status.INFEASIBLE
    return SolverReport(
        solution=models.Predictor.from_w(w),
        objective=float(w @ w),
        iterations=sweeps,
        primal_residual=primal,
        dual_residual=float(np.linalg.norm(w - A.T @ alpha)),
        status=status,
        alphas=alpha,
        gap=slack,
    )


def l2_margin(data, **kw):
    """Geometric margin ``1 / ||w*||`` of the hard-margin solution, or -1."""
    rep = l2_max_margin(data, **kw)
    if not rep.optimal:
        return -1.0
    return 1.0 / rep.solution.norm


# --------------------------------------------------------------------------
# l1 in Fourier domain
# --------------------------------------------------------------------------

ADAPT_WINDOW = 2000


def l1_fourier_max_margin(data, tol=1e-8, rho=1.0, max_iters=100_000, adapt_rho=True):
    """``argmin ||dft(w)||_1  s.t.  y_n <x_n, w> >= 1`` by ADMM.

    Splits ``w`` against ``zh = dft(w)`` and slacks ``s = A w - 1 >= 0``.
    Because the DFT is unitary the w-update is the real linear system
    ``(I + A^T A) w = Re idft(zh - u1) + A^T (s + 1 - u2)``, factorized
    once per penalty value. The zh-update is a complex soft threshold and the
    s-update a clip at zero. Stops when both residuals fall below
    ``tol * max(1, ||w||)``; the answer is then rescaled onto the feasible
    set (``min margin >= 1``).
    """
    A = data.signed
    N, D = A.shape
    sep = l2_max_margin(data)
    if sep.status is Status.INFEASIBLE:
        return SolverReport(models.Predictor.from_w(np.zeros(D)), math.inf, 0, math.inf,
                            math.inf, Status.INFEASIBLE)
    K = np.eye(D) + A.T @ A
    chol = cho_factor(K)
    w = sep.solution.w.copy()
    zh = spectral.dft(w)
    s = np.maximum(A @ w - 1.0, 0.0)
    u1 = np.zeros(D, dtype=complex)
    u2 = np.zeros(N)
    status = Status.MAX_ITERS
    r_norm = d_norm = math.inf
    it = 0
    for it in range(1, max_iters + 1):
        rhs = spectral.idft_complex(zh - u1).real + A.T @ (s + 1.0 - u2)
        w = cho_solve(chol, rhs)
        wh = spectral.dft(w)
        Aw = A @ w
        zh_old, s_old = zh, s
        zh = spectral.complex_soft_threshold(wh + u1, 1.0 / rho)
        s = np.maximum(Aw - 1.0 + u2, 0.0)
        r1 = wh - zh
        r2 = Aw - s - 1.0
        u1 = u1 + r1
        u2 = u2 + r2
        r_norm = math.sqrt(float(np.sum(np.abs(r1) ** 2) + r2 @ r2))
        # dual residual: rho * B^T (z - z_old) mapped back to w-space
        dz = spectral.idft_complex(zh - zh_old).real + A.T @ (s - s_old)
        d_norm = rho * float(np.linalg.norm(dz))
        thresh = tol * max(1.0, float(np.linalg.norm(w)))
        if r_norm < thresh and d_norm < thresh:
            status = Status.OPTIMAL
            break
        # adapting only early keeps the late iterations a fixed-rho ADMM, which converges
        if adapt_rho and it % 50 == 0 and it <= ADAPT_WINDOW:
            if r_norm > 10 * d_norm:
                rho *= 2.0
                u1, u2 = u1 / 2.0, u2 / 2.0
            elif d_norm > 10 * r_norm:
                rho /= 2.0
                u1, u2 = u1 * 2.0, u2 * 2.0
    m_min = float(np.min(A @ w))
    if m_min > 0:
        # the optimum sits exactly on min margin one
        w = w / m_min
    sol = models.Predictor.from_w(w)
    return SolverReport(
        solution=sol,
        objective=float(np.sum(np.abs(sol.w_hat))),
        iterations=it,
        primal_residual=r_norm,
        dual_residual=d_norm,
        status=status,
        # scaled dual of the margin constraints; multipliers are rho * u2 up to sign
        alphas=np.maximum(-rho * u2, 0.0),
        gap=float(max(0.0, 1.0 - np.min(A @ w))),
    )


# --------------------------------------------------------------------------
# NNLS
# --------------------------------------------------------------------------

def nnls(M, b, tol=1e-12, max_iters=None):
    """``argmin_{a >= 0} ||M a - b||`` by Lawson-Hanson active sets.

    Returns ``(a, residual_norm)``. Built in-house because scipy 1.15's
    ``nnls`` returns non-optimal points on underdetermined systems.
    """
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float)
    k = M.shape[1]
    x = np.zeros(k)
    if not np.any(M):
        return x, float(np.linalg.norm(b))
    P = np.zeros(k, dtype=bool)
    thresh = tol * max(1.0, float(np.linalg.norm(M.T @ b)))
    max_iters = max_iters or 30 * k + 10
    for _ in range(max_iters):
        grad = M.T @ (b - M @ x)
        grad[P] = -np.inf
        j = int(np.argmax(grad))
        if P.all() or grad[j] <= thresh:
            break
        P[j] = True
        while True:
            z = np.zeros(k)
            z[P], *_ = np.linalg.lstsq(M[:, P], b, rcond=None)
            if np.all(z[P] > 0):
                x = z
                break
            blocked = P & (z <= 0)
            gap = x[blocked] - z[blocked]
            step = np.min(np.divide(x[blocked], gap, out=np.zeros_like(gap), where=gap > 0))
            x = x + step * (z - x)
            P &= x > 1e-15 * max(1.0, float(x.max()))
            x[~P] = 0.0
    return x, float(np.linalg.norm(M @ x - b))


# --------------------------------------------------------------------------
# support sets and KKT certificates
# --------------------------------------------------------------------------

def support_set(w, data, margin_tol=1e-3, unit_tol=1e-9):
    """Indices with ``y_n <x_n, w> <= 1 + margin_tol`` for a unit-margin ``w``."""
    m = training.margins(w, data)
    if abs(m.min() - 1.0) > unit_tol:
        raise NonUnitMargin(f"minimum margin is {m.min():.12g}, expected 1")
    return np.flatnonzero(m <= 1.0 + margin_tol)


@dataclass
class KktCertificate:
    support_indices: list
    alphas: list
    equality_residual: float
    inequality_violation: float
    scale: float
    p: float = 1.0
    n_nonzero: int = 0
    config: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def bridge_subgradient(w_hat, p, zero_tol=1e-6):
    """Target ``p e^{i phi} |w_hat|^(p-1)`` on coordinates above
    ``zero_tol * max |w_hat|``; returns ``(target, nonzero_mask)``."""
    w_hat = np.asarray(w_hat, dtype=complex)
    mag = np.abs(w_hat)
    if mag.max() == 0:
        raise ZeroPredictor("predictor has no nonzero Fourier coefficient")
    nz = mag > zero_tol * mag.max()
    target = np.zeros_like(w_hat)
    target[nz] = p * (w_hat[nz] / mag[nz]) * mag[nz] ** (p - 1.0)
    return target, nz


def kkt_residual_bridge(w, data, p, margin_tol=1e-3, zero_tol=1e-6, domain="fourier"):
    """First-order certificate for ``min ||dft(w)||_p  s.t.  margins >= 1``.

    Fits nonnegative multipliers on the support set so that
    ``sum_n a_n y_n dft(x_n)`` matches the subgradient target on nonzero
    Fourier coordinates. ``equality_residual`` is relative to the target's
    norm. For ``p == 1`` the fitted combination must also stay inside the
    unit disc on the zero coordinates; the excess is ``inequality_violation``.
    ``domain="time"`` certifies the same problem for ``||w||_p`` itself.
    """
    w = w if isinstance(w, models.Predictor) else models.Predictor.from_w(w)
    S = support_set(w, data, margin_tol)
    if S.size == 0:
        raise EmptySupport("no sample attains the minimum margin")
    if domain == "fourier":
        coef, feats = w.w_hat, data.X_hat
    elif domain == "time":
        coef, feats = w.w.astype(complex), data.X.astype(complex)
    else:
        raise ValueError(f"domain must be 'fourier' or 'time', got {domain!r}")
    target, nz = bridge_subgradient(coef, p, zero_tol)
    basis = (data.y[S, None] * feats[S]).T  # D x |S|, complex
    M = np.vstack([basis[nz].real, basis[nz].imag])
    b = np.concatenate([target[nz].real, target[nz].imag])
    alpha, res = nnls(M, b)
    eq = res / np.linalg.norm(b)
    ineq = 0.0
    if p >= 1.0 and (~nz).any():
        combo = basis[~nz] @ alpha
        ineq = float(max(0.0, np.max(np.abs(combo)) - 1.0))
    total = alpha.sum()
    return KktCertificate(
        support_indices=[int(i) for i in S],
        alphas=[float(a) for a in alpha],
        equality_residual=float(eq),
        inequality_violation=ineq,
        scale=float(1.0 / total) if total > 0 else math.inf,
        p=float(p),
        n_nonzero=int(nz.sum()),
        config={"margin_tol": margin_tol, "zero_tol": zero_tol, "domain": domain},
    )


def gradient_support_residual(direction, grad_direction, data, margin_tol=1e-2):
    """Distance from the unit gradient direction to the cone of current
    support vectors ``{y_n x_n : n in S}``, via NNLS."""
    w = training.normalize_to_unit_margin(direction, data)
    S = support_set(w, data, margin_tol)
    if S.size == 0:
        raise EmptySupport("no support vectors")
    M = data.signed[S].T
    z = np.asarray(grad_direction, dtype=float)
    _, res = nnls(M, z / np.linalg.norm(z))
    return res


def param_stationarity_residual(params, data):
    """``|| u/||u|| - v/||v|| ||`` with ``v = J_P(u)^T z`` and ``z`` the unit
    negative loss gradient at ``P(u)``; orientation chosen to minimize it."""
    w = models.predictor(params).w
    m = training.margins(w, data)
    if not m.min() > 0:
        raise NonPositiveMargin(f"minimum margin {m.min():.3e} is not positive")
    u = params.flat()
    u_hat = u / np.linalg.norm(u)
    unit = models.NetworkParams.from_flat(params.arch, u_hat)
    # softmax weights: direction of -grad_w L without overflow
    neg = -m
    e = np.exp(neg - neg.max())
    z = data.signed.T @ e
    z /= np.linalg.norm(z)
    v = models.grad_params(unit, z).flat()
    nv = np.linalg.norm(v)
    if nv < 1e-14:
        raise ZeroJacobianAction("J_P(u)^T z vanished")
    v /= nv
    return float(min(np.linalg.norm(u_hat - v), np.linalg.norm(u_hat + v)))


# --------------------------------------------------------------------------
# numeric induced penalty
# --------------------------------------------------------------------------

def rp_numeric_oracle(arch, w, restarts=4, seed=0, feas_tol=1e-6, max_iters=2000):
    """``min ||u||^2 s.t. P(u) = w`` by sequential quadratic programming.

    Uses only the forward map and its Jacobian, never the closed forms.
    Restarts from random points scaled like a balanced factorization and
    returns the smallest ``||u||^2`` among runs whose constraint violation is
    at most ``feas_tol``.
    """
    w = w.w if isinstance(w, models.Predictor) else np.asarray(w, dtype=float)
    nrm = float(np.linalg.norm(w))
    if nrm == 0:
        raise ZeroPredictor("induced penalty needs a nonzero predictor")
    rng = np.random.default_rng(seed)
    kind = arch.kind
    shapes = arch.layer_shapes()
    sizes = [int(np.prod(s)) for s in shapes]
    cuts = np.cumsum(sizes)[:-1]
    basis = np.eye(w.size)

    def unpack(x):
        return [c.reshape(s) for c, s in zip(np.split(x, cuts), shapes)]

    def residual(x):
        return models.raw_predictor(kind, unpack(x)) - w

    def jacobian(x):
        layers = unpack(x)
        rows = [models.raw_grad(kind, layers, e) for e in basis]
        return np.array([np.concatenate([g.ravel() for g in r]) for r in rows])

    best = math.inf
    for _ in range(restarts):
        x = rng.standard_normal(sum(sizes))
        x *= math.sqrt(arch.depth) * nrm ** (1.0 / arch.depth) / np.linalg.norm(x)
        res = minimize(lambda x: (x @ x, 2 * x), x, jac=True, method="SLSQP",
                       constraints=[{"type": "eq", "fun": residual, "jac": jacobian}],
                       options={"maxiter": max_iters, "ftol": 1e-14})
        if np.linalg.norm(residual(res.x)) <= feas_tol:
            best = min(best, float(res.x @ res.x))
    if not math.isfinite(best):
        raise DidNotConverge("no restart reached the feasibility tolerance")
    return best
