"""Linear network parameterizations: fully connected, diagonal, convolutional.

Each architecture maps a list of layer arrays ``u = [u_1, ..., u_L]`` to an
equivalent linear predictor ``w = P(u)``. All three maps are homogeneous
polynomials of degree L. The module also provides the Jacobian-transpose
action of ``P`` and the closed-form induced penalty
``R_P(w) = min {||u||^2 : P(u) = w}`` with a factorization attaining it.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import spectral
from .errors import NotConjugateSymmetric, PhaseSymmetryViolation, ShapeMismatch, ZeroPredictor


class Kind(str, Enum):
    FULL = "full"
    DIAG = "diag"
    CONV = "conv"


@dataclass(frozen=True)
class Architecture:
    kind: Kind
    dim: int
    depth: int
    widths: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.depth < 1:
            raise ShapeMismatch(f"depth must be >= 1, got {self.depth}")
        if self.dim < 1:
            raise ShapeMismatch(f"dim must be >= 1, got {self.dim}")
        if self.kind is Kind.FULL:
            widths = tuple(self.widths) or (self.dim,) * self.depth + (1,)
            if len(widths) != self.depth + 1 or widths[0] != self.dim or widths[-1] != 1:
                raise ShapeMismatch(
                    f"widths must be (D, D_1, ..., D_(L-1), 1) with D={self.dim}, got {widths}")
            if min(widths) < 1:
                raise ShapeMismatch(f"widths must be positive, got {widths}")
            object.__setattr__(self, "widths", tuple(int(v) for v in widths))
        elif self.widths:
            raise ShapeMismatch("widths only apply to fully connected networks")

    @classmethod
    def full(cls, dim, depth, widths=None):
        return cls(Kind.FULL, dim, depth, tuple(widths or ()))

    @classmethod
    def diag(cls, dim, depth):
        return cls(Kind.DIAG, dim, depth)

    @classmethod
    def conv(cls, dim, depth):
        return cls(Kind.CONV, dim, depth)

    def layer_shapes(self):
        if self.kind is Kind.FULL:
            return [(self.widths[l], self.widths[l + 1]) for l in range(self.depth)]
        return [(self.dim,)] * self.depth

    def to_dict(self):
        d = {"kind": self.kind.value, "dim": self.dim, "depth": self.depth}
        if self.kind is Kind.FULL:
            d["widths"] = list(self.widths)
        return d


@dataclass
class NetworkParams:
    arch: Architecture
    layers: list = field(default_factory=list)

    def __post_init__(self):
        self.layers = [np.asarray(u) for u in self.layers]
        shapes = self.arch.layer_shapes()
        if len(self.layers) != len(shapes):
            raise ShapeMismatch(f"expected {len(shapes)} layers, got {len(self.layers)}")
        for l, (u, s) in enumerate(zip(self.layers, shapes)):
            if u.shape != s:
                raise ShapeMismatch(f"layer {l + 1}: expected shape {s}, got {u.shape}")
            if not np.all(np.isfinite(u)):
                raise ValueError(f"layer {l + 1} has non-finite entries")

    @property
    def is_complex(self):
        return any(np.iscomplexobj(u) for u in self.layers)

    def flat(self):
        return np.concatenate([u.ravel() for u in self.layers])

    @classmethod
    def from_flat(cls, arch, vec):
        layers, i = [], 0
        for s in arch.layer_shapes():
            n = int(np.prod(s))
            layers.append(np.asarray(vec[i:i + n]).reshape(s))
            i += n
        return cls(arch, layers)

    def norm_sq(self):
        return float(sum(np.sum(np.abs(u) ** 2) for u in self.layers))

    def scaled(self, alpha):
        return NetworkParams(self.arch, [alpha * u for u in self.layers])

    def copy(self):
        return NetworkParams(self.arch, [u.copy() for u in self.layers])


@dataclass(frozen=True)
class Predictor:
    w: np.ndarray
    w_hat: np.ndarray

    @classmethod
    def from_w(cls, w):
        w = np.asarray(w, dtype=float).ravel()
        return cls(w, spectral.dft(w))

    @property
    def norm(self):
        return float(np.linalg.norm(self.w))


def _check_kind(params, kind):
    if params.arch.kind is not kind:
        raise ShapeMismatch(f"expected {kind.value} parameters, got {params.arch.kind.value}")


def diag_product(layers):
    """Elementwise product of all layers (real or complex)."""
    out = np.ones_like(layers[0])
    for u in layers:
        out = out * u
    return out


def _conv_map(layers):
    t = layers[-1][::-1]
    for u in reversed(layers[:-1]):
        t = spectral.circ_cross_correlate(t, u)
    return t[::-1].copy()


def _full_map(layers):
    w = layers[0]
    for u in layers[1:]:
        w = w @ u
    return w.ravel()


def raw_predictor(kind, layers):
    """``P(u)`` as a bare array, without validation."""
    if kind is Kind.FULL:
        return _full_map(layers)
    if kind is Kind.DIAG:
        return diag_product(layers)
    return _conv_map(layers)


def predictor_full(params):
    _check_kind(params, Kind.FULL)
    return Predictor.from_w(_full_map(params.layers))


def predictor_diag(params):
    _check_kind(params, Kind.DIAG)
    if params.is_complex:
        raise ShapeMismatch("complex diagonal parameters have no real predictor; use diag_product")
    return Predictor.from_w(diag_product(params.layers))


def predictor_conv(params):
    """``P_conv(u) = flip((..(flip(u_L) * u_(L-1)) * ..) * u_1)``."""
    _check_kind(params, Kind.CONV)
    return Predictor.from_w(_conv_map(params.layers))


def predictor(params):
    return {Kind.FULL: predictor_full, Kind.DIAG: predictor_diag,
            Kind.CONV: predictor_conv}[params.arch.kind](params)


def conv_forward(params, x):
    """Layered forward pass ``<(((x * u_1) * u_2) ..) * u_(L-1), u_L>``.

    ``x`` may be a stack of inputs, one per row.
    """
    _check_kind(params, Kind.CONV)
    h = np.asarray(x, dtype=float)
    for u in params.layers[:-1]:
        h = spectral.circ_cross_correlate(h, u)
    return h @ params.layers[-1]


def fourier_factorization(params):
    """Fourier images of the convolution filters as complex diagonal parameters."""
    _check_kind(params, Kind.CONV)
    arch = Architecture.diag(params.arch.dim, params.arch.depth)
    return NetworkParams(arch, [spectral.dft(u) for u in params.layers])


def raw_grad(kind, layers, g):
    """Jacobian-transpose action on bare layer arrays."""
    L = len(layers)
    if kind is Kind.FULL:
        # left[l + 1] = (u_1 .. u_l)^T g ; right[l] = u_(l+2) .. u_L 1 (0-based l)
        left = [None, g]
        for u in layers[:-1]:
            left.append(left[-1] @ u)
        right = [np.ones(1)]
        for u in reversed(layers[1:]):
            right.append(u @ right[-1])
        right.reverse()
        return [np.outer(left[l + 1], right[l]) for l in range(L)]
    if kind is Kind.DIAG:
        if L == 1:
            return [g.copy()]
        # prefix/suffix products avoid the O(L^2) loop
        pre = [np.ones_like(layers[0])]
        for u in layers[:-1]:
            pre.append(pre[-1] * u)
        suf = [np.ones_like(layers[0])]
        for u in reversed(layers[1:]):
            suf.append(suf[-1] * u)
        suf.reverse()
        return [g * pre[l] * suf[l] for l in range(L)]
    hs = [g]
    for u in layers[:-1]:
        hs.append(spectral.circ_cross_correlate(hs[-1], u))
    grads = [None] * L
    grads[-1] = hs[-1].copy()
    delta = layers[-1]
    for l in range(L - 2, -1, -1):
        grads[l] = spectral.circ_cross_correlate(hs[l], delta)
        delta = spectral.circ_correlate_adjoint(delta, layers[l])
    return grads


def grad_params(params, w_grad):
    """Jacobian-transpose action ``grad_u <w_grad, P(u)>``.

    With ``w_grad = grad_w L(P(u))`` this is the parameter gradient used by
    gradient descent. Returns NetworkParams with the same shapes.
    """
    g = np.asarray(w_grad, dtype=float).ravel()
    arch = params.arch
    if g.shape != (arch.dim,):
        raise ShapeMismatch(f"w_grad must have length {arch.dim}, got {g.shape}")
    return NetworkParams(arch, raw_grad(arch.kind, params.layers, g))


def fourier_diag_grad(hat_layers, w_hat_grad):
    """Gradient of the Fourier-domain diagonal loss w.r.t. each complex layer.

    For layer l this is ``w_hat_grad * conj(prod_{k != l} hat_layers[k])``;
    the inverse DFT of it equals the time-domain convolutional gradient.
    """
    out = []
    for l in range(len(hat_layers)):
        others = [u for k, u in enumerate(hat_layers) if k != l]
        prod = diag_product(others) if others else np.ones_like(hat_layers[0])
        out.append(w_hat_grad * np.conj(prod))
    return out


def homogeneity_degree(arch):
    return arch.depth


def init_params(arch, init_scale, rng):
    """i.i.d. Gaussian layers with std ``init_scale / sqrt(fan_in)``."""
    layers = [rng.standard_normal(s) * init_scale / np.sqrt(s[0]) for s in arch.layer_shapes()]
    return NetworkParams(arch, layers)


def _as_predictor(w):
    return w if isinstance(w, Predictor) else Predictor.from_w(w)


NEGLIGIBLE = 1e-14


def _clean_magnitudes(z):
    """``|z|`` with round-off-sized entries (relative to the largest) set to 0."""
    mag = np.abs(z)
    mag[mag < NEGLIGIBLE * mag.max()] = 0.0
    return mag


def rp_closed_form(arch, w):
    """Induced penalty ``min {||u||^2 : P(u) = w}`` in closed form.

    full: ``L ||w||_2^(2/L)``; diag: ``L sum |w|^(2/L)``;
    conv: ``L sum |w_hat|^(2/L)``. Coefficients below ``1e-14`` times the
    largest one are round-off and count as zero.
    """
    w = _as_predictor(w)
    if w.norm == 0.0:
        raise ZeroPredictor("induced penalty needs a nonzero predictor")
    L = arch.depth
    if arch.kind is Kind.FULL:
        return L * w.norm ** (2.0 / L)
    coef = w.w if arch.kind is Kind.DIAG else w.w_hat
    return L * float(np.sum(_clean_magnitudes(coef) ** (2.0 / L)))


def balanced_factorization(arch, w):
    """Parameters ``u`` with ``P(u) = w`` and ``||u||^2 = rp_closed_form(arch, w)``."""
    w = _as_predictor(w)
    nrm = w.norm
    if nrm == 0.0:
        raise ZeroPredictor("cannot factorize the zero predictor")
    L = arch.depth
    if arch.kind is Kind.FULL:
        s = nrm ** (1.0 / L)
        widths = arch.widths
        basis = [np.eye(1, widths[l], 0).ravel() for l in range(L + 1)]
        basis[0] = w.w / nrm
        layers = [s * np.outer(basis[l], basis[l + 1]) for l in range(L)]
        return NetworkParams(arch, layers)
    if arch.kind is Kind.DIAG:
        mag = _clean_magnitudes(w.w) ** (1.0 / L)
        layers = [np.sign(w.w) * mag] + [mag.copy() for _ in range(L - 1)]
        return NetworkParams(arch, layers)
    D = arch.dim
    clean = _clean_magnitudes(w.w_hat)
    mag = clean ** (1.0 / L)
    phase = np.zeros(D, dtype=complex)
    nz = clean > 0
    phase[nz] = w.w_hat[nz] / np.abs(w.w_hat[nz])
    # enforce exact conjugate symmetry so every layer maps back to a real filter
    partner = spectral.conjugate_partner(D)
    phase = 0.5 * (phase + np.conj(phase[partner]))
    mag = 0.5 * (mag + mag[partner])
    unit = np.abs(phase) > 0
    phase[unit] /= np.abs(phase[unit])
    hats = [phase * mag] + [mag.astype(complex) for _ in range(L - 1)]
    try:
        layers = [spectral.idft(h) for h in hats]
    except NotConjugateSymmetric as exc:
        raise PhaseSymmetryViolation(str(exc)) from exc
    return NetworkParams(arch, layers)


def gauge_perturb(params, rng, spread=1.0):
    """A different factorization of the same predictor.

    Moves along the multiplicative symmetry of ``P``: for fully connected
    nets inserts ``M, M^-1`` between adjacent layers; for diagonal nets
    rescales a coordinate in one layer and inversely in another; for
    convolutional nets does the same in the Fourier domain with a
    conjugate-symmetric multiplier.
    """
    arch = params.arch
    L = arch.depth
    layers = [u.copy() for u in params.layers]
    if L == 1:
        return NetworkParams(arch, layers)
    l = int(rng.integers(0, L - 1))
    if arch.kind is Kind.FULL:
        k = arch.widths[l + 1]
        M = np.eye(k) + spread * rng.standard_normal((k, k)) / np.sqrt(k)
        while abs(np.linalg.det(M)) < 1e-3:
            M = np.eye(k) + spread * rng.standard_normal((k, k)) / np.sqrt(k)
        layers[l] = layers[l] @ M
        layers[l + 1] = np.linalg.solve(M, layers[l + 1])
        return NetworkParams(arch, layers)
    m = int(rng.integers(l + 1, L))
    c = np.exp(spread * rng.standard_normal(arch.dim))
    if arch.kind is Kind.DIAG:
        layers[l] = layers[l] * c
        layers[m] = layers[m] / c
        return NetworkParams(arch, layers)
    partner = spectral.conjugate_partner(arch.dim)
    theta = spread * rng.standard_normal(arch.dim)
    theta = 0.5 * (theta - theta[partner])
    mult = 0.5 * (c + c[partner]) * np.exp(1j * theta)
    layers[l] = spectral.idft(spectral.dft(layers[l]) * mult)
    layers[m] = spectral.idft(spectral.dft(layers[m]) / mult)
    return NetworkParams(arch, layers)
