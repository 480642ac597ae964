"""Unitary DFT, circular cross-correlation and complex helpers.

Conventions: ``dft(v)[d] = D**-0.5 * sum_p v[p] * exp(-2j*pi*p*d/D)`` and
``(h * u)[d] = D**-0.5 * sum_k u[k] * h[(d + k) % D]``. Both functions
act on the last axis so a stack of samples can be transformed in one call.
"""
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, NotConjugateSymmetric

IMAG_TOL = 1e-9


@lru_cache(maxsize=64)
def dft_matrix(D):
    """Unitary Fourier matrix with entries ``exp(-2j*pi*d*p/D) / sqrt(D)``.

    The exponent is reduced mod D before evaluation so every entry is one
    of the D exact roots of unity.
    """
    if D < 1:
        raise DimensionMismatch(f"D must be >= 1, got {D}")
    k = np.arange(D)
    phase = np.outer(k, k) % D
    F = np.exp(-2j * np.pi * phase / D) / np.sqrt(D)
    F.setflags(write=False)
    return F


@lru_cache(maxsize=64)
def _shift_index(D):
    idx = (np.arange(D)[:, None] + np.arange(D)[None, :]) % D
    idx.setflags(write=False)
    return idx


def dft(v):
    v = np.asarray(v)
    return v @ dft_matrix(v.shape[-1])


def idft_complex(z):
    """Inverse transform without the realness check."""
    z = np.asarray(z, dtype=complex)
    return z @ dft_matrix(z.shape[-1]).conj()


def idft(z, imag_tol=IMAG_TOL):
    """Inverse unitary DFT of a conjugate-symmetric vector, returned real.

    Raises NotConjugateSymmetric when the imaginary part of the result
    exceeds ``imag_tol * ||z||``.
    """
    v = idft_complex(z)
    scale = np.linalg.norm(np.asarray(z), axis=-1)
    bad = np.linalg.norm(v.imag, axis=-1) > imag_tol * np.maximum(scale, np.finfo(float).tiny)
    if np.any(bad):
        raise NotConjugateSymmetric(
            f"imaginary residual {np.max(np.linalg.norm(v.imag, axis=-1)):.3e} exceeds tolerance")
    return v.real


def conjugate_partner(D):
    """Index map d -> (D - d) mod D."""
    return (-np.arange(D)) % D


def conjugate_symmetry_residual(z):
    z = np.asarray(z, dtype=complex)
    return float(np.max(np.abs(z - np.conj(z[..., conjugate_partner(z.shape[-1])]))))


def circ_cross_correlate(h, u):
    """``(h * u)[d] = D**-0.5 * sum_k u[k] h[(d+k) mod D]``.

    ``h`` may be a stack of vectors (last axis of length D); ``u`` is a single
    filter.
    """
    h = np.asarray(h)
    u = np.asarray(u)
    D = u.shape[-1]
    if h.shape[-1] != D or u.ndim != 1:
        raise DimensionMismatch(f"length mismatch: h {h.shape}, u {u.shape}")
    return h[..., _shift_index(D)] @ u / np.sqrt(D)


def circ_correlate_adjoint(delta, u):
    """Adjoint of ``h -> h * u``: returns ``g`` with ``<g, h> = <delta, h * u>``.

    Equals ``D**-0.5 * sum_d delta[d] u[(j - d) mod D]``, a circular
    convolution of ``delta`` with ``u``.
    """
    delta = np.asarray(delta)
    u = np.asarray(u)
    D = u.shape[-1]
    if delta.shape[-1] != D:
        raise DimensionMismatch(f"length mismatch: delta {delta.shape}, u {u.shape}")
    # conv[j] = sum_d delta[d] u[j-d]; index (j - d) % D
    idx = (np.arange(D)[:, None] - np.arange(D)[None, :]) % D
    return delta @ u[idx].T / np.sqrt(D)


def flip(u):
    """``flip(u)[k] = u[D - k - 1]``."""
    return np.asarray(u)[..., ::-1].copy()


def complex_soft_threshold(z, tau):
    """Proximal map of ``tau * sum_d |z[d]|`` on complex vectors."""
    if tau < 0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    z = np.asarray(z, dtype=complex)
    mag = np.abs(z)
    shrink = np.zeros_like(mag)
    nz = mag > 0
    shrink[nz] = np.maximum(1.0 - tau / mag[nz], 0.0)
    return z * shrink


def bridge_penalty(z, p):
    """``sum_d |z[d]|**p`` (the p-th power of the bridge quasi-norm)."""
    return float(np.sum(np.abs(np.asarray(z)) ** p))
