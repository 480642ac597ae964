import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from bias_lab import spectral
from bias_lab.errors import DimensionMismatch, NotConjugateSymmetric

finite = st.floats(-1e3, 1e3, allow_nan=False)


def real_vectors(min_size=1, max_size=16):
    return st.integers(min_size, max_size).flatmap(lambda n: arrays(float, n, elements=finite))


def test_dft_delta_is_constant():
    np.testing.assert_allclose(spectral.dft([1.0, 0, 0, 0]), [0.5] * 4, atol=1e-15)


def test_dft_constant_is_scaled_delta():
    np.testing.assert_allclose(spectral.dft([1.0, 1, 1, 1]), [2, 0, 0, 0], atol=1e-15)


def test_dft_ramp_frozen():
    np.testing.assert_allclose(spectral.dft([1.0, 2, 3, 4]), [5, -1 + 1j, -1, -1 - 1j], atol=1e-14)


@pytest.mark.parametrize("D", [1, 2, 3, 5, 8, 16, 31])
def test_dft_matches_numpy_fft(D):
    v = np.random.default_rng(D).standard_normal(D)
    np.testing.assert_allclose(spectral.dft(v), np.fft.fft(v) / np.sqrt(D), atol=1e-13)


def test_dft_acts_on_last_axis():
    X = np.random.default_rng(0).standard_normal((5, 6))
    np.testing.assert_allclose(spectral.dft(X), np.fft.fft(X, axis=-1) / np.sqrt(6), atol=1e-13)


def test_idft_inverts_scaled_delta():
    np.testing.assert_allclose(spectral.idft([2.0, 0, 0, 0]), [1, 1, 1, 1], atol=1e-15)


def test_idft_rejects_asymmetric_input():
    with pytest.raises(NotConjugateSymmetric):
        spectral.idft([0, 1j, 0, 0])


def test_dft_matrix_is_read_only():
    with pytest.raises(ValueError):
        spectral.dft_matrix(4)[0, 0] = 0


@given(real_vectors())
def test_unitarity(v):
    n = np.linalg.norm(v)
    assert abs(np.linalg.norm(spectral.dft(v)) - n) <= 1e-12 * max(n, 1.0)


@given(real_vectors())
def test_round_trip(v):
    np.testing.assert_allclose(spectral.idft(spectral.dft(v)), v, atol=1e-12 * max(1.0, np.abs(v).max()))


@given(real_vectors())
def test_conjugate_symmetry_of_real_input(v):
    assert spectral.conjugate_symmetry_residual(spectral.dft(v)) <= 1e-13 * max(1.0, np.abs(v).sum())


@given(st.integers(1, 16).flatmap(lambda D: st.tuples(
    arrays(float, D, elements=st.floats(-10, 10)), arrays(float, D, elements=st.floats(-10, 10)))))
def test_correlation_theorem(hu):
    h, u = hu
    lhs = spectral.dft(spectral.circ_cross_correlate(h, u))
    rhs = spectral.dft(h) * np.conj(spectral.dft(u))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * max(1.0, np.abs(h).sum() * np.abs(u).sum()))


def test_correlation_with_scaled_delta_is_identity():
    h = np.array([3.0, -1, 4, 1.5])
    u = np.sqrt(4) * np.eye(4)[0]
    np.testing.assert_allclose(spectral.circ_cross_correlate(h, u), h, atol=1e-15)


def test_correlation_with_shifted_delta_shifts_left():
    h = np.array([3.0, -1, 4, 1.5])
    u = np.sqrt(4) * np.eye(4)[1]
    np.testing.assert_allclose(spectral.circ_cross_correlate(h, u), np.roll(h, -1), atol=1e-15)


def test_correlation_frozen_d2():
    out = spectral.circ_cross_correlate([1.0, 2.0], [3.0, 4.0])
    np.testing.assert_allclose(out, [11 / np.sqrt(2), 10 / np.sqrt(2)], atol=1e-15)


def test_correlation_against_loop():
    rng = np.random.default_rng(3)
    D = 7
    h, u = rng.standard_normal(D), rng.standard_normal(D)
    ref = [sum(u[k] * h[(d + k) % D] for k in range(D)) / np.sqrt(D) for d in range(D)]
    np.testing.assert_allclose(spectral.circ_cross_correlate(h, u), ref, atol=1e-14)


def test_correlation_length_mismatch():
    with pytest.raises(DimensionMismatch):
        spectral.circ_cross_correlate([1.0, 2.0], [1.0, 2.0, 3.0])


@given(st.integers(1, 12).flatmap(lambda D: st.tuples(*(arrays(float, D, elements=st.floats(-5, 5)),) * 3)))
def test_correlation_adjoint(hud):
    h, u, delta = hud
    lhs = delta @ spectral.circ_cross_correlate(h, u)
    rhs = spectral.circ_correlate_adjoint(delta, u) @ h
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, np.abs(h).sum() * np.abs(u).sum() * np.abs(delta).sum())


def test_flip_examples():
    np.testing.assert_array_equal(spectral.flip([1, 2, 3]), [3, 2, 1])
    np.testing.assert_array_equal(spectral.flip([1, 2, 1]), [1, 2, 1])


@given(real_vectors())
def test_flip_is_involution(v):
    np.testing.assert_array_equal(spectral.flip(spectral.flip(v)), v)


@pytest.mark.parametrize("tau, expected", [(0.0, 3 + 4j), (5.0, 0.0), (2.5, 1.5 + 2j)])
def test_soft_threshold_examples(tau, expected):
    np.testing.assert_allclose(spectral.complex_soft_threshold([3 + 4j], tau), [expected], atol=1e-15)


def test_soft_threshold_keeps_zero():
    assert spectral.complex_soft_threshold([0j], 1.0)[0] == 0


def test_soft_threshold_rejects_negative_tau():
    with pytest.raises(ValueError):
        spectral.complex_soft_threshold([1j], -1.0)


@given(arrays(complex, 6, elements=st.complex_numbers(max_magnitude=10, allow_nan=False)),
       st.floats(0, 5), arrays(complex, 6, elements=st.complex_numbers(max_magnitude=10, allow_nan=False)))
def test_soft_threshold_is_prox(z, tau, other):
    # the prox minimizes 0.5|x - z|^2 + tau |x|_1
    def objective(x):
        return 0.5 * np.sum(np.abs(x - z) ** 2) + tau * np.sum(np.abs(x))

    x = spectral.complex_soft_threshold(z, tau)
    assert objective(x) <= objective(other) + 1e-9


def test_bridge_penalty():
    assert spectral.bridge_penalty([3 + 4j, 0], 1.0) == pytest.approx(5.0)
    assert spectral.bridge_penalty([4.0, 9.0], 0.5) == pytest.approx(5.0)
