import json
import math

import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bias_lab import certify, models, spectral, training
from bias_lab.certify import Status
from bias_lab.dataset import Dataset
from bias_lab.errors import NonPositiveMargin, NonUnitMargin
from bias_lab.models import Architecture, NetworkParams

from conftest import random_separable


def cvx_l2(data):
    w = cp.Variable(data.dim)
    cp.Problem(cp.Minimize(cp.sum_squares(w)), [data.signed @ w >= 1]).solve(solver="CLARABEL")
    return w.value


def cvx_l1_fourier(data):
    F = spectral.dft_matrix(data.dim)
    w = cp.Variable(data.dim)
    prob = cp.Problem(cp.Minimize(cp.sum(cp.abs(F @ w))), [data.signed @ w >= 1])
    prob.solve(solver="CLARABEL")
    return w.value, prob.value


# ---- l2 -----------------------------------------------------------------

def test_l2_symmetric_pair():
    rep = certify.l2_max_margin(Dataset([[1.0], [-1.0]], [1, -1]))
    assert rep.optimal
    np.testing.assert_allclose(rep.solution.w, [1.0], atol=1e-12)
    assert rep.objective == pytest.approx(1.0)


def test_l2_inactive_third_constraint():
    d = Dataset([[1.0, 0], [-1.0, 0], [3.0, 0.0]], [1, -1, 1])
    rep = certify.l2_max_margin(d)
    np.testing.assert_allclose(rep.solution.w, [1.0, 0.0], atol=1e-10)
    assert rep.alphas[2] == 0


@pytest.mark.parametrize("X, y", [
    ([[1.0, 1], [-1, -1], [1, -1], [-1, 1]], [1, 1, -1, -1]),
    ([[1.0], [1.0]], [1, -1]),
    ([[0.0, 0.0]], [1]),
])
def test_l2_detects_non_separable(X, y):
    d = Dataset(X, y)
    assert certify.l2_max_margin(d).status is Status.INFEASIBLE
    assert certify.l2_margin(d) <= 0


@pytest.mark.parametrize("seed", range(10))
def test_l2_matches_conic_solver(seed):
    rng = np.random.default_rng(seed)
    d = random_separable(rng, int(rng.integers(2, 9)), int(rng.integers(2, 20)))
    rep = certify.l2_max_margin(d)
    assert rep.optimal
    np.testing.assert_allclose(rep.solution.w, cvx_l2(d), atol=1e-6)


def test_l2_frozen_instance():
    d = random_separable(np.random.default_rng(123), 4, 8)
    # value computed once with an interior-point conic solver
    expected = cvx_l2(d)
    np.testing.assert_allclose(certify.l2_max_margin(d).solution.w, expected, atol=1e-6)


@given(st.integers(0, 100_000))
@settings(max_examples=40)
def test_l2_self_certification(seed):
    rng = np.random.default_rng(seed)
    d = random_separable(rng, int(rng.integers(1, 8)), int(rng.integers(1, 15)))
    tol = 1e-8
    rep = certify.l2_max_margin(d, tol=tol)
    assert rep.optimal
    w = rep.solution.w
    m = training.margins(w, d)
    assert m.min() >= 1 - tol
    assert np.linalg.norm(w - d.signed.T @ rep.alphas) <= tol * np.linalg.norm(w)
    assert np.all(rep.alphas >= 0)
    assert np.max(rep.alphas * (m - 1)) <= tol


# ---- l1 in the Fourier domain -------------------------------------------

def test_l1_one_dimensional():
    rep = certify.l1_fourier_max_margin(Dataset([[2.0]], [1]))
    assert rep.optimal
    np.testing.assert_allclose(rep.solution.w, [0.5], atol=1e-8)
    assert rep.objective == pytest.approx(0.5, abs=1e-8)


def test_l1_two_dimensional_grid_oracle():
    d = Dataset([[1.0, 0.0]], [1])
    rep = certify.l1_fourier_max_margin(d)
    g = np.arange(-2000, 2001) / 1000.0
    W0, W1 = np.meshgrid(g, g, indexing="ij")
    feasible = W0 >= 1
    obj = (np.abs(W0 + W1) + np.abs(W0 - W1)) / np.sqrt(2)
    best = obj[feasible].min()
    assert best == pytest.approx(math.sqrt(2), abs=1e-9)
    assert abs(rep.objective - best) <= 1e-3


@given(st.floats(0.1, 10.0))
@settings(max_examples=10)
def test_l1_scaling(c):
    d = random_separable(np.random.default_rng(5), 4, 7)
    a = certify.l1_fourier_max_margin(d)
    b = certify.l1_fourier_max_margin(d.scaled(c))
    assert b.objective == pytest.approx(a.objective / c, rel=1e-6)
    np.testing.assert_allclose(b.solution.w, a.solution.w / c, atol=1e-5 * np.abs(a.solution.w).max() / c)


@pytest.mark.parametrize("seed", range(12))
def test_l1_matches_conic_solver_and_certifies(seed):
    rng = np.random.default_rng(100 + seed)
    d = random_separable(rng, int(rng.integers(2, 10)), int(rng.integers(2, 20)))
    tol = 1e-8
    rep = certify.l1_fourier_max_margin(d, tol=tol)
    assert rep.optimal
    _, ref = cvx_l1_fourier(d)
    assert abs(rep.objective - ref) <= 1e-6 * ref
    # unit margin, real, conjugate symmetric
    assert training.margins(rep.solution, d).min() == pytest.approx(1.0, abs=1e-12)
    assert spectral.conjugate_symmetry_residual(rep.solution.w_hat) <= 1e-9
    # never worse than the rescaled l2 point, which is feasible
    l2 = certify.l2_max_margin(d).solution.w
    assert rep.objective <= np.abs(spectral.dft(l2)).sum() * (1 + 1e-7)
    cert = certify.kkt_residual_bridge(rep.solution, d, 1.0)
    assert cert.equality_residual <= 1e-6
    assert cert.inequality_violation <= 1e-6


def test_l1_infeasible():
    d = Dataset([[1.0], [1.0]], [1, -1])
    assert certify.l1_fourier_max_margin(d).status is Status.INFEASIBLE


def test_solver_report_json():
    rep = certify.l1_fourier_max_margin(Dataset([[2.0]], [1]))
    d = rep.to_dict()
    assert d["status"] == "optimal"
    json.dumps(d)


# ---- nnls ---------------------------------------------------------------

@given(st.integers(0, 100_000))
@settings(max_examples=300)
def test_nnls_satisfies_optimality_conditions(seed):
    rng = np.random.default_rng(seed)
    m, k = int(rng.integers(1, 12)), int(rng.integers(1, 10))
    M, b = rng.standard_normal((m, k)), rng.standard_normal(m)
    a, res = certify.nnls(M, b)
    grad = M.T @ (M @ a - b)
    assert np.all(a >= 0)
    assert res == pytest.approx(np.linalg.norm(M @ a - b))
    # stationarity on the positive set, dual feasibility on the zero set
    np.testing.assert_allclose(grad[a > 0], 0, atol=1e-9)
    assert np.all(grad[a == 0] >= -1e-9)


def test_nnls_underdetermined_frozen():
    rng = np.random.default_rng(1233)
    M, b = rng.standard_normal((3, 6)), rng.standard_normal(3)
    _, res = certify.nnls(M, b)
    # reference residual from a conic solve of the same problem
    a = cp.Variable(6)
    ref = cp.Problem(cp.Minimize(cp.norm(M @ a - b)), [a >= 0]).solve(solver="CLARABEL")
    assert res <= ref + 1e-7


def test_nnls_zero_matrix():
    a, res = certify.nnls(np.zeros((3, 2)), np.ones(3))
    np.testing.assert_array_equal(a, 0)
    assert res == pytest.approx(math.sqrt(3))


# ---- support sets and certificates --------------------------------------

def test_support_set_examples():
    d = Dataset(np.eye(3), [1, 1, 1])
    np.testing.assert_array_equal(certify.support_set(np.ones(3), d), [0, 1, 2])
    d2 = Dataset([[1.0, 0], [0, 5.0]], [1, 1])
    np.testing.assert_array_equal(certify.support_set([1.0, 1.0], d2, margin_tol=0.01), [0])
    with pytest.raises(NonUnitMargin):
        certify.support_set([2.0, 2.0], d2)


def test_kkt_one_dimensional():
    cert = certify.kkt_residual_bridge([1.0], Dataset([[1.0]], [1]), 1.0)
    assert cert.alphas == pytest.approx([1.0])
    assert cert.equality_residual == pytest.approx(0, abs=1e-14)
    cert = certify.kkt_residual_bridge([0.5], Dataset([[2.0]], [1]), 1.0)
    assert cert.alphas == pytest.approx([0.5])
    assert cert.equality_residual == pytest.approx(0, abs=1e-14)
    assert cert.scale == pytest.approx(2.0)


def test_kkt_detects_non_stationary_point():
    d = Dataset([[1.0, 0], [0, 1.0]], [1, 1])
    # optimum of the p = 1 problem is not (1, 3): the second sample is not on the margin
    cert = certify.kkt_residual_bridge([1.0, 3.0], d, 1.0)
    assert cert.equality_residual > 0.1


def test_kkt_json_fields():
    cert = certify.kkt_residual_bridge([1.0], Dataset([[1.0]], [1]), 1.0)
    d = json.loads(cert.to_json())
    assert set(d) >= {"support_indices", "alphas", "equality_residual",
                      "inequality_violation", "scale", "config"}


def test_kkt_time_domain_diag_optimum():
    # min ||w||_1 s.t. w0 >= 1, w1 >= 1 has optimum (1, 1) with alphas (1, 1)
    d = Dataset(np.eye(2), [1, 1])
    cert = certify.kkt_residual_bridge([1.0, 1.0], d, 1.0, domain="time")
    assert cert.equality_residual == pytest.approx(0, abs=1e-14)
    assert cert.alphas == pytest.approx([1.0, 1.0])
    with pytest.raises(ValueError):
        certify.kkt_residual_bridge([1.0, 1.0], d, 1.0, domain="wavelet")


def test_kkt_rejects_non_unit_margin():
    with pytest.raises(NonUnitMargin):
        certify.kkt_residual_bridge([0.5], Dataset([[1.0]], [1]), 1.0)


def test_bridge_subgradient():
    target, nz = certify.bridge_subgradient(np.array([2j, 0, 1e-9]), 0.5, zero_tol=1e-6)
    assert list(nz) == [True, False, False]
    assert target[0] == pytest.approx(0.5 * 1j * 2 ** -0.5)


# ---- parameter-space stationarity --------------------------------------

def _steady_state_point(data, c):
    """``c w_svm + delta`` whose softmax loss weights equal the normalized
    SVM multipliers, so the negative gradient points exactly along ``w_svm``."""
    rep = certify.l2_max_margin(data)
    S = rep.alphas > 0
    A = data.signed[S]
    delta, *_ = np.linalg.lstsq(A, -np.log(rep.alphas[S]), rcond=None)
    return c * rep.solution.w + delta


def test_stationarity_linear_at_steady_state(gaussian_data):
    w = _steady_state_point(gaussian_data, 1e9)
    params = NetworkParams(Architecture.full(6, 1), [w[:, None]])
    assert certify.param_stationarity_residual(params, gaussian_data) <= 1e-6


@pytest.mark.parametrize("kind", ["full", "diag", "conv"])
def test_stationarity_balanced_on_symmetric_data(kind):
    # unit vectors: equal multipliers, optimum (1, 1, 1) for every penalty
    data = Dataset(np.eye(3), [1, 1, 1])
    arch = getattr(Architecture, kind)(3, 2)
    bal = models.balanced_factorization(arch, 50.0 * np.ones(3))
    assert certify.param_stationarity_residual(bal, data) <= 1e-10


def test_stationarity_balanced_full_depth_two(gaussian_data):
    w = _steady_state_point(gaussian_data, 1e9)
    bal = models.balanced_factorization(Architecture.full(6, 2), w)
    assert certify.param_stationarity_residual(bal, gaussian_data) <= 1e-6


def test_stationarity_random_point(gaussian_data):
    p = models.init_params(Architecture.full(6, 2), 1.0, np.random.default_rng(0))
    w = models.predictor(p).w
    if training.margins(w, gaussian_data).min() <= 0:
        w_sep = certify.l2_max_margin(gaussian_data).solution.w
        p = models.balanced_factorization(Architecture.full(6, 2), w_sep)
        p = models.gauge_perturb(p, np.random.default_rng(1), spread=2.0)
    assert certify.param_stationarity_residual(p, gaussian_data) > 0.1


def test_stationarity_errors(gaussian_data):
    w = certify.l2_max_margin(gaussian_data).solution.w
    with pytest.raises(NonPositiveMargin):
        certify.param_stationarity_residual(
            NetworkParams(Architecture.full(6, 1), [-w[:, None]]), gaussian_data)
    # positive-margin point of a diagonal network that is already aligned
    d = Dataset([[0.0, 1.0], [1.0, 0.0]], [1, 1])
    u = NetworkParams(Architecture.diag(2, 2), [np.array([1.0, 1.0]), np.array([1.0, 1.0])])
    assert certify.param_stationarity_residual(u, d) == pytest.approx(0.0, abs=1e-14)


def test_gradient_support_residual_at_svm(gaussian_data):
    w = certify.l2_max_margin(gaussian_data).solution.w * 1e3
    m = training.margins(w, gaussian_data)
    e = np.exp(-(m - m.min()))
    z = gaussian_data.signed.T @ e
    res = certify.gradient_support_residual(w / np.linalg.norm(w), z / np.linalg.norm(z), gaussian_data)
    assert res <= 1e-10


# ---- numeric induced penalty -------------------------------------------

def test_rp_oracle_examples():
    assert certify.rp_numeric_oracle(Architecture.diag(4, 2), [1.0, 0, 0, 0]) == pytest.approx(2.0, rel=1e-3)
    w = np.array([8.0, 0, 0])
    assert certify.rp_numeric_oracle(Architecture.full(3, 3), w) == pytest.approx(12.0, rel=1e-3)


@pytest.mark.parametrize("kind", ["full", "diag", "conv"])
@pytest.mark.parametrize("L", [2, 3])
def test_rp_oracle_agrees_with_closed_form(kind, L):
    rng = np.random.default_rng(L)
    arch = getattr(Architecture, kind)(4, L)
    for _ in range(3):
        w = rng.standard_normal(4)
        num = certify.rp_numeric_oracle(arch, w, seed=int(rng.integers(1000)))
        closed = models.rp_closed_form(arch, w)
        assert abs(num - closed) <= 1e-3 * closed
        assert num >= closed * (1 - 1e-3)
