import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ckrr.datagen import CovarianceModel, make_labels, sample_design, target_constant, target_sin, toeplitz_sigma
from ckrr.kernels import KernelSpec, center_gram, gram_matrix
from ckrr.regression import (
    SpectralPath,
    empirical_risk_analytic,
    fit,
    fit_krr,
    predict,
    prediction_risk_mc,
    smoother_matrix,
)

LIN = KernelSpec("linear")
POLY = KernelSpec("polynomial", 1.0, 1.0, 2)
X2 = np.array([[1.0], [-1.0]])


def test_two_point_fit():
    m = fit(X2, np.array([1.0, -1.0]), LIN, 1.0)
    # (K_c + I) a = y with K_c = [[1,-1],[-1,1]] -> a = y / 3
    np.testing.assert_allclose(m.dual_coef, [1 / 3, -1 / 3], atol=1e-15)
    assert m.y_bar == 0.0
    assert predict(m, np.array([[0.0]]))[0] == pytest.approx(0.0, abs=1e-15)
    assert predict(m, np.array([[1.0]]))[0] == pytest.approx(2 / 3)


def test_constant_labels():
    X = np.random.default_rng(0).standard_normal((8, 3))
    m = fit(X, np.full(8, 2.5), POLY, 0.1)
    assert np.abs(m.dual_coef).max() < 1e-14
    np.testing.assert_allclose(m.predict(np.random.default_rng(1).standard_normal((4, 3))), 2.5)


def test_large_lambda_predicts_mean():
    rng = np.random.default_rng(2)
    X, y = rng.standard_normal((10, 3)), rng.standard_normal(10)
    m = fit(X, y, LIN, 1e9)
    np.testing.assert_allclose(m.predict(X), y.mean(), atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 20), st.integers(1, 5), st.floats(1e-2, 10.0), st.integers(0, 10_000))
def test_dual_matches_primal_for_linear(n, p, lam, seed):
    rng = np.random.default_rng(seed)
    X, y, S = rng.standard_normal((n, p)), rng.standard_normal(n), rng.standard_normal((3, p))
    Phi = X / np.sqrt(p)
    mu = Phi.mean(axis=0)
    Pc = Phi - mu
    w = np.linalg.solve(Pc.T @ Pc + lam * np.eye(p), Pc.T @ (y - y.mean()))
    primal = (S / np.sqrt(p) - mu) @ w + y.mean()
    np.testing.assert_allclose(fit(X, y, LIN, lam).predict(S), primal, atol=1e-8)


def test_label_shift_shifts_predictions():
    rng = np.random.default_rng(3)
    X, y, S = rng.standard_normal((12, 4)), rng.standard_normal(12), rng.standard_normal((5, 4))
    a = fit(X, y, POLY, 0.3).predict(S)
    b = fit(X, y + 7.0, POLY, 0.3).predict(S)
    np.testing.assert_allclose(b - a, 7.0, atol=1e-12)


def test_krr_baseline_differs_from_centered():
    rng = np.random.default_rng(4)
    X, y = rng.standard_normal((10, 3)), rng.standard_normal(10) + 5
    coef = fit_krr(X, y, LIN, 0.5)
    np.testing.assert_allclose((gram_matrix(X, LIN) + 0.5 * np.eye(10)) @ coef, y)
    assert not np.allclose(gram_matrix(X, LIN) @ coef, fit(X, y, LIN, 0.5).predict(X))


def test_smoother_reproduces_constants():
    X = np.random.default_rng(5).standard_normal((9, 2))
    H = smoother_matrix(X, POLY, 0.2)
    np.testing.assert_allclose(H @ np.ones(9), np.ones(9), atol=1e-12)
    assert empirical_risk_analytic(X, np.full(9, 3.0), POLY, 0.2, 0.0) < 1e-24


def test_empirical_risk_large_lambda_limit():
    X = np.random.default_rng(6).standard_normal((15, 4))
    f = np.random.default_rng(7).standard_normal(15)
    Pf = f - f.mean()
    r = empirical_risk_analytic(X, f, LIN, 1e10, 0.3)
    assert r == pytest.approx(Pf @ Pf / 15 + 0.3 / 15, rel=1e-6)


def test_empirical_risk_matches_noise_monte_carlo():
    n, p, sigma2, lam = 40, 10, 0.5, 0.3
    X = sample_design(n, toeplitz_sigma(p, 0.4), seed=8)
    f = target_sin(p)
    fx = f(X)
    draws = np.empty(2000)
    for i in range(2000):
        y = make_labels(X, f, np.sqrt(sigma2), seed=i)
        draws[i] = np.mean((fit(X, y, POLY, lam).predict(X) - fx) ** 2)
    analytic = empirical_risk_analytic(X, fx, POLY, lam, sigma2)
    assert abs(draws.mean() - analytic) <= 3 * draws.std(ddof=1) / np.sqrt(2000)


def test_spectral_path_matches_direct_solves():
    rng = np.random.default_rng(9)
    X, y, S = rng.standard_normal((25, 6)), rng.standard_normal(25), rng.standard_normal((4, 6))
    lams = np.array([1e-2, 0.5, 20.0])
    path = SpectralPath(X, POLY)
    P = np.eye(25) - 1 / 25
    np.testing.assert_allclose(path.B @ np.diag(path.d) @ path.B.T, center_gram(path.K), atol=1e-12)
    A = path.dual_coefs(y, lams)
    pred = path.predict(y, lams, S)
    fx = rng.standard_normal(25)
    r = path.empirical_risk(fx, lams, 0.4)
    for j, lam in enumerate(lams):
        m = fit(X, y, POLY, lam)
        np.testing.assert_allclose(A[:, j], m.dual_coef, atol=1e-10)
        np.testing.assert_allclose(pred[:, j], m.predict(S), atol=1e-10)
        assert r[j] == pytest.approx(empirical_risk_analytic(X, fx, POLY, lam, 0.4), rel=1e-10)
        H = smoother_matrix(X, POLY, lam)
        rss = np.sum((H @ y - y) ** 2) / 25
        expect = rss - 0.4 + 2 * 0.4 * np.trace(H) / 25
        assert path.empirical_risk_data(y, lam, 0.4)[0] == pytest.approx(expect, rel=1e-10)
    del P


def test_spectral_test_risk_matches_noise_expectation():
    rng = np.random.default_rng(10)
    n, p, sigma2, lam = 20, 5, 0.3, 0.2
    X, S = rng.standard_normal((n, p)), rng.standard_normal((3, p))
    f = target_sin(p)
    path = SpectralPath(X, POLY)
    vals = path.test_risk(f(X), f(S), S, [lam], sigma2)[:, 0]
    # closed form via the hat vector h(s): E (h^T y - f(s))^2 = (h^T f - f(s))^2 + sigma^2 ||h||^2
    Kc = center_gram(gram_matrix(X, POLY))
    P = np.eye(n) - 1 / n
    m = fit(X, f(X), POLY, lam)
    from ckrr.kernels import centered_info_vector

    kc = centered_info_vector(X, S, m.K, POLY)
    Hs = kc.T @ np.linalg.solve(Kc + lam * np.eye(n), P) + 1 / n
    expect = (Hs @ f(X) - f(S)) ** 2 + sigma2 * np.sum(Hs**2, axis=1)
    np.testing.assert_allclose(vals, expect, rtol=1e-10)


def test_prediction_risk_mc_zero_problem():
    X = np.random.default_rng(11).standard_normal((10, 3))
    est = prediction_risk_mc(X, target_constant(0.0), LIN, 1.0, CovarianceModel.identity(3), 0.0, 50, 3, seed=0)
    assert est.mean == 0.0


def test_prediction_risk_mc_large_lambda_and_se_scaling():
    p = 20
    f = target_sin(p)
    sigma = CovarianceModel.identity(p)
    X = sample_design(100, sigma, seed=12)
    a = prediction_risk_mc(X, f, LIN, 1e9, sigma, 0.5, 400, 40, seed=1)
    b = prediction_risk_mc(X, f, LIN, 1e9, sigma, 0.5, 400, 160, seed=1)
    var_f = (1 - np.exp(-2)) / 2
    # predictions collapse to the label mean, whose noise adds ~ (sigma^2 + var_f)/n
    assert abs(b.mean - var_f) < 3 * b.se + (0.5 + var_f) / 100 + 0.01
    assert 0.3 < b.se / a.se < 0.8
