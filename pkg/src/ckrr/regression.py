"""Centered kernel ridge regression: fitting, prediction and risk evaluation.

The fitted predictor is

    f_c(s) = kappa_c(s)^T (K_c + lambda I)^{-1} P y + mean(y)

where ``K_c = P K P`` and ``P = I - 11^T / n``.  The offset is not penalised,
so adding a constant to ``y`` shifts every prediction by that constant.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .datagen import TEST, derive_seed, make_labels, replicate_seed, sample_design
from .errors import SolveFailure
from .kernels import center_gram, centered_info_vector, gram_matrix

COND_LIMIT = 1e14


@dataclass(frozen=True)
class CkrrModel:
    X_train: np.ndarray
    dual_coef: np.ndarray
    y_bar: float
    lam: float
    kernel: object
    K: np.ndarray

    def predict(self, S):
        return predict(self, S)


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    se: float
    n: int


def _spd_solve(A, b):
    anorm = np.abs(A).sum(axis=0).max()
    try:
        cf = linalg.cho_factor(A, lower=True, check_finite=False)
        rcond, info = linalg.lapack.dpocon(cf[0], anorm, uplo="L")
        if info == 0 and rcond > 0 and 1.0 / rcond <= COND_LIMIT:
            return linalg.cho_solve(cf, b, check_finite=False)
    except linalg.LinAlgError:
        pass
    # K_c may be indefinite for non-PSD kernels, or lambda underflowed
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SolveFailure(f"K_c + lambda I is numerically singular (cond ~ {cond:.2e})")
    return linalg.solve(A, b, assume_a="sym", check_finite=False)


def fit(X, y, spec, lam):
    """Fit CKRR: solve (K_c + lam I) a = P y."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least two training points")
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    K = gram_matrix(X, spec)
    Kc = center_gram(K)
    y_bar = float(y.mean())
    a = _spd_solve(Kc + lam * np.eye(n), y - y_bar)
    return CkrrModel(X, a, y_bar, float(lam), spec, K)


def predict(model, S):
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.shape[1] != model.X_train.shape[1]:
        raise ValueError(f"expected {model.X_train.shape[1]} columns, got {S.shape[1]}")
    kc = centered_info_vector(model.X_train, S, model.K, model.kernel)
    return kc.T @ model.dual_coef + model.y_bar


def fit_krr(X, y, spec, lam):
    """Plain (uncentered) kernel ridge regression, kept as a comparison baseline.

    Returns the dual coefficients of ``(K + lam I)^{-1} y``; predict with
    ``gram_matrix(S, spec, X) @ coef``.
    """
    K = gram_matrix(X, spec)
    return _spd_solve(K + lam * np.eye(K.shape[0]), np.asarray(y, dtype=float))


def smoother_matrix(X, spec, lam):
    """H = K_c (K_c + lam I)^{-1} P + 11^T / n, mapping y to in-sample predictions."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    Kc = center_gram(gram_matrix(X, spec))
    P = np.eye(n) - 1.0 / n
    H = Kc @ _spd_solve(Kc + lam * np.eye(n), P) + 1.0 / n
    return H


def empirical_risk_analytic(X, f_values, spec, lam, sigma2):
    """E over training noise of (1/n) ||f_hat(X) - f(X)||^2, in closed form."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    f_values = np.asarray(f_values, dtype=float)
    n = f_values.size
    H = smoother_matrix(X, spec, lam)
    bias = H @ f_values - f_values
    return float(bias @ bias / n + sigma2 * np.sum(H * H) / n)


def prediction_risk_mc(X, f, spec, lam, sigma, sigma2, n_test, n_rep, seed, dist="gaussian"):
    """Monte Carlo prediction risk with the design ``X`` held fixed.

    Each replicate redraws the training noise and ``n_test`` fresh inputs
    from the design distribution; returns the mean of the per-replicate
    test MSE against the noiseless target and its standard error.
    """
    if n_test < 1 or n_rep < 1:
        raise ValueError("n_test and n_rep must be >= 1")
    sd = float(np.sqrt(sigma2))
    vals = np.empty(n_rep)
    for r in range(n_rep):
        rs = replicate_seed(seed, r)
        y = make_labels(X, f, sd, seed=derive_seed(rs, 1))
        model = fit(X, y, spec, lam)
        S = _draw(n_test, sigma, dist, derive_seed(rs, TEST))
        vals[r] = np.mean((predict(model, S) - f(S)) ** 2)
    se = float(vals.std(ddof=1) / np.sqrt(n_rep)) if n_rep > 1 else float("nan")
    return MCEstimate(float(vals.mean()), se, n_rep)


def _draw(m, sigma, dist, seed):
    if m >= 2:
        return sample_design(m, sigma, dist, seed)
    return sample_design(2, sigma, dist, seed)[:m]


class SpectralPath:
    """Eigendecomposition of K_c on the complement of the constant vector.

    Built once per (X, kernel); afterwards every lambda on a grid costs only
    diagonal scalings.  ``B`` has orthonormal columns spanning 1^perp and
    ``K_c = B diag(d) B^T`` exactly.
    """

    def __init__(self, X, spec):
        self.X = np.asarray(X, dtype=float)
        self.spec = spec
        n = self.X.shape[0]
        self.n = n
        self.K = gram_matrix(self.X, spec)
        # Householder reflector sending e_1 to 1/sqrt(n); its other columns span 1^perp
        v = np.full(n, -1.0 / np.sqrt(n))
        v[0] += 1.0
        vv = v @ v
        Q = np.eye(n) - (2.0 / vv) * np.outer(v, v) if vv > 0 else np.eye(n)
        V = Q[:, 1:]
        M = V.T @ self.K @ V
        d, U = np.linalg.eigh(0.5 * (M + M.T))
        self.d = d
        self.B = V @ U

    def _weights(self, lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        if np.any(lam <= 0):
            raise ValueError("lambda must be positive")
        denom = self.d[:, None] + lam[None, :]
        if np.any(np.abs(denom) * 1e14 < np.abs(self.d).max() + lam[None, :]):
            raise SolveFailure("K_c + lambda I is numerically singular on this path")
        return 1.0 / denom  # (n-1, L)

    def dual_coefs(self, y, lam):
        """Columns are (K_c + lam I)^{-1} P y for each lambda."""
        w = self._weights(lam)
        return self.B @ (w * (self.B.T @ np.asarray(y, dtype=float))[:, None])

    def empirical_risk(self, f_values, lam, sigma2):
        f_values = np.asarray(f_values, dtype=float)
        w = self._weights(lam)
        shrink = self.d[:, None] * w  # d / (d + lam)
        ft = self.B.T @ f_values
        # (H - I) f = -B diag(lam/(d+lam)) B^T f ; the mean component is reproduced exactly
        resid2 = np.sum(((1.0 - shrink) * ft[:, None]) ** 2, axis=0)
        trHH = np.sum(shrink**2, axis=0) + 1.0
        return (resid2 + sigma2 * trHH) / self.n

    def empirical_risk_data(self, y, lam, sigma2):
        """Unbiased estimate of the empirical risk from labels alone.

        E||y_hat - y||^2 / n = R_train + sigma^2 - 2 sigma^2 tr(H) / n.
        """
        y = np.asarray(y, dtype=float)
        w = self._weights(lam)
        shrink = self.d[:, None] * w
        yt = self.B.T @ y
        rss = np.sum(((1.0 - shrink) * yt[:, None]) ** 2, axis=0) / self.n
        trH = np.sum(shrink, axis=0) + 1.0
        return rss - sigma2 + 2.0 * sigma2 * trH / self.n

    def centered_info(self, S):
        return centered_info_vector(self.X, S, self.K, self.spec)

    def predict(self, y, lam, S):
        y = np.asarray(y, dtype=float)
        A = self.dual_coefs(y, lam)
        return self.centered_info(S).T @ A + y.mean()

    def test_risk(self, f_train, f_test, S, lam, sigma2):
        """Prediction risk averaged over training noise in closed form, over ``S`` empirically.

        Returns the per-test-point values, shape (m, L); their mean over rows
        estimates the prediction risk at each lambda.
        """
        w = self._weights(lam)
        C = self.B.T @ self.centered_info(S)  # (n-1, m)
        ft = self.B.T @ np.asarray(f_train, dtype=float)
        fbar = float(np.mean(f_train))
        # h(s) = B diag(w) B^T kappa_c(s) + 1/n ; E_eps (h^T y - f(s))^2
        mean_pred = (C.T * ft[None, :]) @ w + fbar  # (m, L)
        bias2 = (mean_pred - np.asarray(f_test, dtype=float)[:, None]) ** 2
        var = (C.T**2) @ (w**2) + 1.0 / self.n
        return bias2 + sigma2 * var
