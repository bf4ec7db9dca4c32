"""Deterministic large-(n, p) limits of the CKRR empirical and prediction risks.

Both limits share the ratio

    T(m) = [n s2 + n var_f - n m g^T Sigma ((I + m Sigma)^{-1} + (I + m Sigma)^{-2}) Sigma g]
           / [n - m^2 tr Sigma^2 (I + m Sigma)^{-2}]

with ``g = E[grad f(x)]`` and ``m = m(z)`` at ``z = -(lambda + nu) / g'(0)``.
The prediction limit is ``T - s2``; the empirical limit is
``r^2 T + s2 - 2 s2 r`` with ``r = c lambda m / g'(0)``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .datagen import sample_design
from .errors import DenominatorNonPositive
from .rmt import SpectralModel, stieltjes_fixed_point, z_of_lambda


@dataclass(frozen=True)
class FunctionMoments:
    e_grad: np.ndarray
    var_f: float
    e_f: float
    se_grad: np.ndarray = None
    se_var_f: float = None
    se_e_f: float = None

    def __post_init__(self):
        if not self.var_f >= 0:
            raise ValueError("var_f must be non-negative")
        if not (np.all(np.isfinite(self.e_grad)) and math.isfinite(self.var_f) and math.isfinite(self.e_f)):
            raise ValueError("moments must be finite")


@dataclass(frozen=True)
class RiskLimits:
    r_train_inf: float
    r_test_inf: float
    m_z: float
    z: float


def sin_moments(sigma, p=None):
    """Gaussian moments of sin(1^T x / sqrt(p)) for x ~ N(0, Sigma)."""
    mat = getattr(sigma, "matrix", sigma)
    p = mat.shape[0] if p is None else p
    s2 = float(mat.sum()) / p
    e_grad = np.full(p, math.exp(-0.5 * s2) / math.sqrt(p))
    var_f = 0.5 * (1.0 - math.exp(-2.0 * s2))
    return FunctionMoments(e_grad=e_grad, var_f=var_f, e_f=0.0)


def mc_moments(f, sigma, n_samples=100_000, seed=0, chunk=20_000):
    """Sample mean of grad f, mean and variance of f under N(0, Sigma)."""
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    p = sigma.p
    rng = np.random.default_rng(seed)
    s1 = s2 = 0.0
    g1 = np.zeros(p)
    g2 = np.zeros(p)
    done = 0
    fv_all = []
    while done < n_samples:
        m = min(chunk, n_samples - done)
        X = sample_design(max(m, 2), sigma, "gaussian", int(rng.integers(2**63)))[:m]
        fv = f(X)
        G = f.gradient(X)
        fv_all.append(fv)
        g1 += G.sum(axis=0)
        g2 += (G * G).sum(axis=0)
        done += m
    fv = np.concatenate(fv_all)
    N = float(n_samples)
    e_grad = g1 / N
    var_g = np.maximum(g2 / N - e_grad**2, 0.0)
    e_f = float(fv.mean())
    var_f = float(fv.var())
    dev2 = (fv - e_f) ** 2
    return FunctionMoments(
        e_grad=e_grad,
        var_f=var_f,
        e_f=e_f,
        se_grad=np.sqrt(var_g / N),
        se_var_f=float(dev2.std(ddof=1) / math.sqrt(N)),
        se_e_f=float(fv.std(ddof=1) / math.sqrt(N)),
    )


def _sigma_parts(sigma):
    """(eigenvalues, eigenvectors) from a CovarianceModel or a matrix."""
    if hasattr(sigma, "eigenvalues"):
        return sigma.eigenvalues, sigma.eigenvectors
    w, V = np.linalg.eigh(np.asarray(sigma, dtype=float))
    return np.clip(w, 0.0, None), V


_LD = np.longdouble


def _ratio(mom, sigma, n, sigma2, m_z):
    w, V = _sigma_parts(sigma)
    t = w * (V.T @ np.asarray(mom.e_grad, dtype=float))  # eigen-coordinates of Sigma E[grad f]
    inv1 = 1.0 / (1.0 + m_z * w)
    quad = float(np.sum(t * t * (inv1 + inv1 * inv1)))
    den = n - m_z**2 * float(np.sum((w * inv1) ** 2))
    if not den > 0:
        raise DenominatorNonPositive(f"limit denominator {den:.3e} <= 0 at m_z={m_z:g}")
    return (n * sigma2 + n * mom.var_f - n * m_z * quad) / den


def limit_test_risk(mom, sigma, n, p, sigma2, m_z):
    """Limiting prediction risk for general Sigma."""
    return _ratio(mom, sigma, n, sigma2, m_z) - sigma2


def _train_from_ratio(T, c, lam, m_z, g0p, sigma2):
    # Extended precision: mapping back to the prediction risk divides by r^2,
    # and r is ~1e-3 for small lambda, so float64 would lose ~6 digits.
    r = _LD(c) * _LD(lam) * _LD(m_z) / _LD(g0p)
    s2 = _LD(sigma2)
    return r * r * _LD(T) + s2 - 2 * s2 * r


def limit_train_risk(mom, sigma, n, p, sigma2, m_z, c, lam, g0p):
    """Limiting empirical risk for general Sigma (returned as np.longdouble)."""
    return _train_from_ratio(_ratio(mom, sigma, n, sigma2, m_z), c, lam, m_z, g0p, sigma2)


def limit_risks_identity(mom, n, p, sigma2, m_z, c, lam, g0p):
    """Both limits specialised to Sigma = I (no eigendecomposition needed)."""
    g2 = float(np.dot(mom.e_grad, mom.e_grad))
    den = n * (1.0 + m_z) ** 2 - p * m_z**2
    if not den > 0:
        raise DenominatorNonPositive(f"n(1+m)^2 - p m^2 = {den:.3e} <= 0 at m_z={m_z:g}")
    T = (n * (1.0 + m_z) ** 2 * (sigma2 + mom.var_f) - n * m_z * (2.0 + m_z) * g2) / den
    return RiskLimits(
        r_train_inf=_train_from_ratio(T, c, lam, m_z, g0p, sigma2),
        r_test_inf=T - sigma2,
        m_z=m_z,
        z=float("nan"),
    )


def test_from_train(r_train_inf, c, lam, m_z, g0p, sigma2):
    """Map an empirical-risk limit to the prediction-risk limit."""
    r = _LD(c) * _LD(lam) * _LD(m_z) / _LD(g0p)
    s2 = _LD(sigma2)
    return _LD(r_train_inf) / (r * r) - s2 * (1 / r - 1) ** 2


test_from_train.__test__ = False  # not a pytest test despite the name


def risk_limits(mom, sigma, n, lam, scalars, sigma2, tol=1e-12):
    """Solve for m_z at z = -(lam + nu)/g'(0) and evaluate both limits."""
    p = sigma.p
    z = z_of_lambda(lam, scalars)
    sol = stieltjes_fixed_point(SpectralModel.from_covariance(sigma, n), z, tol=tol)
    c = p / n
    return RiskLimits(
        r_train_inf=limit_train_risk(mom, sigma, n, p, sigma2, sol.m, c, lam, scalars.g0p),
        r_test_inf=limit_test_risk(mom, sigma, n, p, sigma2, sol.m),
        m_z=sol.m,
        z=z,
    )
