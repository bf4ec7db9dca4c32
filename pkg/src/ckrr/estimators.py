"""Prediction-risk estimators computed from the training sample alone.

Two routes are provided:

* :func:`lemma2_estimate` rescales the empirical risk; it needs ``c lambda m / g'(0)``
  to stay away from zero and degrades for small ``lambda``.
* :func:`thm2_estimate_general` works directly with the resolvent of the
  centered sample covariance and is stable for small ``lambda``.
  :func:`thm2_estimate_identity` is its matrix-free form when Sigma = I.

Both depend on the kernel and ``lambda`` only through ``z``.
"""

from dataclasses import dataclass
from functools import cached_property
import warnings

import numpy as np

from .errors import DenominatorNonPositive, InstabilityWarning
from .rmt import empirical_stieltjes, empirical_stieltjes_p, gram_eigenvalues

INSTABILITY_THRESHOLD = 1e-3


@dataclass
class EstimatorInputs:
    """Training data plus the operating point.

    Spectral quantities are computed lazily and cached, so one instance can
    serve a whole z-grid: set ``z`` per point with :meth:`at`.
    """

    X: np.ndarray
    y: np.ndarray
    z: float = -1.0
    lam: float = 1.0
    g0p: float = 1.0
    sigma2: float = 0.0
    var_ddof: int = 0

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        n = self.X.shape[0]
        if n < 2:
            raise ValueError("need n >= 2")
        if self.y.shape != (n,):
            raise ValueError(f"y has shape {self.y.shape}, expected ({n},)")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def c(self):
        return self.p / self.n

    def at(self, z=None, lam=None, g0p=None, sigma2=None):
        """Shallow copy sharing the cached spectra, with a new operating point."""
        new = object.__new__(type(self))
        new.__dict__.update(self.__dict__)
        if z is not None:
            new.z = float(z)
        if lam is not None:
            new.lam = float(lam)
        if g0p is not None:
            new.g0p = float(g0p)
        if sigma2 is not None:
            new.sigma2 = float(sigma2)
        return new

    @cached_property
    def Py(self):
        return self.y - self.y.mean()

    @cached_property
    def var_y(self):
        """(1/(n - ddof)) y^T P y; ddof = 0 by default."""
        return float(self.Py @ self.Py) / (self.n - self.var_ddof)

    @cached_property
    def gram_eigs(self):
        return gram_eigenvalues(self.X)

    @cached_property
    def _centered_cov(self):
        Xc = self.X - self.X.mean(axis=0)
        M = Xc.T @ Xc / self.p
        e, W = np.linalg.eigh(0.5 * (M + M.T))
        t = W.T @ (Xc.T @ self.y)  # W^T X^T P y
        return np.clip(e, 0.0, None), t

    @cached_property
    def A(self):
        """y^T P (X X^T / n) P y."""
        v = (self.X - self.X.mean(axis=0)).T @ self.y
        return float(v @ v) / self.n

    def m_hat(self, z=None):
        return empirical_stieltjes(self.X, self.z if z is None else z, eigs=self.gram_eigs)


def _rescale(r_train, m_hat, c, lam, g0p, sigma2):
    r = c * lam * m_hat / g0p
    if abs(r) < INSTABILITY_THRESHOLD:
        warnings.warn(
            f"c*lambda*m/g'(0) = {r:.2e} is below {INSTABILITY_THRESHOLD:g}; "
            "the empirical-risk based estimate is unreliable here",
            InstabilityWarning,
            stacklevel=3,
        )
    return r_train / (r * r) - sigma2 * (1.0 / r - 1.0) ** 2


def lemma2_estimate(r_train_emp, m_hat, inp):
    """Prediction risk from the empirical risk, rescaled by (c lambda m / g'(0))^-2."""
    if m_hat == 0:
        raise ValueError("m_hat must be non-zero")
    if not inp.lam > 0:
        raise ValueError("lambda must be positive")
    return _rescale(r_train_emp, m_hat, inp.c, inp.lam, inp.g0p, inp.sigma2)


def thm2_estimate_general(inp, m_hat=None):
    """Resolvent-based estimate, valid for any Sigma.

    ``(c z m)^-2 [ y^T P X (z Qt^2 - Qt) X^T P y / (n p) + var(y) ] - sigma^2``
    with ``Qt = (X^T P X / p - z I)^{-1}``.  ``m_hat`` defaults to the
    empirical Stieltjes transform at ``inp.z``.
    """
    z = inp.z
    if not z < 0:
        raise ValueError("z must be negative")
    e, t = inp._centered_cov
    d = e - z
    quad = float(np.sum(t * t * (z / (d * d) - 1.0 / d)))
    m = inp.m_hat(z) if m_hat is None else m_hat
    pref = 1.0 / (inp.c * z * m) ** 2
    return pref * (quad / (inp.n * inp.p) + inp.var_y) - inp.sigma2


def thm2_estimate_general_grid(inp, zs, m_hats=None):
    """Vectorised :func:`thm2_estimate_general` over an array of z values."""
    zs = np.asarray(zs, dtype=float)
    if np.any(zs >= 0):
        raise ValueError("z must be negative")
    e, t = inp._centered_cov
    d = e[:, None] - zs[None, :]
    quad = np.sum((t * t)[:, None] * (zs[None, :] / (d * d) - 1.0 / d), axis=0)
    m = inp.m_hat(zs) if m_hats is None else np.asarray(m_hats)
    return (quad / (inp.n * inp.p) + inp.var_y) / (inp.c * zs * m) ** 2 - inp.sigma2


def identity_objective(m, A, var_y, n, p, sigma2=0.0):
    """The Sigma = I estimate as a function of m (the quantity minimised when tuning)."""
    m = np.asarray(m, dtype=float)
    den = n * (1.0 + m) ** 2 - p * m**2
    return (n * (1.0 + m) ** 2 * var_y - m * (2.0 + m) * (A - p * var_y)) / den - sigma2


def thm2_estimate_identity(inp, m_hat=None):
    """Matrix-free estimate for Sigma = I."""
    m = inp.m_hat() if m_hat is None else m_hat
    n, p = inp.n, inp.p
    den = n * (1.0 + m) ** 2 - p * m**2
    if not den > 0:
        raise DenominatorNonPositive(f"n(1+m)^2 - p m^2 = {den:.3e} <= 0")
    return float(identity_objective(m, inp.A, inp.var_y, n, p, inp.sigma2))


def m_hat_conventions(X, z):
    """Both trace conventions for the empirical Stieltjes transform: (n x n, p x p)."""
    return empirical_stieltjes(X, z), empirical_stieltjes_p(X, z)
