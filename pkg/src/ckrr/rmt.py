"""Stieltjes-transform machinery for sample covariance matrices.

The Stieltjes transform ``m(z)`` of (1/p) sum_i x_i x_i^T solves

    m = -1 / (c z - (1/n) sum_k s_k / (1 + m s_k))

where ``s_k`` are the eigenvalues of Sigma and ``c = p / n``.  On the
negative real axis it is positive, decreasing in ``|z|``, and its data-driven
counterpart is ``(1/p) tr(X X^T / p - z I_n)^{-1}``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import BranchViolation, NoConvergence, SupportViolation


@dataclass(frozen=True)
class SpectralModel:
    p: int
    n: int
    sigma_eigs: np.ndarray

    def __post_init__(self):
        if self.p < 1 or self.n < 1:
            raise ValueError("p and n must be positive")
        eigs = np.asarray(self.sigma_eigs, dtype=float)
        if eigs.shape != (self.p,):
            raise ValueError(f"expected {self.p} eigenvalues, got {eigs.shape}")
        if eigs.min() < 0:
            raise ValueError("Sigma eigenvalues must be non-negative")
        object.__setattr__(self, "sigma_eigs", eigs)

    @property
    def c(self):
        return self.p / self.n

    @classmethod
    def identity(cls, p, n):
        return cls(p, n, np.ones(p))

    @classmethod
    def from_covariance(cls, sigma, n):
        return cls(sigma.p, n, sigma.eigenvalues)


@dataclass(frozen=True)
class StieltjesSolution:
    z: float
    m: float
    iterations: int
    residual: float


def z_of_lambda(lam, scalars, eigs=None, delta=1e-6):
    """z = -(lambda + nu) / g'(0).

    The map must land on the negative real axis.  When ``eigs`` (the spectrum
    of the centered sample covariance) is given, z is also required to stay at
    least ``delta`` away from ``[min(eigs), max(eigs)]``.
    """
    z = -(lam + scalars.nu) / scalars.g0p
    if not z < 0:
        raise SupportViolation(
            f"z = {z:.6g} is not on the negative axis (lambda={lam:g}, nu={scalars.nu:g}, "
            f"g'(0)={scalars.g0p:g})"
        )
    if eigs is not None:
        lo, hi = float(np.min(eigs)), float(np.max(eigs))
        if lo - delta <= z <= hi + delta:
            raise SupportViolation(f"z = {z:.6g} is within {delta:g} of the spectrum [{lo:g}, {hi:g}]")
    return z


def _fixed_point_map(m, z, c, eigs, n):
    return -1.0 / (c * z - np.sum(eigs / (1.0 + m * eigs)) / n)


def stieltjes_fixed_point(model, z, tol=1e-12, max_iter=10000, m0=None):
    """Solve the Marcenko-Pastur fixed point on the negative real axis.

    Plain iteration, halved (``m <- (m + F(m)) / 2``) whenever a full step
    would increase the residual ``|m - F(m)|``.
    """
    if not z < 0:
        raise ValueError(f"z must be negative, got {z}")
    c, eigs, n = model.c, model.sigma_eigs, model.n
    m = -1.0 / (c * z) if m0 is None else float(m0)
    Fm = _fixed_point_map(m, z, c, eigs, n)
    res = abs(m - Fm)
    for it in range(1, max_iter + 1):
        if res <= tol:
            return StieltjesSolution(z, m, it - 1, res)
        m_new = Fm
        F_new = _fixed_point_map(m_new, z, c, eigs, n)
        res_new = abs(m_new - F_new)
        if res_new > res:
            m_new = 0.5 * (m + Fm)
            F_new = _fixed_point_map(m_new, z, c, eigs, n)
            res_new = abs(m_new - F_new)
        m, Fm, res = m_new, F_new, res_new
    if res <= tol:
        return StieltjesSolution(z, m, max_iter, res)
    raise NoConvergence(f"fixed point at z={z:g} stalled at residual {res:.3e} after {max_iter} steps")


def stieltjes_identity_closed_form(c, z):
    """m(z) for Sigma = I: the positive root of c z m^2 + (c z - c + 1) m + 1 = 0."""
    if not z < 0:
        raise ValueError(f"z must be negative, got {z}")
    disc = (c * z - c - 1.0) ** 2 - 4.0 * c
    if disc < 0:
        raise BranchViolation(f"negative discriminant at c={c:g}, z={z:g}")
    a = c * z - c + 1.0
    # numerically stable pairing: the product of roots is 1 / (c z)
    q = -0.5 * (a + math.copysign(math.sqrt(disc), a))
    roots = (q / (c * z), 1.0 / q) if q != 0 else ((-a) / (c * z),)
    m = max(roots)
    if not m > 0:
        raise BranchViolation(f"closed form gives m = {m:g} <= 0 at c={c:g}, z={z:g}")
    return m


def gram_eigenvalues(X):
    """Eigenvalues of X X^T / p (length n, including structural zeros)."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    s = np.linalg.svd(X, compute_uv=False)
    ev = np.zeros(n)
    ev[: s.size] = s**2 / p
    return ev


def empirical_stieltjes(X, z, eigs=None):
    """(1/p) tr(X X^T / p - z I_n)^{-1}; ``z`` may be an array."""
    X = np.asarray(X)
    p = X.shape[1]
    if eigs is None:
        eigs = gram_eigenvalues(X)
    z = np.asarray(z, dtype=float)
    if np.any(z >= 0):
        raise ValueError("z must be negative")
    out = np.sum(1.0 / (eigs[:, None] - z.reshape(1, -1)), axis=0) / p
    return float(out[0]) if z.ndim == 0 else out


def empirical_stieltjes_p(X, z):
    """(1/p) tr(X^T X / p - z I_p)^{-1}, the p x p companion of :func:`empirical_stieltjes`.

    The two differ by ``(n - p) / (p z)``: tr of the n x n resolvent equals
    tr of the p x p one minus ``(n - p) / z``.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    s = np.linalg.svd(X, compute_uv=False)
    ev = np.zeros(p)
    ev[: s.size] = s**2 / p
    z = np.asarray(z, dtype=float)
    out = np.sum(1.0 / (ev[:, None] - z.reshape(1, -1)), axis=0) / p
    return float(out[0]) if z.ndim == 0 else out


def _center_rows(X):
    X = np.asarray(X, dtype=float)
    return X - X.mean(axis=0, keepdims=True)


def resolvent_qtilde(X, z):
    """(X^T P X / p - z I_p)^{-1}."""
    if not z < 0:
        raise ValueError("z must be negative")
    Xc = _center_rows(X)
    p = Xc.shape[1]
    M = Xc.T @ Xc / p
    Q = np.linalg.inv(0.5 * (M + M.T) - z * np.eye(p))
    return 0.5 * (Q + Q.T)


def resolvent_q(X, z):
    """(P X X^T P / p - z I_n)^{-1}."""
    if not z < 0:
        raise ValueError("z must be negative")
    Xc = _center_rows(X)
    n, p = Xc.shape
    M = Xc @ Xc.T / p
    Q = np.linalg.inv(0.5 * (M + M.T) - z * np.eye(n))
    return 0.5 * (Q + Q.T)


def kernel_linearization(X, spec, sigma):
    """Deterministic-plus-linear surrogate of the Gram matrix.

    ``[g(0) + g''(0) tr(Sigma^2) / (2 p^2)] 11^T + g'(0) X X^T / p + nu I``
    with ``nu`` evaluated at ``tau = tr(Sigma) / p``.
    """
    from .kernels import kernel_scalars, tau_from_sigma

    X = np.asarray(X, dtype=float)
    n, p = X.shape
    mat = getattr(sigma, "matrix", sigma)
    sc = kernel_scalars(spec, tau_from_sigma(mat))
    tr_s2 = float(np.sum(mat * mat))
    const = sc.g0 + sc.g0pp * tr_s2 / (2.0 * p * p)
    G = X @ X.T / p
    return const * np.ones((n, n)) + sc.g0p * 0.5 * (G + G.T) + sc.nu * np.eye(n)
