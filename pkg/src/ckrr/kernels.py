"""Inner-product kernels k(x, x') = g(x^T x' / p), Gram matrices and centering."""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateKernel

FAMILIES = ("linear", "polynomial", "sigmoid", "exponential")


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family together with its parameters.

    ``g`` is ``alpha*u + beta`` (linear), ``(alpha*u + beta)**degree``
    (polynomial), ``tanh(alpha*u + beta)`` (sigmoid) or ``exp(alpha*u + beta)``
    (exponential).  Specs with ``g'(0) == 0`` are rejected.
    """

    family: str
    alpha: float = 1.0
    beta: float = 0.0
    degree: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "polynomial" and int(self.degree) < 1:
            raise ValueError("polynomial degree must be >= 1")
        if _g_prime(self, 0.0) == 0.0:
            raise DegenerateKernel(f"g'(0) = 0 for {self.name}")

    @property
    def name(self):
        if self.family == "polynomial":
            return f"polynomial(a={self.alpha:g},b={self.beta:g},d={int(self.degree)})"
        return f"{self.family}(a={self.alpha:g},b={self.beta:g})"

    @classmethod
    def from_dict(cls, d):
        return cls(
            family=d["family"],
            alpha=float(d.get("alpha", 1.0)),
            beta=float(d.get("beta", 0.0)),
            degree=int(d.get("degree", 1)),
        )

    def to_dict(self):
        out = {"family": self.family, "alpha": self.alpha, "beta": self.beta}
        if self.family == "polynomial":
            out["degree"] = int(self.degree)
        return out

    def __call__(self, u):
        return eval_g(self, u)


@dataclass(frozen=True)
class KernelScalars:
    g0: float
    g0p: float
    g0pp: float
    g_tau: float
    nu: float
    tau: float


def eval_g(spec, u):
    """Evaluate the scalar kernel function elementwise."""
    t = spec.alpha * np.asarray(u, dtype=float) + spec.beta
    if spec.family == "linear":
        out = t
    elif spec.family == "polynomial":
        out = t ** int(spec.degree)
    elif spec.family == "sigmoid":
        out = np.tanh(t)
    else:
        out = np.exp(t)
    return out if out.ndim else float(out)


def _g_prime(spec, u):
    a, b = spec.alpha, spec.beta
    t = a * u + b
    if spec.family == "linear":
        return a
    if spec.family == "polynomial":
        d = int(spec.degree)
        return d * a * t ** (d - 1)
    if spec.family == "sigmoid":
        return a * (1.0 - math.tanh(t) ** 2)
    return a * math.exp(t)


def _g_second(spec, u):
    a, b = spec.alpha, spec.beta
    t = a * u + b
    if spec.family == "linear":
        return 0.0
    if spec.family == "polynomial":
        d = int(spec.degree)
        return d * (d - 1) * a * a * t ** (d - 2) if d >= 2 else 0.0
    if spec.family == "sigmoid":
        th = math.tanh(t)
        return -2.0 * a * a * th * (1.0 - th * th)
    return a * a * math.exp(t)


def kernel_scalars(spec, tau):
    """g(0), g'(0), g''(0), g(tau) and the diagonal shift nu = g(tau) - g(0) - tau g'(0)."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    g0p = _g_prime(spec, 0.0)
    if g0p == 0.0:
        raise DegenerateKernel(f"g'(0) = 0 for {spec.name}")
    g0 = eval_g(spec, 0.0)
    g_tau = eval_g(spec, tau)
    return KernelScalars(
        g0=g0,
        g0p=g0p,
        g0pp=_g_second(spec, 0.0),
        g_tau=g_tau,
        nu=g_tau - g0 - tau * g0p,
        tau=float(tau),
    )


def tau_from_sigma(sigma):
    """(1/p) tr(Sigma) for a CovarianceModel or a plain matrix."""
    mat = getattr(sigma, "matrix", sigma)
    return float(np.trace(mat)) / mat.shape[0]


def tau_from_data(X):
    """Sample mean of x_i^T x_i / p, the data-driven stand-in for (1/p) tr(Sigma)."""
    X = np.asarray(X, dtype=float)
    return float(np.mean(np.einsum("ij,ij->i", X, X))) / X.shape[1]


def gram_matrix(X, spec, Y=None):
    """K_ij = g(x_i^T y_j / p); with ``Y=None`` the square training Gram matrix."""
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    if Y is None:
        G = X @ X.T / p
        G = 0.5 * (G + G.T)
    else:
        G = X @ np.asarray(Y, dtype=float).T / p
    return eval_g(spec, G)


def center_gram(K):
    """Double centering P K P with P = I - 11^T/n."""
    K = np.asarray(K, dtype=float)
    row = K.mean(axis=1, keepdims=True)
    col = K.mean(axis=0, keepdims=True)
    Kc = K - row - col + K.mean()
    return 0.5 * (Kc + Kc.T)


def centered_info_vector(X, S, K, spec):
    """Centered information vectors kappa_c(s) = P kappa(s) - (1/n) P K 1.

    ``S`` may be a single p-vector or an m x p matrix; the result is an
    n-vector or an n x m matrix respectively.
    """
    S = np.asarray(S, dtype=float)
    single = S.ndim == 1
    S2 = S[None, :] if single else S
    kappa = gram_matrix(X, spec, S2)  # n x m
    Kbar = np.asarray(K, dtype=float).mean(axis=1)  # K 1 / n
    v = kappa - Kbar[:, None]
    v = v - v.mean(axis=0, keepdims=True)
    return v[:, 0] if single else v
