"""Synthetic designs, covariance models, target functions and CSV ingestion."""

from dataclasses import dataclass, field
import csv
import math
from typing import Callable, Optional

import numpy as np

from .errors import CsvParseError, InsufficientRows, NotPSD

_GOLDEN64 = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1

# stream ids for derive_seed
DESIGN, NOISE, TEST, TEST_NOISE = 0, 1, 2, 3


def replicate_seed(base_seed, r):
    """Per-replicate seed: base xor (r * golden-ratio constant), kept in 64 bits."""
    return (int(base_seed) ^ ((int(r) * _GOLDEN64) & _MASK64)) & _MASK64


def derive_seed(seed, stream):
    """Independent child seed for one random stream (design, noise, test set, ...)."""
    ss = np.random.SeedSequence([int(seed) & _MASK64, int(stream)])
    return int(ss.generate_state(2, dtype=np.uint64)[0])


@dataclass
class CovarianceModel:
    kind: str
    matrix: np.ndarray
    rho: Optional[float] = None
    eigenvalues: np.ndarray = field(init=False, repr=False)
    eigenvectors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("covariance must be a square matrix")
        if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max())):
            raise ValueError("covariance must be symmetric")
        if not np.all(np.isfinite(M)):
            raise ValueError("covariance has non-finite entries")
        M = 0.5 * (M + M.T)
        w, V = np.linalg.eigh(M)
        scale = max(np.abs(w).max(), 1e-300)
        if w.min() < -1e-8 * scale:
            raise NotPSD(f"covariance has eigenvalue {w.min():.3e} < 0")
        self.matrix = M
        self.eigenvalues = np.clip(w, 0.0, None)
        self.eigenvectors = V

    @property
    def p(self):
        return self.matrix.shape[0]

    @property
    def norm(self):
        return float(self.eigenvalues.max())

    @property
    def tau(self):
        return float(np.trace(self.matrix)) / self.p

    @classmethod
    def identity(cls, p):
        return cls("identity", np.eye(p))

    @classmethod
    def explicit(cls, matrix):
        return cls("explicit", matrix)


def toeplitz_sigma(p, rho):
    """Sigma_ij = rho^|i-j|."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    idx = np.arange(p)
    M = float(rho) ** np.abs(idx[:, None] - idx[None, :])
    return CovarianceModel("toeplitz", M, rho=float(rho))


def covariance_from_config(spec, p):
    """Build a CovarianceModel from ``{"kind": "identity"|"toeplitz"|"explicit", ...}``."""
    kind = spec.get("kind", "toeplitz")
    if kind == "identity":
        return CovarianceModel.identity(p)
    if kind == "toeplitz":
        return toeplitz_sigma(p, float(spec.get("rho", 0.4)))
    if kind == "explicit":
        M = np.asarray(spec["matrix"], dtype=float)
        if M.shape != (p, p):
            raise ValueError(f"explicit covariance has shape {M.shape}, expected {(p, p)}")
        return CovarianceModel.explicit(M)
    raise ValueError(f"unknown covariance kind {kind!r}")


def sqrt_psd(sigma):
    """Symmetric square root via eigendecomposition, clamping tiny negative eigenvalues."""
    if isinstance(sigma, CovarianceModel):
        w, V = sigma.eigenvalues, sigma.eigenvectors
    else:
        M = np.asarray(sigma, dtype=float)
        w, V = np.linalg.eigh(0.5 * (M + M.T))
        if w.min() < -1e-8 * max(np.abs(w).max(), 1e-300):
            raise NotPSD(f"matrix has eigenvalue {w.min():.3e} < 0")
        w = np.clip(w, 0.0, None)
    S = (V * np.sqrt(w)) @ V.T
    return 0.5 * (S + S.T)


def sample_design(n, sigma, dist="gaussian", seed=0):
    """Rows x_i = Sigma^{1/2} z_i with z_i standard Gaussian or Rademacher."""
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(seed)
    p = sigma.p
    if dist == "gaussian":
        Z = rng.standard_normal((n, p))
    elif dist == "rademacher":
        Z = 1.0 - 2.0 * rng.integers(0, 2, size=(n, p))
    else:
        raise ValueError(f"unknown distribution {dist!r}")
    if sigma.kind == "identity":
        return Z
    return Z @ sqrt_psd(sigma)


@dataclass(frozen=True)
class TargetFunction:
    """Row-vectorised target: ``value`` maps (m, p) -> (m,), ``gradient`` (m, p) -> (m, p)."""

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    name: str

    def __call__(self, X):
        return self.value(np.atleast_2d(X))


def target_sin(p):
    """f(x) = sin(1^T x / sqrt(p))."""
    r = 1.0 / math.sqrt(p)

    def value(X):
        return np.sin(np.asarray(X, dtype=float).sum(axis=1) * r)

    def gradient(X):
        X = np.asarray(X, dtype=float)
        c = np.cos(X.sum(axis=1) * r) * r
        return np.repeat(c[:, None], X.shape[1], axis=1)

    return TargetFunction(value, gradient, "sin")


def target_linear(w, b=0.0):
    """f(x) = w^T x + b."""
    w = np.asarray(w, dtype=float)

    def value(X):
        return np.asarray(X, dtype=float) @ w + b

    def gradient(X):
        return np.broadcast_to(w, np.shape(X)).copy()

    return TargetFunction(value, gradient, "linear")


def target_constant(c=0.0):
    def value(X):
        return np.full(np.shape(X)[0], float(c))

    def gradient(X):
        return np.zeros(np.shape(X))

    return TargetFunction(value, gradient, "constant")


TARGETS = {"sin": target_sin}


def make_labels(X, f, sigma_noise, seed=0):
    """y_i = f(x_i) + sigma * eps_i with eps_i iid N(0, 1)."""
    fx = f(X)
    if sigma_noise == 0:
        return fx.copy()
    rng = np.random.default_rng(seed)
    return fx + sigma_noise * rng.standard_normal(fx.shape[0])


def load_csv(path):
    """Read a headed CSV; the last column is the response, the rest are features."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CsvParseError(f"{path}: {exc}") from exc
    if not rows:
        raise CsvParseError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    if len(header) < 2:
        raise CsvParseError(f"{path}: need at least one feature column and a response")
    data = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise CsvParseError(f"{path}:{i}: expected {len(header)} fields, got {len(row)}")
        for j, tok in enumerate(row):
            tok = tok.strip()
            if tok == "" or tok == "?" or tok.lower() in ("na", "nan"):
                raise CsvParseError(f"{path}:{i}: missing value in column {header[j]!r}")
            try:
                data[i - 2, j] = float(tok)
            except ValueError:
                raise CsvParseError(f"{path}:{i}: non-numeric value {tok!r}") from None
    if data.shape[0] < 10:
        raise InsufficientRows(f"{path}: {data.shape[0]} rows, need at least 10")
    return data[:, :-1], data[:, -1], header


def standardize(X_train, *others):
    """Zero-mean, unit-variance columns using training-split statistics only."""
    mu = X_train.mean(axis=0)
    sd = X_train.std(axis=0)
    sd[sd == 0] = 1.0
    out = [(X_train - mu) / sd] + [(Xo - mu) / sd for Xo in others]
    return out if others else out[0]
