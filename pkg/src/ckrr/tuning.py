"""Joint kernel / regularisation tuning through the scalar z = -(lambda + nu) / g'(0)."""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy import optimize

from .errors import NegativeRadicand, NonPositiveM, NonUnimodalWarning, OutOfRange, Unreachable
from .estimators import EstimatorInputs, identity_objective, thm2_estimate_general, thm2_estimate_general_grid
from .kernels import kernel_scalars, tau_from_data
from .rmt import empirical_stieltjes, gram_eigenvalues

Z_MIN, Z_MAX = 1e-6, 1e4


@dataclass
class TuningResult:
    m_star: float
    z_star: float
    lambda_star: dict = field(default_factory=dict)  # kernel name -> lambda or "unreachable"
    r_test_at_optimum: float = float("nan")
    method: str = ""


def optimal_m_identity(A, var_y, n, p):
    """Minimiser in m of the Sigma = I risk estimate.

    Stationary points solve ``p v [p m^2 + n (1+m)^2] = A (n + n m + p m^2)``,
    a quadratic ``a m^2 + b m + c0 = 0`` with ``a = p (n v + p v - A)``,
    ``b = n (2 p v - A)``, ``c0 = n (p v - A)``.  The root
    ``[n (A - 2 p v) + sqrt(disc)] / (2 a)`` is the local minimum whatever
    the sign of ``a``.
    """
    v = var_y
    a = p * (n * v + p * v - A)
    if a == 0 or (A == 0 and v == 0):
        raise NonPositiveM(f"degenerate stationarity equation (A={A:g}, var_y={v:g})")
    disc = n * n * A * A - 4 * n * p * A * A + 8 * n * p * p * A * v - 4 * n * p**3 * v * v
    if disc < 0:
        raise NegativeRadicand(f"radicand {disc:.3e} < 0")
    m = (n * (A - 2 * p * v) + math.sqrt(disc)) / (2 * a)
    if not m > 0:
        raise NonPositiveM(f"stationary point m = {m:g} <= 0")
    return m


def stationarity_residual(m, A, var_y, n, p):
    """Relative residual of the quadratic stationarity condition at m."""
    lhs = p * var_y * (p * m * m + n * (1 + m) ** 2)
    rhs = A * (n + n * m + p * m * m)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)


def _golden_on_grid(fun, ts, vals):
    """Refine the grid minimum of ``fun`` (a function of t) with golden-section search."""
    i = int(np.nanargmin(vals))
    if 0 < i < len(ts) - 1:
        x = optimize.golden(fun, brack=(ts[i - 1], ts[i], ts[i + 1]), tol=1e-10)
        fx = fun(x)
        if fx <= vals[i]:
            return float(x), float(fx)
    return float(ts[i]), float(vals[i])


def _count_local_minima(vals):
    v = np.asarray(vals)
    inner = (v[1:-1] < v[:-2]) & (v[1:-1] < v[2:])
    return int(inner.sum())


def minimize_identity_objective(A, var_y, n, p, sigma2=0.0, m_max=20.0, n_grid=10_000):
    """Grid-plus-golden fallback when the closed form is unavailable."""
    ms = np.linspace(m_max / n_grid, m_max, n_grid)
    vals = identity_objective(ms, A, var_y, n, p, sigma2)
    vals = np.where(np.isfinite(vals), vals, np.inf)
    m, _ = _golden_on_grid(lambda x: float(identity_objective(x, A, var_y, n, p, sigma2)), ms, vals)
    return m


def find_z_for_m(X, m_target, z_min=Z_MIN, z_max=Z_MAX, eigs=None):
    """Solve m_hat(z) = m_target for z in [-z_max, -z_min].

    m_hat is strictly decreasing in |z| on the negative axis, so the root is
    bracketed and found by bisection-type search in log|z|.
    """
    if not m_target > 0:
        raise OutOfRange("m_target must be positive")
    if eigs is None:
        eigs = gram_eigenvalues(X)

    def g(t):
        return empirical_stieltjes(X, -math.exp(t), eigs=eigs) - m_target

    lo, hi = math.log(z_min), math.log(z_max)
    g_lo, g_hi = g(lo), g(hi)
    if not (g_lo >= 0 >= g_hi):
        raise OutOfRange(
            f"m = {m_target:g} not within [m_hat(-{z_max:g}), m_hat(-{z_min:g})] = "
            f"[{g_hi + m_target:g}, {g_lo + m_target:g}]"
        )
    if g_lo == 0:
        return -z_min
    if g_hi == 0:
        return -z_max
    t = optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return -math.exp(t)


def lambda_from_z(z, scalars):
    """lambda = -z g'(0) - nu; raises Unreachable when that is not positive."""
    lam = -z * scalars.g0p - scalars.nu
    if not lam > 0:
        raise Unreachable(f"z = {z:g} needs lambda = {lam:g} <= 0 for this kernel")
    return lam


def _lambda_map(z, kernels, tau):
    out = {}
    for spec in kernels:
        try:
            out[spec.name] = lambda_from_z(z, kernel_scalars(spec, tau))
        except Unreachable:
            out[spec.name] = "unreachable"
    return out


def tune_identity(X, y, sigma2, kernels=(), tau=None, z_min=Z_MIN, z_max=Z_MAX):
    """Closed-form pipeline for Sigma = I: m* -> z* (inverting m_hat) -> lambda* per kernel."""
    inp = EstimatorInputs(X, y, sigma2=sigma2)
    n, p = inp.n, inp.p
    try:
        m_star = optimal_m_identity(inp.A, inp.var_y, n, p)
        method = "closed-form"
    except (NegativeRadicand, NonPositiveM):
        m_star = minimize_identity_objective(inp.A, inp.var_y, n, p, sigma2)
        method = "grid-golden"
    z_star = find_z_for_m(X, m_star, z_min, z_max, eigs=inp.gram_eigs)
    tau = tau_from_data(X) if tau is None else tau
    r = float(identity_objective(m_star, inp.A, inp.var_y, n, p, sigma2))
    return TuningResult(m_star, z_star, _lambda_map(z_star, kernels, tau), r, method)


def optimize_z_general(X, y, sigma2, z_lo=-Z_MAX, z_hi=-Z_MIN, kernels=(), tau=None, n_grid=64,
                       objective="general"):
    """Minimise a risk estimate over z in [z_lo, z_hi].

    ``objective="general"`` uses the resolvent-based estimate (any Sigma);
    ``"identity"`` uses the Sigma = I form evaluated at m_hat(z), which makes
    the result directly comparable with :func:`tune_identity`.  A log-spaced
    scan localises the basin, then golden-section search refines it in log|z|.
    """
    if not z_lo < z_hi < 0:
        raise ValueError("need z_lo < z_hi < 0")
    inp = EstimatorInputs(X, y, sigma2=sigma2)
    if objective == "general":
        def grid(zs):
            return thm2_estimate_general_grid(inp, zs)

        def fun(t):
            return thm2_estimate_general(inp.at(z=-math.exp(t)))
    elif objective == "identity":
        def grid(zs):
            return identity_objective(inp.m_hat(zs), inp.A, inp.var_y, inp.n, inp.p, sigma2)

        def fun(t):
            return float(identity_objective(inp.m_hat(-math.exp(t)), inp.A, inp.var_y, inp.n, inp.p, sigma2))
    else:
        raise ValueError(f"unknown objective {objective!r}")
    ts = np.linspace(math.log(-z_hi), math.log(-z_lo), n_grid)
    vals = grid(-np.exp(ts))
    if _count_local_minima(vals) > 1:
        warnings.warn("risk estimate has several local minima on the z-grid", NonUnimodalWarning, stacklevel=2)
    t_star, r = _golden_on_grid(fun, ts, vals)
    z_star = -math.exp(t_star)
    tau = tau_from_data(X) if tau is None else tau
    return TuningResult(inp.m_hat(z_star), z_star, _lambda_map(z_star, kernels, tau), r, "golden-" + objective)
