"""Invariant checks behind ``ckrr validate``.

Each check returns a dict with the measured deviation, its tolerance and
whether it passed.  Identity-class checks are algebraic and should hold to
rounding error; statistical checks carry the seed needed to reproduce them.
"""

import math

import numpy as np

from . import datagen
from .asymptotics import limit_risks_identity, limit_test_risk, limit_train_risk, sin_moments, test_from_train
from .datagen import CovarianceModel, derive_seed
from .kernels import KernelSpec, center_gram, gram_matrix, kernel_scalars
from .rmt import (
    SpectralModel,
    empirical_stieltjes,
    empirical_stieltjes_p,
    kernel_linearization,
    resolvent_q,
    resolvent_qtilde,
    stieltjes_fixed_point,
    stieltjes_identity_closed_form,
    z_of_lambda,
)
from .tuning import lambda_from_z, optimal_m_identity, stationarity_residual
from .estimators import EstimatorInputs


def _check(name, measured, tol, kind, passed=None, **extra):
    ok = bool(measured <= tol) if passed is None else bool(passed)
    out = {"name": name, "kind": kind, "measured": float(measured), "tolerance": float(tol), "passed": ok}
    out.update(extra)
    return out


def check_train_test_relation(cfg):
    sigma = cfg.covariance_model()
    mom = sin_moments(sigma)
    model = SpectralModel.from_covariance(sigma, cfg.n)
    worst = 0.0
    for spec in cfg.kernel_specs:
        sc = kernel_scalars(spec, sigma.tau)
        for lam in cfg.lambdas:
            m = stieltjes_fixed_point(model, z_of_lambda(lam, sc)).m
            rt = limit_train_risk(mom, sigma, cfg.n, cfg.p, cfg.sigma2, m, model.c, lam, sc.g0p)
            re = limit_test_risk(mom, sigma, cfg.n, cfg.p, cfg.sigma2, m)
            back = test_from_train(rt, model.c, lam, m, sc.g0p, cfg.sigma2)
            worst = max(worst, float(abs(back - re) / (1 + abs(re))))
    return _check("train_to_test_relation", worst, 1e-12, "identity")


def check_woodbury(seed):
    rng = np.random.default_rng(seed)
    n, p, z = 40, 25, -0.7
    X = rng.standard_normal((n, p))
    Q, Qt = resolvent_q(X, z), resolvent_qtilde(X, z)
    P = np.eye(n) - 1.0 / n
    r25 = -np.eye(n) / z + P @ X @ Qt @ X.T @ P / (z * p)
    r26 = -np.eye(p) / z + X.T @ P @ Q @ P @ X / (z * p)
    e25 = np.linalg.norm(Q - r25) / np.linalg.norm(Q)
    e26 = np.linalg.norm(Qt - r26) / np.linalg.norm(Qt)
    return [
        _check("woodbury_Q_from_Qtilde", e25, 1e-10, "identity", seed=seed),
        _check("woodbury_Qtilde_from_Q", e26, 1e-10, "identity", seed=seed),
    ]


def check_identity_simplification(cfg):
    p, n = cfg.p, cfg.n
    sigma = CovarianceModel.identity(p)
    mom = sin_moments(sigma)
    c = p / n
    worst = 0.0
    for spec in cfg.kernel_specs:
        sc = kernel_scalars(spec, sigma.tau)
        for lam in cfg.lambdas:
            m = stieltjes_identity_closed_form(c, z_of_lambda(lam, sc))
            lim = limit_risks_identity(mom, n, p, cfg.sigma2, m, c, lam, sc.g0p)
            rt = limit_train_risk(mom, sigma, n, p, cfg.sigma2, m, c, lam, sc.g0p)
            re = limit_test_risk(mom, sigma, n, p, cfg.sigma2, m)
            worst = max(worst, float(abs(lim.r_train_inf - rt) / (1 + abs(rt))), abs(lim.r_test_inf - re) / (1 + abs(re)))
    return _check("identity_sigma_simplification", worst, 1e-12, "identity")


def check_centering(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((30, 8))
    K = gram_matrix(X, KernelSpec("exponential", 1.0, 0.0))
    Kc = center_gram(K)
    scale = np.linalg.norm(K)
    sums = max(np.abs(Kc.sum(axis=0)).max(), np.abs(Kc.sum(axis=1)).max()) / scale
    idem = np.linalg.norm(center_gram(Kc) - Kc) / scale
    return [
        _check("centering_zero_sums", sums, 1e-10, "identity", seed=seed),
        _check("centering_idempotent", idem, 1e-10, "identity", seed=seed),
    ]


def check_dual_primal(seed, trials=20):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n, p = int(rng.integers(3, 21)), int(rng.integers(1, 6))
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        lam = float(10 ** rng.uniform(-2, 1))
        Phi = X / math.sqrt(p)
        P = np.eye(n) - 1.0 / n
        yc = y - y.mean()
        primal = np.linalg.solve(Phi.T @ P @ Phi + lam * np.eye(p), Phi.T @ P @ yc)
        Kc = P @ (X @ X.T / p) @ P
        dual = Phi.T @ P @ np.linalg.solve(Kc + lam * np.eye(n), yc)
        worst = max(worst, np.abs(primal - dual).max())
    return _check("dual_primal_equivalence", worst, 1e-8, "identity", seed=seed)


def check_fixed_point():
    worst = 0.0
    for c in (0.25, 0.5, 1.0, 2.0):
        for z in (-0.1, -1.0, -10.0):
            p = 400
            n = p / c
            model = SpectralModel(p, int(round(n)), np.ones(p))
            fp = stieltjes_fixed_point(model, z).m
            worst = max(worst, abs(fp - stieltjes_identity_closed_form(model.c, z)))
    golden = abs(stieltjes_fixed_point(SpectralModel.identity(50, 50), -1.0).m - (math.sqrt(5) - 1) / 2)
    return [
        _check("fixed_point_vs_closed_form", worst, 1e-10, "identity"),
        _check("fixed_point_golden_ratio", golden, 1e-10, "identity"),
    ]


def check_linearization(seed):
    spec = KernelSpec("exponential", 1.0, 0.0)
    norms = []
    for size in (100, 200, 400):
        sigma = CovarianceModel.identity(size)
        X = datagen.sample_design(size, sigma, "gaussian", derive_seed(seed, size))
        D = gram_matrix(X, spec) - kernel_linearization(X, spec, sigma)
        norms.append(float(np.linalg.norm(D, 2) / math.sqrt(size)))
    decreasing = all(b < a for a, b in zip(norms, norms[1:]))
    return _check("kernel_linearization_decay", norms[-1], norms[0], "statistical",
                  passed=decreasing, norms=norms, seed=seed)


def check_stieltjes_convention(seed):
    """Which trace convention converges to the Sigma = I fixed point."""
    n, p, z = 400, 200, -1.0
    X = datagen.sample_design(n, CovarianceModel.identity(p), "gaussian", seed)
    m = stieltjes_identity_closed_form(p / n, z)
    e_nn = abs(empirical_stieltjes(X, z) - m)
    e_pp = abs(empirical_stieltjes_p(X, z) - m)
    better = "n x n" if e_nn < e_pp else "p x p"
    return _check("stieltjes_convention_n_by_n", e_nn, 0.05, "statistical",
                  error_n_by_n=e_nn, error_p_by_p=e_pp, closer=better, seed=seed)


def check_deterministic_equivalent(seed, reps=20):
    n, p, z = 400, 200, -1.0
    sigma = datagen.toeplitz_sigma(p, 0.4)
    m = stieltjes_fixed_point(SpectralModel.from_covariance(sigma, n), z).m
    D = np.linalg.inv(np.eye(p) + m * sigma.matrix)
    u = np.ones(p) / math.sqrt(p)
    v = np.zeros(p)
    v[0] = 1.0
    quad, trace = [], []
    for r in range(reps):
        X = datagen.sample_design(n, sigma, "gaussian", derive_seed(seed, r))
        Qt = resolvent_qtilde(X, z)
        quad.append(u @ Qt @ v + u @ D @ v / z)
        trace.append(np.trace(Qt) / p + np.trace(D) / (z * p))
    return [
        _check("deterministic_equivalent_bilinear", abs(np.mean(quad)), 0.1, "statistical", seed=seed),
        _check("deterministic_equivalent_trace", abs(np.mean(trace)), 0.05, "statistical", seed=seed),
    ]


def check_tuning_identities(cfg, seed):
    X = datagen.sample_design(cfg.n, CovarianceModel.identity(cfg.p), "gaussian", seed)
    y = datagen.make_labels(X, datagen.target_sin(cfg.p), math.sqrt(cfg.sigma2), derive_seed(seed, 1))
    inp = EstimatorInputs(X, y)
    m = optimal_m_identity(inp.A, inp.var_y, inp.n, inp.p)
    res = stationarity_residual(m, inp.A, inp.var_y, inp.n, inp.p)
    worst = 0.0
    for spec in cfg.kernel_specs:
        sc = kernel_scalars(spec, 1.0)
        for lam in cfg.lambdas:
            worst = max(worst, abs(lambda_from_z(z_of_lambda(lam, sc), sc) - lam) / lam)
    return [
        _check("optimal_m_stationarity", res, 1e-8, "identity", seed=seed),
        _check("lambda_z_round_trip", worst, 1e-12, "identity"),
    ]


def run_checks(cfg):
    seed = int(cfg.base_seed)
    checks = [check_train_test_relation(cfg), check_identity_simplification(cfg), check_dual_primal(seed)]
    checks += check_woodbury(seed)
    checks += check_centering(seed)
    checks += check_fixed_point()
    checks += check_tuning_identities(cfg, seed)
    checks.append(check_linearization(seed))
    checks.append(check_stieltjes_convention(seed))
    checks += check_deterministic_equivalent(seed)
    return checks
