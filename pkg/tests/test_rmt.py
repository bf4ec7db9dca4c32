import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ckrr.datagen import CovarianceModel, sample_design, toeplitz_sigma
from ckrr.errors import SupportViolation
from ckrr.kernels import KernelSpec, gram_matrix, kernel_scalars
from ckrr.rmt import (
    SpectralModel,
    empirical_stieltjes,
    empirical_stieltjes_p,
    kernel_linearization,
    resolvent_qtilde,
    stieltjes_fixed_point,
    stieltjes_identity_closed_form,
    z_of_lambda,
)

GOLDEN = (math.sqrt(5) - 1) / 2


def test_z_of_lambda_examples():
    assert z_of_lambda(0.5, kernel_scalars(KernelSpec("linear"), 1.0)) == -0.5
    assert z_of_lambda(1.0, kernel_scalars(KernelSpec("exponential"), 1.0)) == pytest.approx(-(math.e - 1))
    assert z_of_lambda(1.0, kernel_scalars(KernelSpec("polynomial", 1, 1, 2), 1.0)) == -1.0


def test_z_of_lambda_support_violation():
    # sigmoid with beta = 0 has nu < 0, so small lambda maps to z > 0
    sc = kernel_scalars(KernelSpec("sigmoid", 1.0, 0.0), 1.0)
    assert sc.nu < 0
    with pytest.raises(SupportViolation):
        z_of_lambda(1e-3, sc)
    with pytest.raises(SupportViolation):
        z_of_lambda(0.5, kernel_scalars(KernelSpec("linear"), 1.0), eigs=np.array([0.0, 2.0]), delta=1.0)


def test_fixed_point_golden_ratio():
    sol = stieltjes_fixed_point(SpectralModel.identity(80, 80), -1.0)
    assert sol.m == pytest.approx(GOLDEN, abs=1e-10)
    assert sol.residual <= 1e-12


def test_fixed_point_far_left_asymptote():
    model = SpectralModel.from_covariance(toeplitz_sigma(50, 0.4), 100)
    m = stieltjes_fixed_point(model, -1e8).m
    assert m == pytest.approx(1 / (model.c * 1e8), rel=0.01)


def test_closed_form_values():
    assert stieltjes_identity_closed_form(1.0, -1.0) == pytest.approx(GOLDEN, abs=1e-14)
    # 10 m^2 + 10 m - 1 = 0
    assert stieltjes_identity_closed_form(1.0, -10.0) == pytest.approx((-10 + math.sqrt(140)) / 20, rel=1e-14)
    assert stieltjes_identity_closed_form(1.0, -10.0) == pytest.approx(0.0916, abs=1e-4)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([0.1, 0.25, 0.5, 1.0, 2.0, 4.0]), st.floats(-50.0, -1e-3))
def test_fixed_point_matches_closed_form(c, z):
    p = 200
    model = SpectralModel(p, int(round(p / c)), np.ones(p))
    m = stieltjes_fixed_point(model, z).m
    assert m > 0
    assert m == pytest.approx(stieltjes_identity_closed_form(model.c, z), abs=1e-10)


def test_closed_form_solves_quadratic():
    for c in (0.25, 0.5, 2.0):
        for z in (-0.1, -3.0):
            m = stieltjes_identity_closed_form(c, z)
            assert abs(c * z * m * m + (c * z - c + 1) * m + 1) < 1e-12


def test_empirical_stieltjes_zero_design():
    X = np.zeros((6, 3))
    assert empirical_stieltjes(X, -2.0) == pytest.approx(-6 / (3 * -2.0))


def test_empirical_stieltjes_consistent():
    X = sample_design(400, CovarianceModel.identity(200), seed=11)
    assert abs(empirical_stieltjes(X, -1.0) - stieltjes_identity_closed_form(0.5, -1.0)) <= 0.05


def test_trace_conventions_differ_by_co_resolvent_term():
    X = np.random.default_rng(0).standard_normal((30, 12))
    z = -0.8
    diff = empirical_stieltjes(X, z) - empirical_stieltjes_p(X, z)
    assert diff == pytest.approx(-(30 - 12) / (12 * z), rel=1e-12)


def test_empirical_stieltjes_vectorised():
    X = np.random.default_rng(1).standard_normal((20, 8))
    zs = np.array([-0.1, -1.0, -5.0])
    np.testing.assert_allclose(empirical_stieltjes(X, zs), [empirical_stieltjes(X, z) for z in zs])
    assert np.all(np.diff(empirical_stieltjes(X, zs)) < 0)


def test_resolvent_zero_design():
    np.testing.assert_allclose(resolvent_qtilde(np.zeros((5, 3)), -2.0), np.eye(3) / 2.0)


def test_deterministic_equivalent_trace():
    n, p, z = 400, 200, -1.0
    sigma = toeplitz_sigma(p, 0.4)
    m = stieltjes_fixed_point(SpectralModel.from_covariance(sigma, n), z).m
    X = sample_design(n, sigma, seed=5)
    lhs = np.trace(resolvent_qtilde(X, z)) / p
    rhs = -np.trace(np.linalg.inv(np.eye(p) + m * sigma.matrix)) / (z * p)
    assert abs(lhs - rhs) < 0.05


def test_linearization_exact_for_linear():
    X = np.random.default_rng(2).standard_normal((15, 6))
    spec = KernelSpec("linear", 1.0, 0.5)
    np.testing.assert_allclose(kernel_linearization(X, spec, CovarianceModel.identity(6)), gram_matrix(X, spec),
                               atol=1e-12)


def test_linearization_zero_design():
    spec = KernelSpec("exponential")
    sigma = CovarianceModel.identity(4)
    K_inf = kernel_linearization(np.zeros((5, 4)), spec, sigma)
    sc = kernel_scalars(spec, 1.0)
    expect = (sc.g0 + sc.g0pp * 4 / (2 * 16)) * np.ones((5, 5)) + sc.nu * np.eye(5)
    np.testing.assert_allclose(K_inf, expect, atol=1e-14)


def test_linearization_error_decays():
    spec = KernelSpec("exponential")
    err = []
    for size in (100, 400):
        X = sample_design(size, CovarianceModel.identity(size), seed=size)
        err.append(np.linalg.norm(gram_matrix(X, spec) - kernel_linearization(X, spec, CovarianceModel.identity(size)), 2))
    assert err[1] < err[0]
