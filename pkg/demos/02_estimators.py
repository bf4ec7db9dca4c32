"""Estimating the prediction risk from training data alone.

One training draw, one kernel.  We compare the held-out risk (Monte Carlo
over fresh test points) with the two data-only estimates: the rescaled
empirical risk and the resolvent-based estimate.  The first one degrades
at small lambda, where c*lambda*m/g'(0) is close to zero.
"""

import math
import warnings

import numpy as np

from ckrr import (
    EstimatorInputs,
    KernelSpec,
    fit,
    kernel_scalars,
    lemma2_estimate,
    prediction_risk_mc,
    sample_design,
    target_sin,
    thm2_estimate_general,
    toeplitz_sigma,
    make_labels,
    z_of_lambda,
)
from ckrr.estimators import InstabilityWarning

n, p, sigma2 = 400, 200, 0.5
sigma = toeplitz_sigma(p, 0.4)
f = target_sin(p)
X = sample_design(n, sigma, "gaussian", seed=1)
y = make_labels(X, f, math.sqrt(sigma2), seed=2)

spec = KernelSpec("polynomial", 1.0, 1.0, 2)
sc = kernel_scalars(spec, sigma.tau)
base = EstimatorInputs(X, y, sigma2=sigma2)

print(f"{'lambda':>8} {'held-out':>9} {'rescaled':>9} {'resolvent':>9}")
for lam in (0.05, 0.3, 1.0, 5.0):
    model = fit(X, y, spec, lam)
    r_train = float(np.mean((model.predict(X) - y) ** 2))
    held = prediction_risk_mc(X, f, spec, lam, sigma, sigma2, n_test=2000, n_rep=20, seed=3)
    inp = base.at(z=z_of_lambda(lam, sc), lam=lam, g0p=sc.g0p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InstabilityWarning)
        lem = lemma2_estimate(r_train, inp.m_hat(), inp)
    thm = thm2_estimate_general(inp)
    print(f"{lam:8.3g} {held.mean:9.4f} {lem:9.4f} {thm:9.4f}")
