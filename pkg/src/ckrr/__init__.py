"""Centered kernel ridge regression (CKRR) in the large-dimensional regime."""

from .asymptotics import FunctionMoments, RiskLimits, limit_test_risk, limit_train_risk, risk_limits, sin_moments
from .datagen import CovarianceModel, load_csv, make_labels, sample_design, target_sin, toeplitz_sigma
from .errors import CkrrError
from .estimators import (
    EstimatorInputs,
    lemma2_estimate,
    thm2_estimate_general,
    thm2_estimate_identity,
)
from .experiments import ExperimentConfig, load_config, run_realdata, run_sweep, run_tune, run_validate
from .kernels import KernelSpec, center_gram, gram_matrix, kernel_scalars
from .regression import CkrrModel, SpectralPath, fit, fit_krr, predict, prediction_risk_mc
from .rmt import SpectralModel, empirical_stieltjes, stieltjes_fixed_point, stieltjes_identity_closed_form, z_of_lambda
from .tuning import TuningResult, optimal_m_identity, optimize_z_general, tune_identity

__version__ = "0.1.0"
