"""Acceptance criteria, one test per criterion.

Each criterion is a plain function returning (passed, detail) so it can be
run from pytest or as a script (``python3 tests/test_acceptance.py``).
Results are collected in RESULTS and printed one line per criterion in the
pytest terminal summary (see conftest.py).
"""

import functools
import math
import time

import numpy as np
import pytest

from ckrr import datagen
from ckrr.datagen import CovarianceModel, derive_seed
from ckrr.estimators import EstimatorInputs, identity_objective
from ckrr.experiments import load_config, run_sweep_raw, run_tune, sweep_limits
from ckrr.kernels import kernel_scalars
from ckrr.tuning import optimal_m_identity
from ckrr.validation import (
    check_centering,
    check_dual_primal,
    check_fixed_point,
    check_identity_simplification,
    check_linearization,
    check_train_test_relation,
    check_woodbury,
)

TOL = 0.10
FLOOR = 0.05
RESULTS = {}


def _record(key, passed, detail):
    RESULTS[key] = (bool(passed), detail)
    return passed, detail


@functools.lru_cache(maxsize=None)
def _sweep(distribution="gaussian", n=200, p=100, n_rep=50, n_test=1000):
    cfg = load_config(distribution=distribution, n=n, p=p, n_rep=n_rep, n_test=n_test)
    t0 = time.time()
    stacked, limits = run_sweep_raw(cfg)
    return cfg, stacked, limits, time.time() - t0


def _limit_agreement(distribution):
    cfg, stacked, limits, elapsed = _sweep(distribution)
    worst = {}
    for name, (tr_lim, te_lim, _) in limits.items():
        st = stacked[name]
        e_test = np.abs(st["r_test"].mean(axis=0) - te_lim) / np.maximum(te_lim, FLOOR)
        e_train = np.abs(st["r_train"].mean(axis=0) - tr_lim) / np.maximum(tr_lim, FLOOR)
        worst[name] = (float(e_test.max()), float(e_train.max()))
    passed = all(max(v) <= TOL for v in worst.values()) and elapsed <= 600
    parts = [f"{k}: test {a:.3f} train {b:.3f}" for k, (a, b) in sorted(worst.items())]
    return passed, f"max rel err per kernel [{'; '.join(parts)}] in {elapsed:.1f}s"


def criterion_1():
    return _record(1, *_limit_agreement("gaussian"))


def criterion_2():
    return _record(2, *_limit_agreement("rademacher"))


def _median_gap(n, p, reps=20):
    """Median over replicates of the mean |estimate - R_test(MC)| over the grid, per kernel and estimator."""
    cfg, stacked, _, _ = _sweep("gaussian", n=n, p=p, n_rep=reps, n_test=2000)
    big = cfg.lambdas >= 0.1
    out = {}
    for name, st in stacked.items():
        g_thm = np.abs(st["thm2"] - st["r_test"]).mean(axis=1)
        g_lem = np.abs(st["lemma2"][:, big] - st["r_test"][:, big]).mean(axis=1)
        out[name] = (float(np.median(g_lem)), float(np.median(g_thm)))
    return out


def criterion_3():
    cfg, stacked, _, _ = _sweep("gaussian")
    lams = cfg.lambdas
    big = lams >= 0.1
    worst_lem, worst_thm = 0.0, 0.0
    for st in stacked.values():
        mc = st["r_test"].mean(axis=0)
        worst_lem = max(worst_lem, float(np.max(np.abs(st["lemma2"].mean(axis=0)[big] - mc[big]) / mc[big])))
        worst_thm = max(worst_thm, float(np.max(np.abs(st["thm2"].mean(axis=0) - mc) / mc)))
    small, large = _median_gap(200, 100), _median_gap(400, 200)
    shrinks = all(large[k][0] < small[k][0] and large[k][1] < small[k][1] for k in small)
    passed = worst_lem <= TOL and worst_thm <= TOL and shrinks
    gaps = "; ".join(f"{k}: {small[k][1]:.4f}->{large[k][1]:.4f}" for k in sorted(small))
    return _record(3, passed, f"lemma2 (lam>=0.1) {worst_lem:.3f}, thm2 (all lam) {worst_thm:.3f}, "
                              f"thm2 median gap shrinks={shrinks} [{gaps}]")


def criterion_4():
    cfg = load_config()
    mins = {name: float(te.min()) for name, (_, te, _) in sweep_limits(cfg).items()}
    lo, hi = min(mins.values()), max(mins.values())
    spread = (hi - lo) / lo
    _, report = run_tune(cfg)
    passed = spread <= 0.01 and report["kernels_agree"]
    return _record(4, passed, f"min R_test limit spread {spread:.4f}; after tune max gap "
                              f"{report['max_pooled_z']:.2f} pooled SE over {len(report['realized'])} kernels")


def criterion_5():
    seed = 0
    cfg = load_config()
    checks = [check_train_test_relation(cfg), check_identity_simplification(cfg), check_dual_primal(seed)]
    checks += check_woodbury(seed) + check_centering(seed)
    bad = [c["name"] for c in checks if not c["passed"]]
    worst = ", ".join(f"{c['name']}={c['measured']:.1e}" for c in checks)
    return _record(5, not bad, worst if not bad else f"failed: {bad}; {worst}")


def criterion_6():
    checks = check_fixed_point()
    return _record(6, all(c["passed"] for c in checks),
                   ", ".join(f"{c['name']}={c['measured']:.1e}" for c in checks))


def criterion_7(instances=50, n=200, p=100):
    f = datagen.target_sin(p)
    sd = math.sqrt(0.5)
    ident = CovarianceModel.identity(p)
    ms = np.linspace(20.0 / 10_000, 20.0, 10_000)
    worst = -math.inf
    for i in range(instances):
        X = datagen.sample_design(n, ident, "gaussian", derive_seed(1000 + i, 0))
        y = datagen.make_labels(X, f, sd, derive_seed(1000 + i, 1))
        inp = EstimatorInputs(X, y)
        m_star = optimal_m_identity(inp.A, inp.var_y, n, p)
        at_star = float(identity_objective(m_star, inp.A, inp.var_y, n, p))
        grid_min = float(np.min(identity_objective(ms, inp.A, inp.var_y, n, p)))
        worst = max(worst, at_star - grid_min)
    closed_ok = worst <= 1e-8

    cfg = load_config(covariance={"kind": "identity"}, n_rep=1)
    res, _ = run_tune(cfg)
    stacked, _ = run_sweep_raw(cfg)
    step = math.log(cfg.lambdas[1] / cfg.lambdas[0])
    offsets = {}
    for spec in cfg.kernel_specs:
        lam_star = res.lambda_star[spec.name]
        j = int(np.argmin(stacked[spec.name]["thm2"][0]))
        if lam_star == "unreachable":
            # z* lies below this kernel's reachable range: the sweep minimum must sit at the grid edge
            offsets[spec.name] = 0.0 if j == 0 else math.inf
            continue
        offsets[spec.name] = abs(math.log(cfg.lambdas[j] / lam_star)) / step
    tune_ok = all(v <= 1.0 for v in offsets.values())
    off = ", ".join(f"{k}: {v:.2f}" for k, v in sorted(offsets.items()))
    return _record(7, closed_ok and tune_ok,
                   f"max(obj(m*) - grid min) = {worst:.2e} over {instances} instances; "
                   f"z*={res.z_star:.4f}, sweep argmin offset in grid steps [{off}]")


def criterion_8():
    c = check_linearization(0)
    return _record(8, c["passed"], "||K - K_inf||/sqrt(n) at n=p=100,200,400: "
                   + ", ".join(f"{v:.4f}" for v in c["norms"]))


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]


@pytest.mark.parametrize("fn", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 9)])
def test_criterion(fn):
    passed, detail = fn()
    print(f"{fn.__name__}: {'PASS' if passed else 'FAIL'} - {detail}")
    assert passed, detail


if __name__ == "__main__":
    for fn in CRITERIA:
        ok, detail = fn()
        print(f"{fn.__name__}: {'PASS' if ok else 'FAIL'} - {detail}", flush=True)
