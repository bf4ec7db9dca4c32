"""Experiment harness: lambda sweeps, real-data permutations, tuning and validation.

Every experiment is driven by an :class:`ExperimentConfig`; the defaults
reproduce the synthetic setting n=200, p=100, Sigma = {0.4^|i-j|},
sigma^2 = 0.5, f(x) = sin(1^T x / sqrt(p)).
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
import csv
import io
import json
import math
import os
import re
import tempfile
import time
import warnings

import numpy as np

from . import datagen
from .asymptotics import limit_train_risk, limit_test_risk, mc_moments, sin_moments
from .datagen import DESIGN, NOISE, TEST, TEST_NOISE, derive_seed, replicate_seed
from .errors import ConfigError, InstabilityWarning
from .estimators import EstimatorInputs, _rescale, identity_objective, thm2_estimate_general_grid
from .kernels import KernelSpec, kernel_scalars, tau_from_data
from .regression import SpectralPath, prediction_risk_mc
from .rmt import SpectralModel, empirical_stieltjes, gram_eigenvalues, stieltjes_fixed_point, z_of_lambda
from .tuning import Z_MAX, Z_MIN, optimize_z_general, tune_identity

SWEEP_COLUMNS = (
    "kernel", "lambda", "r_train", "r_train_limit", "r_test_mc", "r_test_mc_se",
    "r_test_limit", "r_hat_lemma2", "r_hat_thm2", "n_rep", "seed",
)
REALDATA_COLUMNS = (
    "kernel", "lambda", "r_train", "r_test_mc", "r_test_mc_se",
    "r_hat_lemma2", "r_hat_thm2", "n_rep", "seed",
)

DEFAULT_KERNELS = (
    {"family": "linear", "alpha": 1.0, "beta": 0.0},
    {"family": "polynomial", "alpha": 1.0, "beta": 1.0, "degree": 2},
    {"family": "sigmoid", "alpha": 1.0, "beta": -1.0},
    {"family": "exponential", "alpha": 1.0, "beta": 0.0},
)
MODES = ("sweep", "realdata", "tune", "validate")


@dataclass
class ExperimentConfig:
    mode: str = "sweep"
    n: int = 200
    p: int = 100
    sigma2: float = 0.5
    covariance: dict = field(default_factory=lambda: {"kind": "toeplitz", "rho": 0.4})
    distribution: str = "gaussian"
    target: str = "sin"
    kernels: list = field(default_factory=lambda: [dict(k) for k in DEFAULT_KERNELS])
    lambda_grid: dict = field(default_factory=lambda: {"min": 1e-3, "max": 1e2, "count": 30})
    n_test: int = 1000
    n_rep: int = 50
    base_seed: int = 0
    input_csv: str = None
    train_fraction: float = 0.6
    n_permutations: int = 500
    output: str = None
    var_ddof: int = 0
    tune_method: str = "auto"
    z_range: list = field(default_factory=lambda: [-Z_MAX, -Z_MIN])
    moment_samples: int = 100_000

    @property
    def lambdas(self):
        g = self.lambda_grid
        return np.logspace(math.log10(g["min"]), math.log10(g["max"]), int(g["count"]))

    @property
    def kernel_specs(self):
        return [KernelSpec.from_dict(k) for k in self.kernels]

    def covariance_model(self):
        return datagen.covariance_from_config(self.covariance, self.p)

    def validate(self, source=None):
        def bad(key, msg):
            raise ConfigError(_located(source, key, msg))

        if self.mode not in MODES:
            bad("mode", f"mode must be one of {MODES}, got {self.mode!r}")
        for key in ("n", "p", "n_test", "n_rep", "n_permutations", "base_seed", "var_ddof"):
            if isinstance(getattr(self, key), bool) or not isinstance(getattr(self, key), int):
                bad(key, f"{key} must be an integer, got {getattr(self, key)!r}")
        for key in ("sigma2", "train_fraction"):
            if isinstance(getattr(self, key), bool) or not isinstance(getattr(self, key), (int, float)):
                bad(key, f"{key} must be a number, got {getattr(self, key)!r}")
        for key in ("n", "p", "n_test", "n_rep", "n_permutations"):
            if getattr(self, key) < 1:
                bad(key, f"{key} must be >= 1")
        if self.n < 2:
            bad("n", "n must be >= 2")
        if self.sigma2 < 0:
            bad("sigma2", "sigma2 must be >= 0")
        g = self.lambda_grid
        try:
            lo, hi, cnt = float(g["min"]), float(g["max"]), int(g["count"])
        except (KeyError, TypeError, ValueError):
            bad("lambda_grid", "lambda_grid needs numeric min, max, count")
        if not (lo > 0 and (hi > lo or (cnt == 1 and hi == lo)) and cnt >= 1):
            bad("lambda_grid", "lambda grid must be positive and strictly increasing")
        if not 0 < self.train_fraction < 1:
            bad("train_fraction", "train_fraction must lie in (0, 1)")
        if self.distribution not in ("gaussian", "rademacher"):
            bad("distribution", f"unknown distribution {self.distribution!r}")
        if self.target not in datagen.TARGETS:
            bad("target", f"unknown target {self.target!r}")
        if self.tune_method not in ("auto", "identity", "general"):
            bad("tune_method", f"unknown tune_method {self.tune_method!r}")
        if not (len(self.z_range) == 2 and self.z_range[0] < self.z_range[1] < 0):
            bad("z_range", "z_range must be [z_lo, z_hi] with z_lo < z_hi < 0")
        try:
            specs = self.kernel_specs
            self.covariance_model()
        except (KeyError, ValueError, TypeError) as exc:
            key = "kernels" if "kernel" in str(exc) or "g'(0)" in str(exc) or "degree" in str(exc) else "covariance"
            bad(key, str(exc))
        if not specs:
            bad("kernels", "at least one kernel is required")
        if self.mode == "realdata" and not self.input_csv:
            bad("input_csv", "realdata mode needs input_csv")
        return self


def _located(source, key, msg):
    if source is None:
        return msg
    path, text = source
    for i, line in enumerate(text.splitlines(), start=1):
        if re.search(r'"%s"\s*:' % re.escape(key), line):
            return f"{path}:{i}: {msg}"
    return f"{path}: {msg}"


def load_config(path=None, **overrides):
    """Read a JSON config (or start from defaults) and apply non-None overrides."""
    data, source = {}, None
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}:1: top level must be a JSON object")
        source = (path, text)
    known = {f.name for f in fields(ExperimentConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(_located(source, key, f"unknown config field {key!r}"))
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate(source)


@dataclass
class SweepRow:
    kernel: str
    lam: float
    r_train: float
    r_test_mc: float
    r_test_mc_se: float
    r_hat_lemma2: float
    r_hat_thm2: float
    n_rep: int
    seed: int
    r_train_limit: float = float("nan")
    r_test_limit: float = float("nan")

    def as_record(self, columns):
        rec = asdict(self)
        rec["lambda"] = rec.pop("lam")
        return [rec[c] for c in columns]


def _workers():
    env = os.environ.get("CKRR_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"CKRR_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _map(fn, items):
    items = list(items)
    nw = min(_workers(), len(items))
    if nw <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=nw) as ex:
        return list(ex.map(fn, items))


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(rows, columns, path):
    """Write rows atomically: temp file in the target directory, then rename."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row.as_record(columns)])
    target = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(target), prefix=".ckrr-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _moments(cfg, sigma, f):
    if cfg.target == "sin":
        return sin_moments(sigma)
    return mc_moments(f, sigma, cfg.moment_samples, seed=derive_seed(cfg.base_seed, 99))


def sweep_limits(cfg, sigma=None, mom=None):
    """R_train and R_test limits for every (kernel, lambda) of the config."""
    sigma = cfg.covariance_model() if sigma is None else sigma
    f = datagen.TARGETS[cfg.target](cfg.p)
    mom = _moments(cfg, sigma, f) if mom is None else mom
    model = SpectralModel.from_covariance(sigma, cfg.n)
    out = {}
    for spec in cfg.kernel_specs:
        sc = kernel_scalars(spec, sigma.tau)
        tr, te, ms = [], [], []
        m0 = None
        for lam in cfg.lambdas:
            z = z_of_lambda(lam, sc)
            m = stieltjes_fixed_point(model, z, m0=m0).m
            m0 = m
            tr.append(limit_train_risk(mom, sigma, cfg.n, cfg.p, cfg.sigma2, m, model.c, lam, sc.g0p))
            te.append(limit_test_risk(mom, sigma, cfg.n, cfg.p, cfg.sigma2, m))
            ms.append(m)
        out[spec.name] = (np.array(tr, dtype=float), np.array(te), np.array(ms))
    return out


def estimator_form(cfg):
    """Which training-data risk estimate the sweep reports and tune minimises."""
    if cfg.tune_method == "auto":
        return "identity" if cfg.covariance.get("kind") == "identity" else "general"
    return cfg.tune_method


def _thm2_grid(form, inp, zs, m_hat):
    if form == "identity":
        return identity_objective(m_hat, inp.A, inp.var_y, inp.n, inp.p, inp.sigma2)
    return thm2_estimate_general_grid(inp, zs, m_hat)


def _sweep_replicate(cfg, sigma, f, r):
    """All per-replicate quantities, keyed by kernel name; arrays over the lambda grid."""
    rs = replicate_seed(cfg.base_seed, r)
    X = datagen.sample_design(cfg.n, sigma, cfg.distribution, derive_seed(rs, DESIGN))
    y = datagen.make_labels(X, f, math.sqrt(cfg.sigma2), seed=derive_seed(rs, NOISE))
    S = datagen.sample_design(max(cfg.n_test, 2), sigma, cfg.distribution, derive_seed(rs, TEST))[: cfg.n_test]
    fx, fs = f(X), f(S)
    lams = cfg.lambdas
    inp = EstimatorInputs(X, y, sigma2=cfg.sigma2, var_ddof=cfg.var_ddof)
    form = estimator_form(cfg)
    out = {}
    for spec in cfg.kernel_specs:
        sc = kernel_scalars(spec, sigma.tau)
        zs = np.array([z_of_lambda(lam, sc) for lam in lams])
        m_hat = empirical_stieltjes(X, zs, eigs=inp.gram_eigs)
        path = SpectralPath(X, spec)
        r_train = path.empirical_risk(fx, lams, cfg.sigma2)
        pts = path.test_risk(fx, fs, S, lams, cfg.sigma2)
        r_test = pts.mean(axis=0)
        r_test_se = pts.std(axis=0, ddof=1) / math.sqrt(pts.shape[0]) if pts.shape[0] > 1 else np.zeros(len(lams))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InstabilityWarning)
            lem = np.array([_rescale(rt, m, inp.c, lam, sc.g0p, cfg.sigma2) for rt, m, lam in zip(r_train, m_hat, lams)])
        thm = _thm2_grid(form, inp, zs, m_hat)
        out[spec.name] = {
            "r_train": r_train, "r_test": r_test, "r_test_se": r_test_se,
            "lemma2": lem, "thm2": thm, "z": zs, "m_hat": m_hat,
        }
    return out


def run_sweep_raw(cfg):
    """Per-replicate arrays (replicate order preserved) plus the limits."""
    sigma = cfg.covariance_model()
    f = datagen.TARGETS[cfg.target](cfg.p)
    limits = sweep_limits(cfg, sigma)
    reps = _map(lambda r: _sweep_replicate(cfg, sigma, f, r), range(cfg.n_rep))
    stacked = {}
    for name in limits:
        stacked[name] = {key: np.stack([rep[name][key] for rep in reps]) for key in reps[0][name]}
    return stacked, limits


def run_sweep(cfg):
    """Lambda sweep over every configured kernel; writes a CSV if ``cfg.output`` is set."""
    stacked, limits = run_sweep_raw(cfg)
    rows = []
    R = cfg.n_rep
    for spec in sorted(cfg.kernel_specs, key=lambda s: s.name):
        name = spec.name
        st = stacked[name]
        tr_lim, te_lim, _ = limits[name]
        if R > 1:
            se = st["r_test"].std(axis=0, ddof=1) / math.sqrt(R)
        else:
            se = st["r_test_se"][0]
        for j, lam in enumerate(cfg.lambdas):
            rows.append(SweepRow(
                kernel=name, lam=float(lam),
                r_train=float(st["r_train"][:, j].mean()),
                r_test_mc=float(st["r_test"][:, j].mean()),
                r_test_mc_se=float(se[j]),
                r_hat_lemma2=float(st["lemma2"][:, j].mean()),
                r_hat_thm2=float(st["thm2"][:, j].mean()),
                n_rep=R, seed=int(cfg.base_seed),
                r_train_limit=float(tr_lim[j]), r_test_limit=float(te_lim[j]),
            ))
    if cfg.output:
        write_csv(rows, SWEEP_COLUMNS, cfg.output)
    return rows


def _realdata_permutation(cfg, X_all, y_all, r):
    rs = replicate_seed(cfg.base_seed, r)
    rng = np.random.default_rng(derive_seed(rs, DESIGN))
    N = X_all.shape[0]
    order = rng.permutation(N)
    n_train = int(math.floor(cfg.train_fraction * N))
    tr, te = order[:n_train], order[n_train:]
    Xtr, Xte = datagen.standardize(X_all[tr], X_all[te])
    sd = math.sqrt(cfg.sigma2)
    noise_rng = np.random.default_rng(derive_seed(rs, NOISE))
    ytr = y_all[tr] + sd * noise_rng.standard_normal(n_train)
    yte = y_all[te] + sd * np.random.default_rng(derive_seed(rs, TEST_NOISE)).standard_normal(te.size)
    lams = cfg.lambdas
    tau = tau_from_data(Xtr)
    inp = EstimatorInputs(Xtr, ytr, sigma2=cfg.sigma2, var_ddof=cfg.var_ddof)
    out = {}
    for spec in cfg.kernel_specs:
        sc = kernel_scalars(spec, tau)
        zs = np.array([z_of_lambda(lam, sc) for lam in lams])
        m_hat = empirical_stieltjes(Xtr, zs, eigs=inp.gram_eigs)
        path = SpectralPath(Xtr, spec)
        pred = path.predict(ytr, lams, Xte)  # (n_test, L)
        held_out = np.mean((pred - yte[:, None]) ** 2, axis=0) - cfg.sigma2
        r_train = path.empirical_risk_data(ytr, lams, cfg.sigma2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InstabilityWarning)
            lem = np.array([_rescale(rt, m, inp.c, lam, sc.g0p, cfg.sigma2) for rt, m, lam in zip(r_train, m_hat, lams)])
        thm = thm2_estimate_general_grid(inp, zs, m_hat)
        out[spec.name] = {"r_train": r_train, "r_test": held_out, "lemma2": lem, "thm2": thm}
    return out


def run_realdata(cfg, X_all=None, y_all=None):
    """Permutation experiment on a CSV dataset.

    Each permutation splits the rows, standardises features on the training
    split, adds N(0, sigma^2) noise to all responses, and compares the
    held-out MSE (minus sigma^2) to both training-only risk estimates.
    """
    if X_all is None:
        X_all, y_all, _ = datagen.load_csv(cfg.input_csv)
    N = X_all.shape[0]
    n_train = int(math.floor(cfg.train_fraction * N))
    if n_train < 2 or N - n_train < 1:
        raise datagen.InsufficientRows(f"{N} rows cannot be split with train_fraction={cfg.train_fraction}")
    perms = _map(lambda r: _realdata_permutation(cfg, X_all, y_all, r), range(cfg.n_permutations))
    R = cfg.n_permutations
    rows = []
    for spec in sorted(cfg.kernel_specs, key=lambda s: s.name):
        st = {key: np.stack([pm[spec.name][key] for pm in perms]) for key in perms[0][spec.name]}
        se = st["r_test"].std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros(len(cfg.lambdas))
        for j, lam in enumerate(cfg.lambdas):
            rows.append(SweepRow(
                kernel=spec.name, lam=float(lam),
                r_train=float(st["r_train"][:, j].mean()),
                r_test_mc=float(st["r_test"][:, j].mean()),
                r_test_mc_se=float(se[j]),
                r_hat_lemma2=float(st["lemma2"][:, j].mean()),
                r_hat_thm2=float(st["thm2"][:, j].mean()),
                n_rep=R, seed=int(cfg.base_seed),
            ))
    if cfg.output:
        write_csv(rows, REALDATA_COLUMNS, cfg.output)
    return rows


def tuning_data(cfg, sigma=None):
    """The training sample of replicate 0, i.e. the one a single-replicate sweep uses."""
    sigma = cfg.covariance_model() if sigma is None else sigma
    f = datagen.TARGETS[cfg.target](cfg.p)
    rs = replicate_seed(cfg.base_seed, 0)
    X = datagen.sample_design(cfg.n, sigma, cfg.distribution, derive_seed(rs, DESIGN))
    y = datagen.make_labels(X, f, math.sqrt(cfg.sigma2), seed=derive_seed(rs, NOISE))
    return X, y, f, sigma


def run_tune(cfg):
    """Tune z on replicate-0 data, map z* to each kernel's lambda*, then check by refitting."""
    X, y, f, sigma = tuning_data(cfg)
    method = estimator_form(cfg)
    kernels = cfg.kernel_specs
    if method == "identity":
        res = tune_identity(X, y, cfg.sigma2, kernels, tau=sigma.tau,
                            z_min=-cfg.z_range[1], z_max=-cfg.z_range[0])
    else:
        res = optimize_z_general(X, y, cfg.sigma2, cfg.z_range[0], cfg.z_range[1], kernels, tau=sigma.tau)
    seed = derive_seed(replicate_seed(cfg.base_seed, 0), TEST)
    realized = {}
    for spec in kernels:
        lam = res.lambda_star[spec.name]
        if lam == "unreachable":
            continue
        est = prediction_risk_mc(X, f, spec, lam, sigma, cfg.sigma2, cfg.n_test, cfg.n_rep, seed, cfg.distribution)
        realized[spec.name] = {"lambda": lam, "r_test_mc": est.mean, "se": est.se}
    names = sorted(realized)
    worst = 0.0
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            ra, rb = realized[a], realized[b]
            pooled = math.sqrt(ra["se"] ** 2 + rb["se"] ** 2)
            gap = abs(ra["r_test_mc"] - rb["r_test_mc"])
            worst = max(worst, gap / pooled if pooled > 0 else (0.0 if gap == 0 else math.inf))
    report = {
        "method": res.method,
        "m_star": res.m_star,
        "z_star": res.z_star,
        "r_hat_at_optimum": res.r_test_at_optimum,
        "lambda_star": res.lambda_star,
        "realized": realized,
        "max_pooled_z": worst,
        "kernels_agree": worst <= 2.0,
        "seed": int(cfg.base_seed),
    }
    if cfg.output:
        _write_json(report, cfg.output)
    return res, report


def _write_json(obj, path):
    target = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(target), prefix=".ckrr-", suffix=".json")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    os.replace(tmp, target)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def run_validate(cfg):
    """Execute the invariant suite; returns the JSON-ready report."""
    from .validation import run_checks

    t0 = time.time()
    checks = run_checks(cfg)
    report = {
        "passed": all(c["passed"] for c in checks),
        "n_checks": len(checks),
        "n_failed": sum(not c["passed"] for c in checks),
        "elapsed_s": round(time.time() - t0, 3),
        "checks": checks,
    }
    if cfg.output:
        _write_json(report, cfg.output)
    return report
