"""Command line entry point: ``ckrr sweep|realdata|tune|validate``."""

import argparse
import json
import sys

import numpy as np

from .errors import CkrrError, ConfigError
from .experiments import load_config, run_realdata, run_sweep, run_tune, run_validate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 1, 2, 3


def build_parser():
    ap = argparse.ArgumentParser(prog="ckrr", description="Centered kernel ridge regression experiments.")
    ap.add_argument("mode", choices=["sweep", "realdata", "tune", "validate"])
    ap.add_argument("--config", help="JSON config; defaults reproduce the n=200, p=100 synthetic setting")
    ap.add_argument("--seed", type=int, help="override base_seed")
    ap.add_argument("--out", help="output path (CSV for sweep/realdata, JSON otherwise)")
    ap.add_argument("--reps", type=int, help="override n_rep (n_permutations for realdata)")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {"mode": args.mode, "base_seed": args.seed, "output": args.out}
    if args.reps is not None:
        overrides["n_permutations" if args.mode == "realdata" else "n_rep"] = args.reps
    try:
        cfg = load_config(args.config, **overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.mode == "sweep":
            rows = run_sweep(cfg)
            if not cfg.output:
                _print_rows(rows)
        elif args.mode == "realdata":
            rows = run_realdata(cfg)
            if not cfg.output:
                _print_rows(rows)
        elif args.mode == "tune":
            _, report = run_tune(cfg)
            if not cfg.output:
                print(json.dumps(report, indent=2, sort_keys=True, default=float))
        else:
            report = run_validate(cfg)
            if not cfg.output:
                print(json.dumps(report, indent=2, sort_keys=True, default=float))
            for c in report["checks"]:
                print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['measured']:.3e} (tol {c['tolerance']:.1e})",
                      file=sys.stderr)
            if not report["passed"]:
                return EXIT_VALIDATION
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CkrrError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _print_rows(rows):
    for r in rows:
        print(f"{r.kernel:32s} lam={r.lam:<10.4g} train={r.r_train:.4f} test={r.r_test_mc:.4f} "
              f"lim={r.r_test_limit:.4f} lemma2={r.r_hat_lemma2:.4f} thm2={r.r_hat_thm2:.4f}")


if __name__ == "__main__":
    sys.exit(main())
