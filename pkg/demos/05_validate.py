"""Walk through the invariant checks run by ``ckrr validate``.

Identity checks are algebraic and hold to rounding error.  Statistical
checks (linearization decay, trace convention, deterministic equivalents)
carry the seed that reproduces them.
"""

from ckrr import load_config, run_validate

report = run_validate(load_config(mode="validate"))
for c in report["checks"]:
    flag = "ok  " if c["passed"] else "FAIL"
    print(f"{flag} [{c['kind']:11s}] {c['name']:36s} {c['measured']:.2e} (tol {c['tolerance']:.1e})")
    if c["name"].startswith("stieltjes_convention"):
        print(f"      n x n error {c['error_n_by_n']:.2e} vs p x p error {c['error_p_by_p']:.2e}")
print("all passed:", report["passed"])
