"""Choosing lambda without a validation set.

With Sigma = I the resolvent-based risk estimate depends on the data only
through A = y^T P (X X^T / n) P y and var(y), and its minimiser over m has a
closed form.  We map m* back to z* by inverting the empirical Stieltjes
transform, then to one lambda per kernel.  The held-out risks at those
lambdas should be statistically indistinguishable.
"""

from ckrr import load_config, run_tune

cfg = load_config(mode="tune", covariance={"kind": "identity"}, n=400, p=200, n_rep=30)
res, report = run_tune(cfg)

print(f"method {report['method']}: m* = {res.m_star:.4f}, z* = {res.z_star:.4f}")
print(f"estimated risk at the optimum: {res.r_test_at_optimum:.4f}")
for name, lam in sorted(res.lambda_star.items()):
    realized = report["realized"].get(name)
    tail = f"held-out {realized['r_test_mc']:.4f} +/- {realized['se']:.4f}" if realized else "z* not reachable"
    print(f"  {name:32s} lambda* = {lam if isinstance(lam, str) else f'{lam:.4g}':>12}  {tail}")
print("kernels agree within 2 pooled SE:", report["kernels_agree"])
