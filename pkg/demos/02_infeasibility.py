"""Infeasibility detection: append a contradictory constraint and watch tau collapse.

A random LP is made infeasible by adding a constraint that contradicts the
first one.  The flow still settles by T_p, but now kappa ends above tau and
the terminal (x_hat, s_hat) is returned as a certificate.
"""
import numpy as np

from hmcpflow import augment_infeasible, solve
from hmcpflow.harness import generate_random

base = generate_random("lp", 5, 2, seed=7)
for name, p in (("original", base), ("augmented", augment_infeasible(base))):
    r = solve(p)
    print(f"{name:10s} {r.outcome.value:12s} tau = {r.tau:.2e}  kappa = {r.kappa:.2e}"
          f"  settle t = {r.settle_time:.4f}")
    if r.certificate is not None:
        xb, sb = r.certificate
        print(f"{'':10s} certificate components are nonnegative: "
              f"{bool(np.all(xb >= -1e-9) and np.all(sb >= -1e-9))}")
