"""Gradient and Newton flows on an ill-conditioned quadratic.

Both flows reach the minimizer by the prescribed time.  The gradient flow
needs the strong convexity modulus m_f to set its gain.  The Newton flow
needs no such constant and does not feel the conditioning of the Hessian.
"""
import numpy as np

from hmcpflow import Scheme, SmoothObjective, solve_unconstrained

H = np.diag([1.0, 10.0, 1e2, 1e3, 1e4])
b = np.ones(5)
obj = SmoothObjective(f=lambda x: 0.5 * x @ H @ x - b @ x, grad=lambda x: H @ x - b,
                      hess=lambda x: H)
x0 = np.full(5, 20.0)
for scheme, kw in ((Scheme.NEWTON, {}), (Scheme.GRADIENT, {"m_f": 1.0})):
    r = solve_unconstrained(obj, scheme, 1.0, x0, **kw)
    err = np.abs(r.x_star - np.linalg.solve(H, b)).max()
    print(f"{scheme.value:8s} gain {r.gain:.4f}  settled at {r.settle_time:.4f}"
          f"  ||grad f|| {r.residual_norm:.1e}  max error {err:.1e}  steps {r.trajectory.n_steps}")
