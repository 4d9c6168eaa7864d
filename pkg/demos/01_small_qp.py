"""Solve a two-variable QP with the homogeneous flow and check it against the oracle.

    min  x1^2 + x2^2 / 2 - x1 - x2   s.t.  x1 + x2 >= 2,  x >= 0

The constraint is active at the optimum x* = (2/3, 4/3) with multiplier 1/3.
"""
import numpy as np

from hmcpflow import make_qp, solve, SolverConfig
from hmcpflow.oracle import reference_solution

p = make_qp([[2.0, 0.0], [0.0, 1.0]], [-1.0, -1.0], [[1.0, 1.0]], [2.0])
report = solve(p, SolverConfig(T_p=1.0))
ref = reference_solution(p)

print(f"outcome        {report.outcome.value}")
print(f"x from flow    {np.round(report.x_star, 10)}")
print(f"x from oracle  {ref.x}")
print(f"multiplier     {report.y_star[0]:.10f} (oracle {ref.y[0]:.10f})")
print(f"tau, kappa     {report.tau:.3e}, {report.kappa:.3e}")
print(f"settled at t = {report.settle_time:.6f} with ||z|| = {report.residual_norm:.1e}")
print(f"KKT residuals  {tuple(f'{v:.1e}' for v in report.kkt)}")

# the residual follows tan(arctan(r0) - k t) until it reaches zero
traj = report.trajectory
for t, r in list(zip(traj.times, traj.residual_norms))[::40]:
    print(f"  t = {t:5.3f}   ||z|| = {r:.3e}")
