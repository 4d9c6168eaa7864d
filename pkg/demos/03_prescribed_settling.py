"""The settling time is a design parameter: k = pi / (2 T_p).

One expsum instance is solved for several T_p and several initial scales.
The measured settling time always stays below T_p, and from unit
initialization it matches arctan(||z(0)||) / k.
"""
import math

from hmcpflow import SolverConfig, solve
from hmcpflow.harness import generate_random

p = generate_random("expsum", 5, 2, seed=0)
print("   T_p    measured   arctan(r0)/k   final ||z||")
for tp in (1.0, 0.5, 0.1, 0.01):
    r = solve(p, SolverConfig(T_p=tp))
    r0 = r.trajectory.residual_norms[0]
    predicted = math.atan(r0) / (math.pi / (2 * tp))
    print(f"{tp:6.2f}  {r.settle_time:10.6f}   {predicted:12.6f}   {r.residual_norm:.1e}")

print("\n scale   ||z(0)||   settle t   final ||z||")
for c in (1, 10, 80):
    r = solve(p, SolverConfig(init_scale=c))
    print(f"{c:6d}  {r.trajectory.residual_norms[0]:9.2e}   {r.settle_time:.6f}   {r.residual_norm:.1e}")
