"""KKT conditions of a convex program as a monotone complementarity problem.

With ``xb = (x, y)`` stacked, the KKT map is::

    phi(xb) = ( grad f(x) + jac g(x)' y ,  -g(x) )

and the KKT system reads ``sb = phi(xb) >= 0, xb >= 0, xb * sb = 0``.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .problem import ConvexProgram


class KKTResidual(NamedTuple):
    stationarity: float
    feasibility: float
    complementarity: float

    def max(self) -> float:
        return max(self)


def split(program: ConvexProgram, x_bar):
    x_bar = np.asarray(x_bar, dtype=float)
    if x_bar.shape != (program.n + program.m,):
        raise ValueError(f"expected a vector of length {program.n + program.m}, got {x_bar.shape}")
    return x_bar[: program.n], x_bar[program.n :]


def phi(program: ConvexProgram, x_bar) -> np.ndarray:
    x, y = split(program, x_bar)
    J = program.constraint_jacobian(x)
    return np.concatenate([program.gradient(x) + J.T @ y, -program.constraints(x)])


def phi_jacobian(program: ConvexProgram, x_bar) -> np.ndarray:
    """Dense Jacobian ``[[H_w, J'], [-J, 0]]`` of :func:`phi`."""
    x, y = split(program, x_bar)
    n, m = program.n, program.m
    J = program.constraint_jacobian(x)
    out = np.zeros((n + m, n + m))
    out[:n, :n] = program.weighted_hessian(x, y)
    out[:n, n:] = J.T
    out[n:, :n] = -J
    return out


def monotone_gap(program: ConvexProgram, x_bar1, x_bar2) -> float:
    """``(xb1 - xb2) . (phi(xb1) - phi(xb2))``; nonnegative for convex programs."""
    d = np.asarray(x_bar1, dtype=float) - np.asarray(x_bar2, dtype=float)
    return float(d @ (phi(program, x_bar1) - phi(program, x_bar2)))


def kkt_residual(program: ConvexProgram, x, y) -> KKTResidual:
    """Three-block KKT residual of a primal-dual pair.

    stationarity    ``||min(phi_x, 0)|| + ||min(x, 0)||``
    feasibility     ``||max(g(x), 0)||``
    complementarity ``|x . phi_x| + |y . g(x)|``

    where ``phi_x = grad f(x) + jac g(x)' y`` is the reduced cost.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = program.constraints(x)
    phi_x = program.gradient(x) + program.constraint_jacobian(x).T @ y
    stationarity = np.linalg.norm(np.minimum(phi_x, 0.0)) + np.linalg.norm(np.minimum(x, 0.0))
    feasibility = np.linalg.norm(np.maximum(g, 0.0))
    complementarity = abs(x @ phi_x) + abs(y @ g)
    return KKTResidual(float(stationarity), float(feasibility), float(complementarity))
