"""Reference solutions computed independently of the flow pipeline.

LP    enumeration of primal and dual vertices with a strong-duality check
QP    enumeration of active sets, each solved as an equality-constrained QP
ExpSum  log-barrier path following with damped Newton steps, started from
        an interior point found by a linear program
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .mcp import kkt_residual
from .problem import EXP_CAP, ConvexProgram, Family

#: enumeration is refused above this many candidate systems
ENUMERATION_BUDGET = 2 ** 20
FEAS_TOL = 1e-9


class OracleUnavailable(RuntimeError):
    """The reference oracle cannot handle this program."""


@dataclass(frozen=True)
class ReferenceSolution:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    objective: Optional[float] = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def reference_solution(program: ConvexProgram) -> ReferenceSolution:
    if program.n + program.m > 30:
        raise OracleUnavailable("reference oracles are limited to n + m <= 30")
    if program.family is Family.LP:
        return _lp(program)
    if program.family is Family.QP:
        return _qp(program)
    if program.family is Family.EXPSUM:
        return _expsum(program)
    raise OracleUnavailable(f"no reference oracle for family {program.family.value!r}")


def _stacked(program):
    """All constraints as ``G x >= h`` with the sign rows last."""
    n = program.n
    return np.vstack([program.A, np.eye(n)]), np.concatenate([program.b, np.zeros(n)])


def _vertices(G, h, size):
    """Feasible basic solutions of ``G v >= h`` with ``size`` active rows."""
    rows = G.shape[0]
    if math.comb(rows, size) > ENUMERATION_BUDGET:
        raise OracleUnavailable("enumeration budget exceeded")
    tol = FEAS_TOL * (1.0 + np.abs(h).max(initial=0.0))
    for act in itertools.combinations(range(rows), size):
        Ga = G[list(act)]
        if abs(np.linalg.det(Ga)) < 1e-12:
            continue
        v = np.linalg.solve(Ga, h[list(act)])
        if np.all(G @ v >= h - tol):
            yield v


def _lp(program):
    n, m = program.n, program.m
    c, A, b = program.c, program.A, program.b
    G, h = _stacked(program)
    best = None
    for v in _vertices(G, h, n):
        val = c @ v
        if best is None or val < best[0] - 1e-12:
            best = (val, v)
    if best is None:
        return ReferenceSolution("infeasible")
    # dual: max b'y  s.t.  A'y <= c, y >= 0, i.e. [-A'; I] y >= [-c; 0]
    Gd = np.vstack([-A.T, np.eye(m)])
    hd = np.concatenate([-c, np.zeros(m)])
    dual = None
    for y in _vertices(Gd, hd, m):
        val = b @ y
        if dual is None or val > dual[0] + 1e-12:
            dual = (val, y)
    if dual is None:
        return ReferenceSolution("unbounded")
    if abs(best[0] - dual[0]) > 1e-8 * (1.0 + abs(best[0])):
        raise OracleUnavailable("primal and dual vertex values disagree")
    return ReferenceSolution("optimal", best[1], dual[1], float(best[0]))


def _qp(program):
    n, m = program.n, program.m
    Q, c = program.Q, program.c
    G, h = _stacked(program)
    rows = n + m
    if 2 ** rows > ENUMERATION_BUDGET:
        raise OracleUnavailable("enumeration budget exceeded")
    tol = FEAS_TOL * (1.0 + np.abs(h).max(initial=0.0))
    feasible = _lp_feasible(program)
    if not feasible:
        return ReferenceSolution("infeasible")
    best = None
    for size in range(0, min(rows, n) + 1):
        for act in itertools.combinations(range(rows), size):
            act = list(act)
            Ga = G[act]
            K = np.zeros((n + size, n + size))
            K[:n, :n] = Q
            K[:n, n:] = -Ga.T
            K[n:, :n] = Ga
            rhs = np.concatenate([-c, h[act]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            x, lam = sol[:n], sol[n:]
            if np.any(G @ x < h - tol) or np.any(lam < -1e-10):
                continue
            val = 0.5 * x @ Q @ x + c @ x
            if best is None or val < best[0]:
                full = np.zeros(rows)
                full[act] = lam
                best = (val, x, full)
    if best is None:
        raise OracleUnavailable("no KKT pattern found")
    val, x, lam = best
    return ReferenceSolution("optimal", x, lam[:m], float(val))


def _lp_feasible(program) -> bool:
    res = linprog(np.zeros(program.n), A_ub=-program.A, b_ub=-program.b,
                  bounds=[(0, None)] * program.n, method="highs")
    return res.status == 0


def _interior_point(program):
    """Maximize the smallest slack ``t`` of ``A x - b >= t, x >= t``, ``t <= 1``."""
    n, m = program.n, program.m
    A, b = program.A, program.b
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    A_ub = np.vstack([np.hstack([-A, np.ones((m, 1))]), np.hstack([-np.eye(n), np.ones((n, 1))])])
    b_ub = np.concatenate([-b, np.zeros(n)])
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * n + [(None, 1.0)], method="highs")
    if res.status != 0:
        raise OracleUnavailable(f"phase-one LP failed: {res.message}")
    return res.x[:n], res.x[-1]


def _expsum(program, gap=1e-10):
    n, m = program.n, program.m
    A, b = program.A, program.b
    x, t_slack = _interior_point(program)
    if t_slack <= 1e-12:
        return ReferenceSolution("infeasible")

    def barrier(x, t):
        r = A @ x - b
        if np.any(r <= 0) or np.any(x <= 0):
            return math.inf
        return t * np.sum(np.exp(np.minimum(x, EXP_CAP))) - np.sum(np.log(r)) - np.sum(np.log(x))

    t = 1.0
    while True:
        for _ in range(200):
            r = A @ x - b
            e = np.exp(np.minimum(x, EXP_CAP))
            g = t * e - A.T @ (1.0 / r) - 1.0 / x
            H = np.diag(t * e + 1.0 / x ** 2) + A.T @ ((1.0 / r ** 2)[:, None] * A)
            dx = -np.linalg.solve(H, g)
            dec = -g @ dx
            if dec / 2 <= 1e-13:
                break
            step = 1.0
            if math.sqrt(dec) >= 0.25:
                # damped phase; inside the quadratic region full steps stay interior
                f0 = barrier(x, t)
                while barrier(x + step * dx, t) > f0 - 0.25 * step * dec and step > 1e-16:
                    step *= 0.5
            while np.any(x + step * dx <= 0) or np.any(A @ (x + step * dx) - b <= 0):
                step *= 0.5
            x = x + step * dx
        if (n + m) / t < gap:
            break
        t *= 10.0
    r = A @ x - b
    y = 1.0 / (t * r)
    x, y = _polish_expsum(program, x, y, r, 1.0 / (t * x))
    return ReferenceSolution("optimal", x, y, float(np.sum(np.exp(x))))


def _polish_expsum(program, x, y, r, s, iters=20):
    """Newton on the KKT equations of the active set read off the barrier
    solution.  The barrier duals ``1/(t r)`` lose digits when the slacks are
    tiny, the polished ones do not.  Falls back to the input if the active
    set does not reproduce a KKT point."""
    n, m = program.n, program.m
    A, b = program.A, program.b
    act = np.flatnonzero(y > r)
    fixed = np.flatnonzero(s > x)
    free = np.setdiff1d(np.arange(n), fixed)
    xp = x.copy()
    xp[fixed] = 0.0
    ya = y[act].copy()
    Aa = A[act]
    for _ in range(iters):
        e = np.exp(xp)
        # unknowns: x_free, y_act; equations: stationarity on free, A_act x = b_act
        F = np.concatenate([e[free] - Aa[:, free].T @ ya, Aa @ xp - b[act]])
        if np.abs(F).max(initial=0.0) < 1e-15:
            break
        k = free.size
        J = np.zeros((k + act.size, k + act.size))
        J[:k, :k] = np.diag(e[free])
        J[:k, k:] = -Aa[:, free].T
        J[k:, :k] = Aa[:, free]
        try:
            d = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return x, y
        xp[free] += d[:k]
        ya += d[k:]
    yp = np.zeros(m)
    yp[act] = ya
    sp = np.exp(xp) - A.T @ yp
    tol = 1e-9
    if (np.any(xp < -tol) or np.any(yp < -tol) or np.any(sp < -tol)
            or np.any(A @ xp - b < -tol) or np.abs(xp - x).max() > 1e-6):
        return x, y
    return np.maximum(xp, 0.0), np.maximum(yp, 0.0)


def check_reference(program: ConvexProgram, ref: ReferenceSolution) -> float:
    """Largest KKT residual block of an optimal reference solution."""
    return kkt_residual(program, ref.x, ref.y).max()
