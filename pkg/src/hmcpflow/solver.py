"""End-to-end solves: embed, integrate to the prescribed time, classify."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .flows import (FlowSingularityError, Scheme, full_hmcp_rhs, gradient_flow_rhs,
                    newton_flow_rhs, prescribe_gain, residual_decay_rate)
from .hmcp import (Classification, HMCPState, Outcome, OutcomeThresholds, classify,
                   residual_z)
from .integrator import IntegratorConfig, Trajectory, integrate
from .mcp import KKTResidual, kkt_residual
from .problem import ConvexProgram


@dataclass(frozen=True)
class SolverConfig:
    T_p: float = 1.0
    mu: float = 2.0
    init_scale: float = 1.0
    thresholds: OutcomeThresholds = field(default_factory=OutcomeThresholds)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    record_trajectory: bool = True

    def __post_init__(self):
        if not (self.T_p > 0 and self.init_scale > 0 and self.mu > 1):
            raise ValueError("SolverConfig needs T_p > 0, init_scale > 0 and mu > 1")


@dataclass
class SolveReport:
    outcome: Outcome
    x_star: Optional[np.ndarray] = None
    y_star: Optional[np.ndarray] = None
    certificate: Optional[tuple] = None
    kkt: Optional[KKTResidual] = None
    tau: Optional[float] = None
    kappa: Optional[float] = None
    residual_norm: float = float("nan")
    settle_time: Optional[float] = None
    duration: float = 0.0
    gain: float = float("nan")
    min_component: float = float("nan")
    message: str = ""
    classification: Optional[Classification] = None
    final_state: Optional[np.ndarray] = None
    trajectory: Optional[Trajectory] = None

    @property
    def x_recovered(self) -> Optional[np.ndarray]:
        return self.x_star


def hmcp_vector_field(program: ConvexProgram, k: float, mu: float = 2.0):
    """``(rhs, residual)`` callables on the stacked vector ``(x_hat, s_hat)``."""

    def rhs(w):
        dx, ds = full_hmcp_rhs(program, HMCPState.from_vector(w), k, mu)
        return np.concatenate([dx, ds])

    def residual(w):
        return residual_z(program, HMCPState.from_vector(w))

    return rhs, residual


#: clock allowed past the point where an exact flow would reach the stop residual
CLOCK_MARGIN = 8.0


def solve(program: ConvexProgram, config: SolverConfig = SolverConfig()) -> SolveReport:
    """Solve ``program`` by integrating the homogeneous flow to ``T_p``.

    The state starts at ``init_scale`` times the all-ones vector.  When the
    residual settles before ``T_p`` the state is read at the settling time.
    Integration failures give an INDETERMINATE report, never an exception.

    The flow drives ``||z||`` to zero at the rate ``residual_decay_rate``,
    so it is stepped on the clock ``-log(||z|| / ||z(0)||)``; physical time
    is integrated alongside.
    """
    start = time.perf_counter()
    k = prescribe_gain(config.T_p, config.mu, Scheme.FULL_HMCP)
    state0 = HMCPState.ones(program, config.init_scale)
    rhs, residual = hmcp_vector_field(program, k, config.mu)

    def speed(w):
        return residual_decay_rate(np.linalg.norm(residual(w)), k, config.mu)

    r0 = float(np.linalg.norm(residual(state0.to_vector())))
    clock = max(math.log(r0 / config.integrator.stop_residual), 0.0) + CLOCK_MARGIN
    traj = integrate(rhs, state0.to_vector(), config.T_p, config.integrator,
                     residual=residual, nonnegative=True, time_scale=speed, clock_limit=clock, ray=True)
    final = HMCPState.from_vector(traj.final_state)
    r = float(np.linalg.norm(residual(traj.final_state)))
    report = SolveReport(Outcome.INDETERMINATE, tau=final.tau, kappa=final.kappa, residual_norm=r,
                         settle_time=traj.settle_time, gain=k, min_component=traj.min_component,
                         final_state=traj.final_state,
                         trajectory=traj if config.record_trajectory else None)
    if traj.failed:
        report.message = traj.stop_event.message
        report.classification = Classification(Outcome.INDETERMINATE, final.tau, final.kappa)
    else:
        cls = classify(program, final, r, config.thresholds)
        report.classification = cls
        report.outcome = cls.outcome
        if cls.outcome is Outcome.OPTIMAL:
            x = cls.x if program.recover is None else program.recover(cls.x)
            report.x_star, report.y_star = x, cls.y
            report.kkt = kkt_residual(program, cls.x, cls.y)
        elif cls.outcome is Outcome.INFEASIBLE:
            report.certificate = cls.certificate
    report.duration = time.perf_counter() - start
    return report


@dataclass(frozen=True)
class SmoothObjective:
    """Unconstrained objective with exact first and second derivatives."""

    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]


def solve_unconstrained(oracle, scheme: Scheme, T_p: float, x0, m_f: Optional[float] = None,
                        mu: float = 2.0, integrator: IntegratorConfig = IntegratorConfig(),
                        grad_tol: float = 1e-6) -> SolveReport:
    """Minimize a strongly convex function with the gradient or Newton flow.

    ``oracle`` needs ``grad`` (and ``hess`` for the Newton flow).  The
    report carries the terminal point in ``x_star`` and ``||grad f||`` in
    ``residual_norm``; it is OPTIMAL when that norm is at most ``grad_tol``.
    """
    scheme = Scheme(scheme)
    if scheme not in (Scheme.GRADIENT, Scheme.NEWTON):
        raise ValueError("solve_unconstrained supports the gradient and Newton flows only")
    start = time.perf_counter()
    k = prescribe_gain(T_p, mu, scheme, m_f)

    def grad(x):
        return np.asarray(oracle.grad(x), dtype=float)

    if scheme is Scheme.GRADIENT:
        def rhs(x):
            return gradient_flow_rhs(grad(x), k, mu)
    else:
        def rhs(x):
            return newton_flow_rhs(grad(x), oracle.hess(x), k, mu)

    try:
        traj = integrate(rhs, np.asarray(x0, dtype=float), T_p, integrator, residual=grad)
    except FlowSingularityError as exc:
        return SolveReport(Outcome.INDETERMINATE, gain=k, message=str(exc),
                           duration=time.perf_counter() - start)
    x = traj.final_state
    r = float(np.linalg.norm(grad(x)))
    ok = not traj.failed and r <= grad_tol
    return SolveReport(Outcome.OPTIMAL if ok else Outcome.INDETERMINATE, x_star=x, residual_norm=r,
                       settle_time=traj.settle_time, gain=k, min_component=traj.min_component,
                       message=traj.stop_event.message, final_state=x, trajectory=traj,
                       duration=time.perf_counter() - start)
