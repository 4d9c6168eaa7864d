"""Homogeneous embedding of the KKT complementarity problem.

The embedding adds two scalars, ``tau`` and ``kappa``, and works with
``x_hat = (xb, tau)``, ``s_hat = (sb, kappa)`` and the degree-one
homogeneous map::

    psi(xb, tau) = ( tau * phi(xb / tau),  -xb . phi(xb / tau) )

A maximal complementary solution has either ``tau > 0`` (the program is
solved by ``xb / tau``) or ``kappa > 0`` (it is infeasible).

All formulas below are rearranged so that no large intermediate
``xb / tau`` terms cancel: the constraint part of ``grad phi`` is
skew-symmetric, so its contributions are applied analytically.  This keeps
``psi`` accurate while ``tau -> 0`` on infeasible problems.

Near a solution ``psi(x_hat) - s_hat`` is a small difference of O(1)
terms, and the flows divide it by a nearly singular Jacobian (solutions
form a ray, along which the Jacobian is singular).  For the built-in
families the residual is therefore accumulated in ``np.longdouble``
before being rounded back to double precision.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .problem import ConvexProgram, Family

#: Lower clamp for ``tau`` inside ``psi``.
TAU_MIN = 1e-12


@dataclass(frozen=True)
class HMCPState:
    x_hat: np.ndarray
    s_hat: np.ndarray

    @property
    def tau(self) -> float:
        return float(self.x_hat[-1])

    @property
    def kappa(self) -> float:
        return float(self.s_hat[-1])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.x_hat, self.s_hat])

    @classmethod
    def from_vector(cls, w) -> "HMCPState":
        w = np.asarray(w, dtype=float)
        half = w.size // 2
        return cls(w[:half].copy(), w[half:].copy())

    @classmethod
    def ones(cls, program: ConvexProgram, scale: float = 1.0) -> "HMCPState":
        d = program.n + program.m + 1
        return cls(np.full(d, float(scale)), np.full(d, float(scale)))


@dataclass(frozen=True)
class OutcomeThresholds:
    tau_floor: float = 1e-8
    ratio: float = 1.0
    residual_tol: float = 1e-6

    def __post_init__(self):
        if min(self.tau_floor, self.ratio, self.residual_tol) <= 0:
            raise ValueError("outcome thresholds must be positive")


class Outcome(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class Classification:
    outcome: Outcome
    tau: float
    kappa: float
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    s: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    #: ``(xb / kappa, sb / kappa)`` when infeasible.
    certificate: Optional[tuple] = None


class PsiEval(NamedTuple):
    value: np.ndarray
    jacobian: Optional[np.ndarray]
    tau_clamped: bool
    exp_capped: bool


def evaluate_psi(program: ConvexProgram, x_hat, jacobian: bool = True) -> PsiEval:
    """Evaluate ``psi`` (and optionally its Jacobian) in one pass."""
    x_hat = np.asarray(x_hat, dtype=float)
    n, m = program.n, program.m
    if x_hat.shape != (n + m + 1,):
        raise ValueError(f"expected x_hat of length {n + m + 1}, got {x_hat.shape}")
    x, y, tau = x_hat[:n], x_hat[n : n + m], x_hat[-1]
    clamped = not tau >= TAU_MIN
    if clamped:
        tau = TAU_MIN
    xu, yu = x / tau, y / tau
    capped = program.exp_capped(xu)
    # products of capped exponentials with a huge xb / tau can still
    # overflow; those entries are saturated so evaluations stay finite
    with np.errstate(over="ignore" if capped else "warn", invalid="ignore" if capped else "warn"):
        value, jac = _psi_parts(program, x, y, tau, xu, yu, jacobian)
    if capped:
        value = _saturate(value)
        jac = None if jac is None else _saturate(jac)
    return PsiEval(value, jac, clamped, capped)


def _psi_parts(program, x, y, tau, xu, yu, jacobian):
    n, m = program.n, program.m
    grad = program.gradient(xu)
    J = program.constraint_jacobian(xu)
    off_g = program.constraint_offset(xu)
    value = np.concatenate([tau * grad + J.T @ y, -tau * off_g - J @ x, [-(x @ grad) + y @ off_g]])
    if not jacobian:
        return value, None
    H = program.weighted_hessian(xu, yu)
    Hxu = H @ xu
    d = n + m
    jac = np.zeros((d + 1, d + 1))
    jac[:n, :n] = H
    jac[:n, n:d] = J.T
    jac[n:d, :n] = -J
    jac[:n, d] = program.gradient_offset(xu, yu)
    jac[n:d, d] = -off_g
    jac[d, :n] = -(grad + Hxu)
    jac[d, n:d] = off_g
    jac[d, d] = xu @ Hxu
    return value, jac


def _saturate(a):
    big = np.finfo(float).max
    return np.nan_to_num(a, nan=0.0, posinf=big, neginf=-big)


def psi(program: ConvexProgram, x_hat) -> np.ndarray:
    return evaluate_psi(program, x_hat, jacobian=False).value


def psi_jacobian(program: ConvexProgram, x_hat) -> np.ndarray:
    return evaluate_psi(program, x_hat).jacobian


def psi_residual(program: ConvexProgram, x_hat, s_hat, value: Optional[np.ndarray] = None) -> np.ndarray:
    """``psi(x_hat) - s_hat``, in extended precision for lp, qp and expsum.

    ``value`` is a double-precision ``psi(x_hat)`` to fall back on (it is
    computed when missing) for generic programs and capped exponentials.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    s_hat = np.asarray(s_hat, dtype=float)
    if program.affine and not program.exp_capped(x_hat[: program.n] / max(x_hat[-1], TAU_MIN)):
        return (_psi_extended(program, x_hat) - s_hat.astype(np.longdouble)).astype(float)
    if value is None:
        value = psi(program, x_hat)
    return value - s_hat


def _psi_extended(program, x_hat):
    L = np.longdouble
    n, m = program.n, program.m
    w = x_hat.astype(L)
    x, y, tau = w[:n], w[n : n + m], max(w[-1], L(TAU_MIN))
    A, b = program.A.astype(L), program.b.astype(L)
    if program.family is Family.LP:
        c = program.c.astype(L)
        top, xg = tau * c, x @ c
    elif program.family is Family.QP:
        c, Q = program.c.astype(L), program.Q.astype(L)
        Qx = Q @ x
        top, xg = Qx + tau * c, (x @ Qx) / tau + x @ c
    else:
        e = np.exp(x / tau)
        top, xg = tau * e, x @ e
    return np.concatenate([top - A.T @ y, A @ x - tau * b, [y @ b - xg]])


def residual_z(program: ConvexProgram, state: HMCPState) -> np.ndarray:
    """Stacked residual ``(psi(x_hat) - s_hat, x_hat * s_hat)``."""
    return np.concatenate([psi_residual(program, state.x_hat, state.s_hat), state.x_hat * state.s_hat])


def classify(program: ConvexProgram, state: HMCPState, residual_norm: float,
             thresholds: OutcomeThresholds = OutcomeThresholds()) -> Classification:
    """Read off the outcome from a (nearly) settled state.

    Ties ``tau == kappa`` go to OPTIMAL.  Tiny ``tau`` and ``kappa`` or a
    large residual give INDETERMINATE.
    """
    n, m = program.n, program.m
    tau, kappa = state.tau, state.kappa
    x_bar, s_bar = state.x_hat[:-1], state.s_hat[:-1]
    if residual_norm > thresholds.residual_tol or max(tau, kappa) <= thresholds.tau_floor:
        return Classification(Outcome.INDETERMINATE, tau, kappa)
    if tau >= thresholds.ratio * kappa and tau > thresholds.tau_floor:
        return Classification(Outcome.OPTIMAL, tau, kappa,
                              x=x_bar[:n] / tau, y=x_bar[n:] / tau,
                              s=s_bar[:n] / tau, v=s_bar[n:] / tau)
    if kappa > thresholds.ratio * tau and kappa > thresholds.tau_floor:
        return Classification(Outcome.INFEASIBLE, tau, kappa, certificate=(x_bar / kappa, s_bar / kappa))
    return Classification(Outcome.INDETERMINATE, tau, kappa)
