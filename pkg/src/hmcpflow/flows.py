"""Fixed-time-stable vector fields, gain prescriptions and settling-time bounds.

All flows share the shape ``-k * v / ||v||**(2/mu) - k * v * ||v||**(2/mu)``
applied to some residual ``v``: the gradient itself, a Newton direction,
or the stacked complementarity residual of the homogeneous embedding.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .hmcp import HMCPState, evaluate_psi, psi_residual
from .problem import ConvexProgram

COND_LIMIT = 1e14


class Scheme(str, enum.Enum):
    REDUCED_Z = "reduced_z"
    FULL_HMCP = "full_hmcp"
    GRADIENT = "gradient"
    NEWTON = "newton"


class BoundKind(str, enum.Enum):
    FINITE_TIME = "finite_time"
    FIXED_TIME_SUM = "fixed_time_sum"
    FIXED_TIME_TAN = "fixed_time_tan"
    #: the tighter ``mu*pi/(4k)`` bound reached for the Newton-type flows
    NEWTON = "newton"


class FlowSingularityError(np.linalg.LinAlgError):
    """The linear system behind a Newton-type flow is singular or too ill-conditioned."""

    def __init__(self, message, state=None, condition=None):
        super().__init__(message)
        self.state = state
        self.condition = condition


def prescribe_gain(T_p: float, mu: float = 2.0, scheme: Scheme = Scheme.FULL_HMCP,
                   m_f: Optional[float] = None) -> float:
    """Gain ``k`` that makes the settling time of ``scheme`` at most ``T_p``.

    gradient flow: ``mu*pi / (4 m_f T_p)``; every Newton-type flow:
    ``mu*pi / (4 T_p)``, which is ``pi / (2 T_p)`` at ``mu = 2``.
    """
    if not T_p > 0:
        raise ValueError("T_p must be positive")
    if not mu > 1:
        raise ValueError("mu must exceed 1")
    scheme = Scheme(scheme)
    if scheme is Scheme.GRADIENT:
        if m_f is None or not m_f > 0:
            raise ValueError("the gradient flow needs a positive strong-convexity modulus m_f")
        return mu * math.pi / (4.0 * m_f * T_p)
    return mu * math.pi / (4.0 * T_p)


@dataclass(frozen=True)
class FlowConfig:
    k: float
    T_p: float
    mu: float = 2.0
    scheme: Scheme = Scheme.FULL_HMCP
    m_f: Optional[float] = None

    def __post_init__(self):
        if not (self.k > 0 and self.T_p > 0 and self.mu > 1):
            raise ValueError("FlowConfig needs k > 0, T_p > 0 and mu > 1")

    @classmethod
    def from_settling_time(cls, T_p, mu=2.0, scheme=Scheme.FULL_HMCP, m_f=None) -> "FlowConfig":
        return cls(k=prescribe_gain(T_p, mu, scheme, m_f), T_p=T_p, mu=mu, scheme=Scheme(scheme), m_f=m_f)


def _fixed_time_factor(norm: float, k: float, mu: float) -> float:
    p = 2.0 / mu
    return -k * (norm ** -p + norm ** p)


def residual_decay_rate(norm: float, k: float, mu: float = 2.0) -> float:
    """``-d log||z|| / dt`` of the residual dynamics at ``||z|| = norm``."""
    return -_fixed_time_factor(norm, k, mu)


def reduced_rhs(z, k: float, mu: float = 2.0) -> np.ndarray:
    """``dz/dt`` of the residual dynamics; zero at ``z = 0``."""
    z = np.asarray(z, dtype=float)
    r = np.linalg.norm(z)
    if r == 0.0:
        return np.zeros_like(z)
    return _fixed_time_factor(r, k, mu) * z


def settling_time(r0: float, k: float, mu: float = 2.0) -> float:
    """Exact time at which ``||z||`` reaches zero from ``r0``.

    With ``p = 2/mu`` the radial law ``dr/dt = -k (r**(1-p) + r**(1+p))``
    integrates to ``(1/p) * arctan(r0**p) / k``.
    """
    p = 2.0 / mu
    return math.atan(r0 ** p) / (p * k)


def radial_norm_closed_form(r0: float, k: float, t, mu: float = 2.0):
    """``||z(t)||`` along the residual dynamics started from ``||z(0)|| = r0``.

    ``r(t) = tan(arctan(r0**p) - p k t)**(1/p)`` before settling and zero
    after, ``p = 2/mu``; at ``mu = 2`` this is ``tan(arctan(r0) - k t)``.
    """
    p = 2.0 / mu
    t = np.asarray(t, dtype=float)
    angle = np.maximum(math.atan(r0 ** p) - p * k * t, 0.0)
    out = np.tan(angle) ** (1.0 / p)
    return float(out) if out.ndim == 0 else out


def gradient_flow_rhs(grad, k: float, mu: float = 2.0) -> np.ndarray:
    return reduced_rhs(grad, k, mu)


def newton_flow_rhs(grad, hess, k: float, mu: float = 2.0) -> np.ndarray:
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    cond = np.linalg.cond(hess)
    if not cond < COND_LIMIT:
        raise FlowSingularityError(f"Hessian is singular to working precision (cond {cond:.2e})", condition=cond)
    return np.linalg.solve(hess, reduced_rhs(grad, k, mu))


def full_hmcp_rhs(program: ConvexProgram, state: HMCPState, k: float, mu: float = 2.0):
    """Time derivatives ``(dx_hat, ds_hat)`` of the homogeneous flow.

    Solves::

        grad_psi(x_hat) dx - ds        = c * (psi(x_hat) - s_hat)
        diag(s_hat) dx + diag(x_hat) ds = c * (x_hat * s_hat)

    with ``c = -k (||z||**(-2/mu) + ||z||**(2/mu))`` by eliminating ``ds``.
    The Schur system ``(grad_psi + diag(s/x)) dx = rhs`` is symmetrically
    scaled by ``D = sqrt(x/s)`` before the LU solve, which turns it into
    ``D grad_psi D + I``.
    """
    x_hat, s_hat = state.x_hat, state.s_hat
    if np.any(x_hat == 0.0) or np.any(s_hat == 0.0):
        raise FlowSingularityError("state has a zero component", state=state)
    ev = evaluate_psi(program, x_hat)
    z1 = psi_residual(program, x_hat, s_hat, ev.value)
    z2 = x_hat * s_hat
    r = math.sqrt(z1 @ z1 + z2 @ z2)
    if r == 0.0:
        return np.zeros_like(x_hat), np.zeros_like(s_hat)
    c = _fixed_time_factor(r, k, mu)
    rhs1, rhs2 = c * z1, c * z2

    ratio = s_hat / x_hat
    D = np.sqrt(np.abs(x_hat / s_hat))
    M = D[:, None] * ev.jacobian * D[None, :]
    M[np.diag_indices_from(M)] += np.sign(ratio)
    cond = np.linalg.cond(M)
    if not cond < COND_LIMIT:
        raise FlowSingularityError(f"Schur matrix is ill-conditioned (cond {cond:.2e})", state=state, condition=cond)
    lu = lu_factor(M)

    def schur_solve(r1, r2):
        dx = D * lu_solve(lu, D * (r1 + r2 / x_hat))
        return dx, (r2 - s_hat * dx) / x_hat

    dx, ds = schur_solve(rhs1, rhs2)
    # one step of refinement against the unreduced system, with the
    # residual accumulated in extended precision
    L = np.longdouble
    J, dxl, dsl = ev.jacobian.astype(L), dx.astype(L), ds.astype(L)
    e1 = (rhs1.astype(L) - (J @ dxl - dsl)).astype(float)
    e2 = (rhs2.astype(L) - (s_hat.astype(L) * dxl + x_hat.astype(L) * dsl)).astype(float)
    cx, cs = schur_solve(e1, e2)
    return dx + cx, ds + cs


def settling_bound(kind: BoundKind, **params) -> float:
    """Upper bounds on the settling time of a Lyapunov-certified flow.

    finite_time     ``V0, k, alpha``: ``V0**(1-alpha) / (k (1-alpha))``
    fixed_time_sum  ``k1, k2, alpha1, alpha2``:
                    ``1/(k1 (1-alpha1)) + 1/(k2 (alpha2-1))``
    fixed_time_tan  ``mu`` and ``k`` (or ``k1, k2``): ``mu pi / sqrt(k1 k2)``
    newton          ``mu, k``: ``mu pi / (4 k)``
    """
    kind = BoundKind(kind)
    if kind is BoundKind.FINITE_TIME:
        V0, k, alpha = params["V0"], params["k"], params["alpha"]
        if not (k > 0 and 0 < alpha < 1 and V0 >= 0):
            raise ValueError("finite-time bound needs k > 0, 0 < alpha < 1, V0 >= 0")
        return V0 ** (1 - alpha) / (k * (1 - alpha))
    if kind is BoundKind.FIXED_TIME_SUM:
        k1, k2, a1, a2 = params["k1"], params["k2"], params["alpha1"], params["alpha2"]
        if not (k1 > 0 and k2 > 0 and 0 < a1 < 1 and a2 > 1):
            raise ValueError("fixed-time bound needs k1, k2 > 0, 0 < alpha1 < 1, alpha2 > 1")
        return 1.0 / (k1 * (1 - a1)) + 1.0 / (k2 * (a2 - 1))
    mu = params["mu"]
    if not mu > 1:
        raise ValueError("mu must exceed 1")
    if kind is BoundKind.FIXED_TIME_TAN:
        k1 = params.get("k1", params.get("k"))
        k2 = params.get("k2", params.get("k"))
        if not (k1 and k2 and k1 > 0 and k2 > 0):
            raise ValueError("fixed-time bound needs positive gains")
        return mu * math.pi / math.sqrt(k1 * k2)
    k = params["k"]
    if not k > 0:
        raise ValueError("k must be positive")
    return mu * math.pi / (4.0 * k)
