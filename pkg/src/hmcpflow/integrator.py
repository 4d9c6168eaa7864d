"""Adaptive stiff integration with residual-based stopping.

The stepping is done by LSODA (automatic switching between Adams and BDF
with a finite-difference Jacobian).  On top of it this module adds what the
flows need:

* an early stop once ``||residual(state)||`` drops below ``stop_residual``,
  or once the residual reverses direction (the flow passed through its
  equilibrium inside a step); the stop time is located by bisection on the
  dense output,
* rejection of steps that leave the nonnegative orthant,
* uniform samples on ``[0, t_end]`` with the state frozen after the stop,
* optionally, stepping on a state-dependent clock instead of ``t`` (see
  ``integrate``), which keeps flows that settle in finite time non-stiff,
* optionally, ray coordinates (scale and direction) for homogeneous flows.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import LSODA
from scipy.optimize import brentq

NEGATIVE_TOL = -1e-9
EVENT_TOL = 1e-9
#: accepted steps after a rejection before the step cap is lifted again
RELAX_AFTER = 50
#: accepted steps without a clear new residual low that signal the floor;
#: a low counts once it beats the previous one by the factor STALL_GAIN
STALL_STEPS = 25
STALL_GAIN = 0.8


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    stop_residual: float = 1e-10
    max_steps: int = 1_000_000
    #: first step as a fraction of ``t_end``; None lets LSODA estimate it
    initial_step: Optional[float] = None
    sample_count: int = 200
    #: residual below which a stalled residual counts as settling at the
    #: attainable floor rather than as a failure
    floor_residual: float = 1e-8
    #: absolute tolerance on the log-scale in ray coordinates
    ray_abs_tol: float = 1e-7

    def __post_init__(self):
        if min(self.rel_tol, self.abs_tol, self.stop_residual, self.floor_residual, self.ray_abs_tol) <= 0 or \
                (self.initial_step is not None and self.initial_step <= 0):
            raise ValueError("integrator tolerances must be positive")
        if self.rel_tol < 1e-14:
            raise ValueError("rel_tol below 1e-14 is not attainable in double precision")
        if self.max_steps < 1 or self.sample_count < 2:
            raise ValueError("max_steps must be >= 1 and sample_count >= 2")


class StopKind(str, enum.Enum):
    REACHED_TP = "reached_tp"
    RESIDUAL_SETTLED = "residual_settled"
    #: the residual stopped improving below ``floor_residual``
    RESIDUAL_FLOOR = "residual_floor"
    STEP_FAILURE = "step_failure"


@dataclass(frozen=True)
class StopEvent:
    kind: StopKind
    time: float
    message: str = ""


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    residual_norms: np.ndarray
    stop_event: StopEvent
    final_state: np.ndarray
    n_steps: int = 0
    n_rhs: int = 0
    n_rejected: int = 0
    #: smallest component over every accepted step and sample
    min_component: float = math.inf
    step_times: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def settled(self) -> bool:
        return self.stop_event.kind in (StopKind.RESIDUAL_SETTLED, StopKind.RESIDUAL_FLOOR)

    @property
    def failed(self) -> bool:
        return self.stop_event.kind is StopKind.STEP_FAILURE

    @property
    def settle_time(self) -> Optional[float]:
        return self.stop_event.time if self.settled else None

    @property
    def final_residual(self) -> float:
        return float(self.residual_norms[-1])


def integrate(rhs: Callable[[np.ndarray], np.ndarray], state0, t_end: float,
              config: IntegratorConfig = IntegratorConfig(),
              residual: Optional[Callable[[np.ndarray], np.ndarray]] = None,
              nonnegative: bool = False,
              time_scale: Optional[Callable[[np.ndarray], float]] = None,
              clock_limit: Optional[float] = None,
              ray: bool = False) -> Trajectory:
    """Integrate the autonomous ODE ``dy/dt = rhs(y)`` on ``[0, t_end]``.

    ``residual`` maps a state to the vector whose norm drives the stop
    (the state itself by default).  With ``nonnegative=True`` steps that
    produce a component below ``-1e-9`` are retried with half the step.
    Failures (step underflow, ``max_steps``, a singular ``rhs``) end the
    run with a ``STEP_FAILURE`` event and the partial trajectory.

    ``time_scale`` switches the solver to the clock ``s`` with
    ``ds/dt = g(y) > 0``: it advances ``(y, t)`` by ``dy/ds = rhs(y) / g``
    and ``dt/ds = 1 / g``, so ``t`` is itself integrated.  When ``g`` is the
    decay rate of ``||residual||`` the residual falls like ``exp(-s)`` and
    the stiffness that builds up near a non-Lipschitz equilibrium is gone.
    The clock runs up to ``clock_limit``; running out of clock counts as a
    floor stop below ``floor_residual`` and as a failure above it.
    Samples, events and ``step_times`` are always in physical time.

    ``ray=True`` (for nonnegative states of a homogeneous flow) steps the
    coordinates ``u = y / exp(lam)`` with ``sum(u) = 1`` and the log-scale
    ``lam``, which gets the looser ``ray_abs_tol``.  Near a ray of
    equilibria the velocity along ``y`` is swamped by rounding; in these
    coordinates that noise only moves ``lam`` and no longer drives the step
    size.  States handed to ``rhs`` and recorded are always ``y``.
    """
    y0 = np.array(state0, dtype=float)
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial state must be finite")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    residual = residual if residual is not None else (lambda y: y)
    eps = config.stop_residual
    counter = [0]
    scaled = time_scale is not None

    if scaled and (clock_limit is None or not clock_limit > 0):
        raise ValueError("a time scale needs a positive clock_limit")
    if ray and not (np.all(y0 >= 0) and y0.sum() > 0):
        raise ValueError("ray coordinates need a nonnegative, nonzero state")
    s_end = float(clock_limit) if scaled else t_end
    n = y0.size
    Y0 = np.concatenate([y0 / y0.sum(), [math.log(y0.sum())]]) if ray else y0
    if scaled:
        Y0 = np.append(Y0, 0.0)

    def part(Y):
        return math.exp(Y[n]) * Y[:n] if ray else Y[:n]

    def phys(s, Y):
        return float(Y[-1]) if scaled else float(s)

    def fun(s, Y):
        counter[0] += 1
        y = part(Y)
        dy = np.asarray(rhs(y), dtype=float)
        if scaled:
            g = float(time_scale(y))
            if not (g > 0 and math.isfinite(g)):
                raise FloatingPointError(f"time scale {g!r} is not positive and finite")
            dy = dy / g
        if ray:
            # the part of dy along y goes to the log-scale and cancels in u
            dlam = dy.sum() / y.sum()
            dy = np.append(math.exp(-Y[n]) * dy - dlam * Y[:n], dlam)
        return np.append(dy, 1.0 / g) if scaled else dy

    atol = np.full(Y0.size, config.abs_tol)
    if ray:
        atol[n] = config.ray_abs_tol
    min_step = 1e-15 * s_end
    sample_t = np.linspace(0.0, t_end, config.sample_count)
    times, states = [], []

    def record(t, y):
        if not times or t > times[-1]:
            times.append(float(t))
            states.append(np.array(y, dtype=float))

    def finish(kind, t_stop, y_stop, message=""):
        # a floor stop may go back to an earlier state; the frozen tail starts there
        while len(times) > 1 and times[-1] > t_stop:
            times.pop()
            states.pop()
        record(t_stop, y_stop)
        for ts in sample_t[sample_t > t_stop]:
            record(ts, y_stop)
        st = np.array(states)
        rn = np.array([np.linalg.norm(residual(s)) for s in st])
        mins = min(min_seen[0], float(st.min()))
        return Trajectory(np.array(times), st, rn, StopEvent(kind, float(t_stop), message),
                          np.array(y_stop, dtype=float), n_steps, counter[0], n_rejected, mins,
                          np.array(step_t))

    min_seen = [float(y0.min())]
    n_steps = n_rejected = 0
    step_t = [0.0]
    s_old, Y_old, t_old, y_old = 0.0, Y0, 0.0, y0
    z_old = residual(y0)
    record(0.0, y0)
    if np.linalg.norm(z_old) < eps:
        return finish(StopKind.RESIDUAL_SETTLED, 0.0, y0)

    def make_solver(s, Y, max_step, first):
        if first is not None and not first >= min_step:
            first = None
        return LSODA(fun, s, Y, s_end, first_step=first, max_step=max_step, min_step=min_step,
                     rtol=config.rel_tol, atol=atol)

    max_step, since_restart = math.inf, 0
    stall, best, anchor = 0, None, config.floor_residual / STALL_GAIN
    try:
        first = None if config.initial_step is None or scaled else config.initial_step * t_end
        solver = make_solver(0.0, Y0, max_step, first)
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        return finish(StopKind.STEP_FAILURE, 0.0, y0, f"rhs failed: {exc}")

    while True:
        if n_steps >= config.max_steps:
            return finish(StopKind.STEP_FAILURE, t_old, y_old, "max_steps exceeded")
        reason = None
        try:
            msg = solver.step()
        except (np.linalg.LinAlgError, FloatingPointError) as exc:
            reason, h = f"rhs failed: {exc}", _last_step(solver, max_step, s_end)
        else:
            s_new, Y_new = solver.t, solver.y.copy()
            y_new = part(Y_new)
            h = s_new - s_old
            if solver.status == "failed":
                # repeated error-test or corrector failures: retry with a smaller cap
                reason, h = msg or "step failure", _last_step(solver, max_step, s_end)
            elif not np.all(np.isfinite(Y_new)):
                reason = "non-finite state"
            elif nonnegative and y_new.min() < NEGATIVE_TOL:
                reason = "positivity"

        if reason is not None:
            # reject: restart from the last accepted state with half the step
            n_rejected += 1
            h = min(h, s_end - s_old)
            if not h / 2 >= min_step:
                if np.linalg.norm(z_old) < config.floor_residual:
                    return finish(StopKind.RESIDUAL_FLOOR, t_old, y_old,
                                  f"residual stalled at {np.linalg.norm(z_old):.3e}")
                return finish(StopKind.STEP_FAILURE, t_old, y_old, f"{reason}: step size underflow")
            max_step, since_restart = h / 2, 0
            try:
                solver = make_solver(s_old, Y_old, max_step, min(max_step, s_end - s_old))
            except (np.linalg.LinAlgError, FloatingPointError) as exc:
                return finish(StopKind.STEP_FAILURE, t_old, y_old, f"rhs failed: {exc}")
            continue

        n_steps += 1
        t_new = phys(s_new, Y_new)
        step_t.append(t_new)
        dense = solver.dense_output()

        def y_at(s):
            return part(dense(s))

        def t_at(s):
            return phys(s, dense(s))

        def sample_until(t_hi, inclusive):
            window = (sample_t > t_old) & ((sample_t <= t_hi) if inclusive else (sample_t < t_hi))
            for ts in sample_t[window]:
                if ts == t_new:
                    record(ts, y_new)
                else:
                    record(ts, y_at(_clock_at(t_at, ts, s_old, s_new) if scaled else ts))

        z_new = residual(y_new)
        r_new = np.linalg.norm(z_new)
        if r_new < eps or z_old @ z_new <= 0.0:
            s_star = _locate_stop(lambda s: residual(y_at(s)), t_at, z_old, s_old, s_new, eps)
            t_star = t_at(s_star)
            if t_star <= t_end:
                y_star = np.array(y_at(s_star), dtype=float)
                sample_until(t_star, inclusive=False)
                min_seen[0] = min(min_seen[0], float(y_star.min()))
                return finish(StopKind.RESIDUAL_SETTLED, t_star, y_star)
        if scaled and t_new >= t_end:
            s_c = _clock_at(t_at, t_end, s_old, s_new)
            y_c = np.array(y_at(s_c), dtype=float)
            sample_until(t_end, inclusive=False)
            min_seen[0] = min(min_seen[0], float(y_c.min()))
            return finish(StopKind.REACHED_TP, t_end, y_c)

        sample_until(t_new, inclusive=True)
        min_seen[0] = min(min_seen[0], float(y_new.min()))
        # near a non-Lipschitz equilibrium the computed residual bottoms out
        # at a floor set by rounding and local errors; once it stops making
        # new lows, stop at the best state seen
        if r_new < config.floor_residual:
            if best is None or r_new < best[0]:
                best = (r_new, t_new, y_new)
            if r_new < STALL_GAIN * anchor:
                anchor, stall = r_new, 0
            else:
                stall += 1
            if stall >= STALL_STEPS:
                return finish(StopKind.RESIDUAL_FLOOR, best[1], best[2],
                              f"residual stalled at {best[0]:.3e}")
        s_old, Y_old, t_old, y_old, z_old = s_new, Y_new, t_new, y_new, z_new
        if solver.status == "finished" or s_new >= s_end:
            if not scaled:
                return finish(StopKind.REACHED_TP, t_end, y_new)
            if best is not None:
                return finish(StopKind.RESIDUAL_FLOOR, best[1], best[2], f"residual stalled at {best[0]:.3e}")
            return finish(StopKind.STEP_FAILURE, t_new, y_new, "clock limit reached")
        since_restart += 1
        if max_step < math.inf and since_restart >= RELAX_AFTER:
            # lift the step cap once the trouble spot is behind us
            max_step, since_restart = math.inf, 0
            try:
                solver = make_solver(s_old, Y_old, max_step, min(4 * h, s_end - s_old))
            except (np.linalg.LinAlgError, FloatingPointError) as exc:
                return finish(StopKind.STEP_FAILURE, t_old, y_old, f"rhs failed: {exc}")


def _last_step(solver, max_step, span):
    h = solver.step_size
    if h is None or not h > 0:
        h = 1e-6 * span
    return min(max_step, h)


def _clock_at(t_at, target, lo, hi):
    """Clock value in ``[lo, hi]`` where the (increasing) physical time hits ``target``."""
    if t_at(hi) <= target:
        return hi
    if t_at(lo) >= target:
        return lo
    return brentq(lambda s: t_at(s) - target, lo, hi, xtol=1e-15 * max(1.0, abs(hi)), rtol=4 * np.finfo(float).eps)


def _locate_stop(z_at, t_at, z_ref, lo, hi, eps):
    """Earliest clock value in ``(lo, hi]`` where the residual is below
    ``eps`` or has turned against ``z_ref``, bracketed to ``EVENT_TOL`` in
    physical time."""

    def stopped(s):
        z = z_at(s)
        return np.linalg.norm(z) < eps or z_ref @ z <= 0.0, np.linalg.norm(z)

    _, r_hi = stopped(hi)
    floor = 1e-15 * max(abs(hi), 1.0)
    # keep bisecting past EVENT_TOL until the stop point really is below eps
    while t_at(hi) - t_at(lo) > EVENT_TOL or (r_hi >= eps and hi - lo > floor):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        hit, r_mid = stopped(mid)
        if hit:
            hi, r_hi = mid, r_mid
        else:
            lo = mid
    return hi


def write_trajectory_csv(path, trajectory: Trajectory, columns: Sequence[str]):
    """Write ``t, <columns>, z_norm`` rows with a mandatory header."""
    if len(columns) != trajectory.states.shape[1]:
        raise ValueError("one column name per state component is required")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *columns, "z_norm"])
        for t, s, r in zip(trajectory.times, trajectory.states, trajectory.residual_norms):
            w.writerow([repr(float(t)), *(repr(float(v)) for v in s), repr(float(r))])
