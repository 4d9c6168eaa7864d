"""Random instances and the two benchmark suites (infeasibility detection and
prescribed settling), with CSV output.

Random streams
--------------
Every instance is drawn from numpy's ``Philox`` (4x64 counter-based
generator) with the 128-bit key ``(seed, family_code)`` and the counter
starting at ``(0, 0, 0, index)``, where ``index`` is the instance number
inside an experiment and ``family_code`` is 1 (lp), 2 (qp) or 3 (expsum).
Standard normals come from ``Generator.standard_normal`` and are drawn in
this order: ``A`` (m x n, row-major), ``x0`` (n), ``eta`` (m), then

* lp: ``y0`` (m), ``zeta`` (n)
* qp: ``M`` (n x n, row-major), ``c`` (n)

with ``b = A @ |x0| - |eta|``, ``c_lp = A.T @ |y0| + |zeta|`` and
``Q = M.T @ M + 0.1 I``.  ``|x0|`` is a strictly feasible point and
``|y0|`` a strictly feasible dual point, so every LP is feasible and
bounded.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .hmcp import HMCPState, Outcome
from .integrator import write_trajectory_csv
from .oracle import reference_solution
from .problem import ConvexProgram, Family, augment_infeasible, make_expsum, make_lp, make_qp
from .solver import SolveReport, SolverConfig, solve

FAMILY_CODES = {Family.LP: 1, Family.QP: 2, Family.EXPSUM: 3}
MASK64 = (1 << 64) - 1


def rng_for(family, seed: int, index: int = 0) -> np.random.Generator:
    family = Family(family)
    bits = np.random.Philox(key=[seed & MASK64, FAMILY_CODES[family]], counter=[0, 0, 0, index])
    return np.random.Generator(bits)


def generate_random(family, n: int, m: int, seed: int, index: int = 0) -> ConvexProgram:
    """Feasible random instance number ``index`` of ``family`` for ``seed``."""
    family = Family(family)
    if family not in FAMILY_CODES:
        raise ValueError(f"cannot generate family {family.value!r}")
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    rng = rng_for(family, seed, index)
    A = rng.standard_normal((m, n))
    x0 = np.abs(rng.standard_normal(n))
    eta = np.abs(rng.standard_normal(m))
    b = A @ x0 - eta
    if family is Family.LP:
        y0 = np.abs(rng.standard_normal(m))
        zeta = np.abs(rng.standard_normal(n))
        return make_lp(A.T @ y0 + zeta, A, b)
    if family is Family.QP:
        M = rng.standard_normal((n, n))
        c = rng.standard_normal(n)
        return make_qp(M.T @ M + 0.1 * np.eye(n), c, A, b)
    return make_expsum(A, b)


def construction_point(family, n: int, m: int, seed: int, index: int = 0) -> np.ndarray:
    """The strictly feasible point used to build instance ``index``."""
    rng = rng_for(family, seed, index)
    rng.standard_normal((m, n))
    return np.abs(rng.standard_normal(n))


@dataclass(frozen=True)
class ExperimentSpec:
    family: Family = Family.LP
    count: int = 100
    n: int = 5
    m: int = 2
    seed: int = 0
    make_infeasible: bool = False
    tp_list: Sequence[float] = (1.0,)
    init_list: Sequence[float] = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.count < 1 or self.n < 1 or self.m < 1:
            raise ValueError("count, n and m must be positive")
        if not self.tp_list or min(self.tp_list) <= 0:
            raise ValueError("tp_list needs positive settling times")
        if not self.init_list or min(self.init_list) <= 0:
            raise ValueError("init_list needs positive scales")

    def instance(self, index: int) -> ConvexProgram:
        p = generate_random(self.family, self.n, self.m, self.seed, index)
        return augment_infeasible(p) if self.make_infeasible else p


# -- infeasibility detection ------------------------------------------------

@dataclass(frozen=True)
class InstanceRow:
    index: int
    tau: float
    kappa: float
    outcome: Outcome
    residual: float
    settle_time: Optional[float]
    min_component: float
    message: str = ""


@dataclass
class InfeasibilitySummary:
    spec: ExperimentSpec
    rows: List[InstanceRow]

    @property
    def detected(self) -> int:
        return sum(r.outcome is Outcome.INFEASIBLE for r in self.rows)

    @property
    def rate(self) -> float:
        return self.detected / len(self.rows)

    def counts(self) -> dict:
        out = {o.value: 0 for o in Outcome}
        for r in self.rows:
            out[r.outcome.value] += 1
        return out


def _row(index: int, report: SolveReport) -> InstanceRow:
    return InstanceRow(index, report.tau, report.kappa, report.outcome, report.residual_norm,
                       report.settle_time, report.min_component, report.message)


def _infeasible_task(args):
    spec, index, config = args
    return _row(index, solve(spec.instance(index), config))


def _map(fn, tasks, workers):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def run_infeasibility_experiment(spec: ExperimentSpec, config: Optional[SolverConfig] = None,
                                 workers: int = 1, out=None) -> InfeasibilitySummary:
    """Solve ``spec.count`` augmented instances and count INFEASIBLE outcomes.

    Integration failures simply show up as missed detections.  With
    ``out`` set, the per-instance rows are written as CSV.
    """
    if not spec.make_infeasible:
        raise ValueError("the infeasibility experiment needs make_infeasible=True")
    config = config or SolverConfig(T_p=spec.tp_list[0], record_trajectory=False)
    rows = _map(_infeasible_task, [(spec, i, config) for i in range(spec.count)], workers)
    rows.sort(key=lambda r: r.index)
    summary = InfeasibilitySummary(spec, rows)
    if out is not None:
        write_infeasibility_csv(out, summary)
    return summary


def write_infeasibility_csv(path, summary: InfeasibilitySummary):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "tau", "kappa", "outcome", "z_norm", "settle_time", "min_component"])
        for r in summary.rows:
            w.writerow([r.index, repr(r.tau), repr(r.kappa), r.outcome.value, repr(r.residual),
                        "" if r.settle_time is None else repr(r.settle_time), repr(r.min_component)])
        w.writerow(["rate", repr(summary.rate), "", "", "", "", ""])


# -- prescribed settling ----------------------------------------------------

@dataclass
class SettlingCurve:
    T_p: float
    init_scale: float
    times: np.ndarray
    errors: np.ndarray
    z_norms: np.ndarray
    outcome: Outcome
    settle_time: Optional[float]
    min_component: float
    report: SolveReport = field(repr=False, default=None)

    @property
    def final_error(self) -> float:
        return float(self.errors[-1])

    @property
    def final_residual(self) -> float:
        return float(self.z_norms[-1])


@dataclass
class SettlingResult:
    program: ConvexProgram
    x_star: np.ndarray
    tp_sweep: List[SettlingCurve]
    init_sweep: List[SettlingCurve]


def solution_error_curve(program: ConvexProgram, report: SolveReport, x_star) -> np.ndarray:
    """``||x(t)/tau(t) - x*||`` at every trajectory sample."""
    n = program.n
    traj = report.trajectory
    d = n + program.m + 1
    x = traj.states[:, :n]
    tau = np.maximum(traj.states[:, d - 1], np.finfo(float).tiny)
    return np.linalg.norm(x / tau[:, None] - x_star, axis=1)


def _settling_curve(program, x_star, T_p, scale, integrator=None):
    kw = {} if integrator is None else {"integrator": integrator}
    report = solve(program, SolverConfig(T_p=T_p, init_scale=scale, record_trajectory=True, **kw))
    traj = report.trajectory
    return SettlingCurve(T_p, scale, traj.times, solution_error_curve(program, report, x_star),
                         traj.residual_norms, report.outcome, report.settle_time,
                         report.min_component, report)


def run_settling_experiment(spec: ExperimentSpec, out_dir=None, index: int = 0,
                            integrator=None) -> SettlingResult:
    """Sweep ``spec.tp_list`` (at unit initial scale) and ``spec.init_list``
    (at ``T_p = 1``) on instance ``index`` of ``spec``.

    The error curves compare ``x(t)/tau(t)`` with the reference solution.
    """
    if spec.make_infeasible:
        raise ValueError("the settling experiment needs feasible instances")
    program = spec.instance(index)
    ref = reference_solution(program)
    if not ref.optimal:
        raise ValueError(f"reference oracle reports {ref.status}")
    tp_sweep = [_settling_curve(program, ref.x, tp, 1.0, integrator) for tp in spec.tp_list]
    init_sweep = [_settling_curve(program, ref.x, 1.0, c, integrator) for c in spec.init_list]
    result = SettlingResult(program, ref.x, tp_sweep, init_sweep)
    if out_dir is not None:
        write_settling_csv(out_dir, result)
    return result


def write_settling_csv(out_dir, result: SettlingResult):
    os.makedirs(out_dir, exist_ok=True)
    for name, curves in (("tp_sweep.csv", result.tp_sweep), ("init_sweep.csv", result.init_sweep)):
        with open(os.path.join(out_dir, name), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["T_p", "init_scale", "t", "x_error", "z_norm"])
            for c in curves:
                for t, e, r in zip(c.times, c.errors, c.z_norms):
                    w.writerow([repr(c.T_p), repr(c.init_scale), repr(float(t)), repr(float(e)), repr(float(r))])
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sweep", "T_p", "init_scale", "outcome", "final_x_error", "final_z_norm",
                    "settle_time", "min_component"])
        for sweep, curves in (("tp", result.tp_sweep), ("init", result.init_sweep)):
            for c in curves:
                w.writerow([sweep, repr(c.T_p), repr(c.init_scale), c.outcome.value, repr(c.final_error),
                            repr(c.final_residual), "" if c.settle_time is None else repr(c.settle_time),
                            repr(c.min_component)])


def trajectory_columns(program: ConvexProgram) -> List[str]:
    n, m = program.n, program.m
    return ([f"x_{i}" for i in range(1, n + 1)] + [f"y_{i}" for i in range(1, m + 1)] + ["tau"]
            + [f"s_{i}" for i in range(1, n + 1)] + [f"v_{i}" for i in range(1, m + 1)] + ["kappa"])


def write_solve_trajectory(path, program: ConvexProgram, report: SolveReport):
    """Trajectory CSV with columns ``t, x_*, y_*, tau, s_*, v_*, kappa, z_norm``."""
    if report.trajectory is None:
        raise ValueError("the report carries no trajectory")
    write_trajectory_csv(path, report.trajectory, trajectory_columns(program))
