"""Command-line entry point: ``solve``, ``bench`` and ``oracle``.

Exit codes of ``solve``: 0 optimal, 2 infeasible, 3 indeterminate, 1 error.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .harness import (ExperimentSpec, run_infeasibility_experiment, run_settling_experiment,
                      write_solve_trajectory)
from .hmcp import Outcome
from .oracle import OracleUnavailable, reference_solution
from .problem import ProblemFormatError, load_problem
from .solver import SolverConfig, solve

EXIT_CODES = {Outcome.OPTIMAL: 0, Outcome.INFEASIBLE: 2, Outcome.INDETERMINATE: 3}
log = logging.getLogger("hmcpflow")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _vec(v):
    return np.array2string(np.asarray(v), precision=10, separator=", ", max_line_width=120)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hmcpflow", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve a problem file")
    s.add_argument("problem")
    s.add_argument("--tp", type=float, default=1.0, help="prescribed settling time")
    s.add_argument("--mu", type=float, default=2.0)
    s.add_argument("--init-scale", type=float, default=1.0)
    s.add_argument("--traj", help="write the trajectory CSV here")

    b = sub.add_parser("bench", help="benchmark suites")
    bsub = b.add_subparsers(dest="suite", required=True)
    bi = bsub.add_parser("infeasible", help="infeasibility detection rate")
    bi.add_argument("--family", choices=["lp", "qp", "expsum"], default="lp")
    bi.add_argument("--count", type=int, default=100)
    bi.add_argument("--n", type=int, default=5)
    bi.add_argument("--m", type=int, default=2)
    bi.add_argument("--tp", type=float, default=1.0)
    bi.add_argument("--seed", type=int, default=0)
    bi.add_argument("--workers", type=int, default=1)
    bi.add_argument("--out", help="per-instance CSV")
    bs = bsub.add_parser("settling", help="settling-time and initial-condition sweeps")
    bs.add_argument("--family", choices=["lp", "qp", "expsum"], default="expsum")
    bs.add_argument("--tp-list", type=_floats, default=[1, 0.8, 0.6, 0.4, 0.2, 0.1])
    bs.add_argument("--init-list", type=_floats, default=[2, 5, 10, 20, 40, 60, 80])
    bs.add_argument("--n", type=int, default=5)
    bs.add_argument("--m", type=int, default=2)
    bs.add_argument("--seed", type=int, default=0)
    bs.add_argument("--out-dir", default="settling_out")

    o = sub.add_parser("oracle", help="reference solution of a problem file")
    o.add_argument("problem")
    return p


def _cmd_solve(args) -> int:
    program = load_problem(args.problem)
    config = SolverConfig(T_p=args.tp, mu=args.mu, init_scale=args.init_scale,
                          record_trajectory=bool(args.traj))
    report = solve(program, config)
    print(f"outcome: {report.outcome.value}")
    if report.x_star is not None:
        print(f"x*: {_vec(report.x_star)}")
        print(f"y*: {_vec(report.y_star)}")
    if report.certificate is not None:
        print(f"certificate x_bar/kappa: {_vec(report.certificate[0])}")
    print(f"tau: {report.tau:.6e}")
    print(f"kappa: {report.kappa:.6e}")
    print(f"z_norm: {report.residual_norm:.3e}")
    if report.settle_time is not None:
        print(f"settled at t = {report.settle_time:.10f}")
    if report.kkt is not None:
        k = report.kkt
        print(f"kkt: stationarity {k.stationarity:.3e}  feasibility {k.feasibility:.3e}  "
              f"complementarity {k.complementarity:.3e}")
    if report.message:
        print(f"note: {report.message}")
    if args.traj:
        write_solve_trajectory(args.traj, program, report)
    return EXIT_CODES[report.outcome]


def _cmd_bench(args) -> int:
    if args.suite == "infeasible":
        spec = ExperimentSpec(args.family, args.count, args.n, args.m, args.seed,
                              make_infeasible=True, tp_list=(args.tp,))
        summary = run_infeasibility_experiment(spec, workers=args.workers, out=args.out)
        counts = ", ".join(f"{k} {v}" for k, v in summary.counts().items())
        print(f"{args.family}: detection rate {summary.rate:.2f} ({counts})")
        return 0
    spec = ExperimentSpec(args.family, 1, args.n, args.m, args.seed,
                          tp_list=tuple(args.tp_list), init_list=tuple(args.init_list))
    result = run_settling_experiment(spec, out_dir=args.out_dir)
    for c in result.tp_sweep:
        print(f"T_p {c.T_p:g}: |x(T_p) - x*| = {c.final_error:.2e}, |z| = {c.final_residual:.2e}")
    for c in result.init_sweep:
        print(f"scale {c.init_scale:g}: |x(1) - x*| = {c.final_error:.2e}, |z| = {c.final_residual:.2e}")
    print(f"CSV written to {args.out_dir}")
    return 0


def _cmd_oracle(args) -> int:
    ref = reference_solution(load_problem(args.problem))
    print(f"status: {ref.status}")
    if ref.optimal:
        print(f"x*: {_vec(ref.x)}")
        print(f"y*: {_vec(ref.y)}")
        print(f"objective: {ref.objective:.12g}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    handlers = {"solve": _cmd_solve, "bench": _cmd_bench, "oracle": _cmd_oracle}
    try:
        return handlers[args.command](args)
    except (OSError, ProblemFormatError, OracleUnavailable, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
