import math

import numpy as np
import pytest

from hmcpflow.flows import Scheme
from hmcpflow.harness import generate_random
from hmcpflow.hmcp import Outcome
from hmcpflow.integrator import IntegratorConfig
from hmcpflow.oracle import reference_solution
from hmcpflow.problem import augment_infeasible, make_lp
from hmcpflow.solver import SmoothObjective, SolverConfig, solve, solve_unconstrained


def test_one_dimensional_lp():
    report = solve(make_lp([1.0], [[1.0]], [1.0]))
    assert report.outcome is Outcome.OPTIMAL
    assert report.x_star == pytest.approx([1.0], abs=1e-4)
    assert report.gain == pytest.approx(math.pi / 2)
    assert report.settle_time is not None and report.settle_time <= 1.0
    assert report.kkt.max() < 1e-8


def test_augmented_lp_is_infeasible():
    report = solve(augment_infeasible(generate_random("lp", 5, 2, seed=1)))
    assert report.outcome is Outcome.INFEASIBLE
    assert report.kappa > report.tau and report.tau <= 1e-6
    xb, sb = report.certificate
    assert np.all(xb >= -1e-9) and np.all(sb >= -1e-9)


def test_random_qp_matches_reference():
    p = generate_random("qp", 5, 2, seed=2)
    report = solve(p)
    ref = reference_solution(p)
    assert report.outcome is Outcome.OPTIMAL
    assert max(report.kkt) <= 1e-6 * (1 + p.scale)
    assert np.abs(report.x_star - ref.x).max() <= 1e-4 * (1 + np.abs(ref.x).max())
    assert np.all(report.x_star >= -1e-9)


def test_settled_by_prescribed_time_and_monotone():
    p = generate_random("expsum", 5, 2, seed=3)
    report = solve(p, SolverConfig(T_p=0.3))
    traj = report.trajectory
    assert traj.times[-1] == pytest.approx(0.3)
    assert report.residual_norm <= 1e-9
    assert np.all(np.diff(traj.residual_norms) <= 1e-9)
    assert traj.min_component >= -1e-9


def test_recovered_solution_is_scale_invariant():
    p = generate_random("lp", 5, 2, seed=4)
    xs = [solve(p, SolverConfig(init_scale=c, record_trajectory=False)).x_star for c in (1, 5, 10)]
    for x in xs[1:]:
        assert np.abs(x - xs[0]).max() <= 1e-4


def test_step_failure_reports_indeterminate():
    p = generate_random("lp", 5, 2, seed=5)
    report = solve(p, SolverConfig(integrator=IntegratorConfig(max_steps=3)))
    assert report.outcome is Outcome.INDETERMINATE
    assert "max_steps" in report.message


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(T_p=0.0)
    with pytest.raises(ValueError):
        SolverConfig(init_scale=-1.0)


def _quadratic(cond, n=4):
    H = np.diag(np.logspace(0, math.log10(cond), n))
    b = np.linspace(1.0, 2.0, n)
    return SmoothObjective(f=lambda x: 0.5 * x @ H @ x - b @ x, grad=lambda x: H @ x - b,
                           hess=lambda x: H), H, b


def test_newton_flow_on_identity_quadratic():
    obj = SmoothObjective(f=lambda x: 0.5 * x @ x, grad=lambda x: x, hess=lambda x: np.eye(2))
    report = solve_unconstrained(obj, Scheme.NEWTON, 1.0, [3.0, 4.0])
    assert report.outcome is Outcome.OPTIMAL
    assert np.linalg.norm(report.x_star) <= 1e-6
    assert report.settle_time == pytest.approx(math.atan(5.0) / (math.pi / 2), abs=1e-6)
    report = solve_unconstrained(obj, Scheme.GRADIENT, 1.0, [3.0, 4.0], m_f=1.0)
    assert report.outcome is Outcome.OPTIMAL and report.settle_time <= 1.0


def test_ill_conditioned_quadratic():
    obj, H, b = _quadratic(1e4)
    for scheme, kw in ((Scheme.NEWTON, {}), (Scheme.GRADIENT, {"m_f": 1.0})):
        report = solve_unconstrained(obj, scheme, 1.0, np.full(4, 10.0), **kw)
        assert report.outcome is Outcome.OPTIMAL, scheme
        assert report.residual_norm <= 1e-6


def test_unconstrained_equilibrium_start():
    obj = SmoothObjective(f=lambda x: 0.5 * x @ x, grad=lambda x: x, hess=lambda x: np.eye(2))
    report = solve_unconstrained(obj, Scheme.NEWTON, 1.0, [0.0, 0.0])
    assert report.settle_time == 0.0 and report.outcome is Outcome.OPTIMAL


def test_unconstrained_singular_hessian():
    obj = SmoothObjective(f=lambda x: 0.0, grad=lambda x: x, hess=lambda x: np.zeros((2, 2)))
    report = solve_unconstrained(obj, Scheme.NEWTON, 1.0, [1.0, 1.0])
    assert report.outcome is Outcome.INDETERMINATE
    with pytest.raises(ValueError):
        solve_unconstrained(obj, Scheme.GRADIENT, 1.0, [1.0, 1.0])
    with pytest.raises(ValueError):
        solve_unconstrained(obj, Scheme.FULL_HMCP, 1.0, [1.0, 1.0])
