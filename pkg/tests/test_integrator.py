import csv
import math

import numpy as np
import pytest

from hmcpflow.flows import reduced_rhs
from hmcpflow.integrator import (IntegratorConfig, StopKind, integrate, write_trajectory_csv)


def test_scalar_radial_law():
    k = math.pi / 2
    cfg = IntegratorConfig(sample_count=5)  # samples at 0, 0.25, 0.5, ...
    traj = integrate(lambda r: -k * (1 + r ** 2), [1.0], 1.0, cfg, residual=lambda r: r)
    assert traj.times[1] == 0.25
    assert traj.states[1, 0] == pytest.approx(math.tan(math.pi / 8), abs=1e-8)
    assert traj.settled and traj.settle_time == pytest.approx(0.5, abs=1e-6)


def test_exponential_decay():
    traj = integrate(lambda x: -x, [1.0], 1.0)
    assert traj.stop_event.kind is StopKind.REACHED_TP
    assert traj.final_state[0] == pytest.approx(math.exp(-1), abs=1e-8)
    assert traj.times[-1] == 1.0 and np.all(np.diff(traj.times) > 0)
    assert len(traj.times) == 200


def test_reduced_dynamics_settle_at_analytic_time():
    k = math.pi / 2
    z0 = np.full(4, 5.0)
    traj = integrate(lambda z: reduced_rhs(z, k), z0, 1.0)
    assert traj.stop_event.kind in (StopKind.RESIDUAL_SETTLED, StopKind.RESIDUAL_FLOOR)
    assert traj.settle_time == pytest.approx(math.atan(10.0) / k, abs=1e-6)
    # frozen after the stop
    after = traj.times > traj.settle_time
    assert after.any()
    np.testing.assert_array_equal(traj.states[after], np.broadcast_to(traj.final_state, traj.states[after].shape))
    # direction is preserved and the norm is nonincreasing
    cos = traj.states[~after] @ z0 / (np.linalg.norm(traj.states[~after], axis=1) * np.linalg.norm(z0))
    moving = traj.residual_norms[~after] > 1e-6
    assert np.all(cos[moving] >= 1 - 1e-8)
    assert np.all(np.diff(traj.residual_norms) <= 1e-9)


def test_event_time_is_bracketed_tightly():
    k = 2.0
    traj = integrate(lambda z: reduced_rhs(z, k), [3.0, 4.0], 2.0)
    assert abs(traj.settle_time - math.atan(5.0) / k) < 1e-8


def test_halving_tolerances_is_consistent():
    f = lambda y: np.array([y[1], -4.0 * y[0] - 0.1 * y[1]])
    a = integrate(f, [1.0, 0.0], 2.0, IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10))
    b = integrate(f, [1.0, 0.0], 2.0, IntegratorConfig(rel_tol=5e-9, abs_tol=5e-11))
    assert np.abs(a.final_state - b.final_state).max() < 10 * 1e-8


def test_positivity_rejection_and_record():
    # a stiff decay toward zero that an unguarded step may overshoot
    traj = integrate(lambda y: -50.0 * (y + 1e-12), [1.0, 2.0], 1.0, nonnegative=True)
    assert traj.min_component >= -1e-9
    # a flow whose exact solution leaves the orthant cannot be continued
    traj = integrate(lambda y: -np.ones_like(y), [1e-3], 1.0, nonnegative=True,
                     residual=lambda y: np.ones(1))
    assert traj.failed and "positivity" in traj.stop_event.message
    assert traj.n_rejected > 0 and traj.min_component >= -1e-9
    assert traj.stop_event.time == pytest.approx(1e-3, abs=1e-6)


def test_rhs_failure_is_a_step_failure():
    def rhs(y):
        raise np.linalg.LinAlgError("singular")

    traj = integrate(rhs, [1.0], 1.0)
    assert traj.failed and traj.stop_event.kind is StopKind.STEP_FAILURE
    assert traj.times[0] == 0.0


def test_max_steps():
    traj = integrate(lambda y: np.array([y[1], -1e4 * y[0]]), [1.0, 0.0], 10.0, IntegratorConfig(max_steps=5))
    assert traj.failed and "max_steps" in traj.stop_event.message
    assert np.all(np.diff(traj.times) > 0)


def test_equilibrium_start():
    traj = integrate(lambda z: reduced_rhs(z, 1.0), np.zeros(3), 1.0)
    assert traj.settled and traj.settle_time == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=1e-16)
    with pytest.raises(ValueError):
        IntegratorConfig(abs_tol=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(sample_count=1)
    with pytest.raises(ValueError):
        integrate(lambda y: y, [np.nan], 1.0)


def test_csv_export(tmp_path):
    traj = integrate(lambda x: -x, [1.0, 2.0], 1.0, IntegratorConfig(sample_count=11))
    path = tmp_path / "traj.csv"
    write_trajectory_csv(path, traj, ["a", "b"])
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "a", "b", "z_norm"]
    assert len(rows) == 12
    assert float(rows[-1][1]) == traj.final_state[0]
    with pytest.raises(ValueError):
        write_trajectory_csv(path, traj, ["a"])


def test_ray_coordinates_match_plain_integration():
    f = lambda y: np.array([-y[0] + 0.5 * y[1], -2.0 * y[1]])
    plain = integrate(f, [1.0, 3.0], 1.0)
    ray = integrate(f, [1.0, 3.0], 1.0, ray=True)
    np.testing.assert_allclose(ray.final_state, plain.final_state, rtol=1e-8)
    np.testing.assert_allclose(ray.states, plain.states, rtol=1e-8)
    with pytest.raises(ValueError):
        integrate(f, [1.0, -1.0], 1.0, ray=True)


def test_scaled_clock_with_ray_coordinates():
    # on the log-residual clock the reduced flow settles at the analytic time
    k = math.pi / 2
    z0 = np.array([3.0, 4.0])
    speed = lambda z: k * (1 / np.linalg.norm(z) + np.linalg.norm(z))
    traj = integrate(lambda z: reduced_rhs(z, k), z0, 1.0, time_scale=speed,
                     clock_limit=40.0, ray=True)
    assert traj.stop_event.kind is StopKind.RESIDUAL_SETTLED
    assert abs(traj.settle_time - math.atan(5.0) / k) < 1e-6
    with pytest.raises(ValueError):
        integrate(lambda z: reduced_rhs(z, k), z0, 1.0, time_scale=speed)
