import numpy as np
import pytest

from hmcpflow.harness import generate_random
from hmcpflow.mcp import kkt_residual, monotone_gap, phi, phi_jacobian, split
from hmcpflow.problem import make_lp, make_qp

from conftest import central_jacobian, rel_err


def test_phi_vanishes_at_constructed_kkt_points():
    lp = make_lp([1.0], [[1.0]], [1.0])
    np.testing.assert_array_equal(phi(lp, [1.0, 1.0]), [0.0, 0.0])
    qp = make_qp(np.eye(1), [0.0], [[1.0]], [0.0])
    np.testing.assert_array_equal(phi(qp, [0.0, 0.0]), [0.0, 0.0])


def test_phi_rejects_wrong_length(program):
    with pytest.raises(ValueError, match="length"):
        phi(program, np.ones(3))
    x, y = split(program, np.arange(7.0))
    assert x.tolist() == [0, 1, 2, 3, 4] and y.tolist() == [5, 6]


def test_lp_jacobian_is_skew(rng):
    p = generate_random("lp", 5, 2, seed=0)
    J = phi_jacobian(p, rng.random(7))
    np.testing.assert_array_equal(J[:5, :5], 0.0)
    np.testing.assert_array_equal(J[:5, 5:], -p.A.T)
    np.testing.assert_array_equal(J[5:, :5], p.A)
    np.testing.assert_array_equal(J[5:, 5:], 0.0)
    np.testing.assert_array_equal(J, -J.T)


def test_qp_identity_hessian_block():
    p = make_qp(np.eye(2), [1.0, -1.0], [[1.0, 1.0]], [0.5])
    np.testing.assert_array_equal(phi_jacobian(p, np.ones(3))[:2, :2], np.eye(2))


def test_jacobian_matches_central_differences(family, rng):
    p = generate_random(family, 5, 2, seed=11)
    for _ in range(10):
        xb = rng.random(7) * 2
        fd = central_jacobian(lambda v: phi(p, v), xb)
        assert rel_err(fd, phi_jacobian(p, xb)) < 1e-6


def test_monotone_gap_nonnegative(family, rng):
    p = generate_random(family, 5, 2, seed=5)
    gaps = [monotone_gap(p, rng.random(7) * 3, rng.random(7) * 3) for _ in range(1000)]
    assert min(gaps) >= -1e-9
    x = rng.random(7)
    assert monotone_gap(p, x, x) == 0.0


def test_lp_gap_is_zero(rng):
    p = generate_random("lp", 5, 2, seed=6)
    for _ in range(100):
        assert abs(monotone_gap(p, rng.random(7) * 3, rng.random(7) * 3)) < 1e-12


def test_kkt_residual_blocks():
    lp = make_lp([1.0], [[1.0]], [1.0])
    assert kkt_residual(lp, [1.0], [1.0]) == (0.0, 0.0, 0.0)
    # x = 0 violates x >= 1 by one unit; reduced cost 1 - 1 = 0
    r = kkt_residual(lp, [0.0], [1.0])
    assert r.feasibility == 1.0 and r.stationarity == 0.0 and r.complementarity == 1.0
    # negative reduced cost and a negative x both count toward stationarity
    r = kkt_residual(lp, [-0.5], [3.0])
    assert r.stationarity == pytest.approx(2.0 + 0.5)
    assert r.max() == max(r)
