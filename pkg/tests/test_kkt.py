import numpy as np
import pytest

from ecmo_solver.benchmarks import get_fixture
from ecmo_solver.errors import InputError
from ecmo_solver.functions import MonomialFunction
from ecmo_solver.kkt import kkt_residual, ls_kkt_residual, naive_ps_residual
from ecmo_solver.model import KKTResidual
from ecmo_solver.problem import ECMOProblem


def _quad_affine_duals(z: np.ndarray) -> tuple[np.ndarray, float]:
    """omega and nu solving the stationarity rows of quad_affine at z for lambda = (1/2, 1/2)"""
    problem = get_fixture("quad_affine").ecmo
    evaluation = problem.evaluate(z)
    # unknowns (omega_1, omega_2, nu): two stationarity rows plus sum(omega) = 1
    system = np.vstack([np.column_stack([0.5 * evaluation.JF.T, evaluation.Jh.T]), [1.0, 1.0, 0.0]])
    solution = np.linalg.solve(system, [0.0, 0.0, 1.0])
    return solution[:2], float(solution[2])


def test_residual_vanishes_at_hand_built_point():
    (z,) = MonomialFunction.variables(1)
    problem = ECMOProblem(objectives=(z + 2,), constraints=(z,))
    # omega * lambda * f' + nu * h' = 1 - 1, and rho - lambda * f(0) = 0
    residual = kkt_residual(problem, [1.0], 2.0, np.zeros(1), np.ones(1), -np.ones(1))
    assert residual.block_rho == 0.0
    assert residual.sq_norm == 0.0


def test_residual_at_weighted_chebyshev_optimum():
    problem = get_fixture("quad_affine").ecmo
    z = np.array([1.4, 0.6])
    assert np.allclose(problem.evaluate(z).F, [3.4, 3.4])
    omega, nu = _quad_affine_duals(z)
    assert omega == pytest.approx([3.1 / 5.7, 2.6 / 5.7])
    assert nu == pytest.approx(2 / 3)
    residual = kkt_residual(problem, [0.5, 0.5], 1.7, z, omega, [nu])
    assert residual.sq_norm <= 1e-10


def test_residual_blocks():
    problem = get_fixture("quad_affine").ecmo
    residual = kkt_residual(problem, [0.5, 0.5], 3.0, np.array([1.0, 1.0]), [0.2, 0.3], [1.0])
    # F = (5, 5): rho - lambda F = 0.5, so the slack block is min(omega, 0.5)
    assert residual.block_rho == pytest.approx(-0.5)
    assert np.allclose(residual.block_slack, [0.2, 0.3])
    assert np.allclose(residual.block_primal, [-0.6])
    expected = residual.block_rho**2 + residual.z_norm**2 + residual.primal_norm**2 + residual.slack_norm**2
    assert residual.sq_norm == pytest.approx(expected)


def test_residual_shapes_are_checked():
    problem = get_fixture("quad_affine").ecmo
    with pytest.raises(InputError):
        kkt_residual(problem, [0.5, 0.5], 1.0, np.zeros(2), [1.0], [0.0])
    with pytest.raises(InputError):
        kkt_residual(problem, [0.5, 0.5], 1.0, np.zeros(2), [0.5, 0.5], [0.0, 0.0])


def test_naive_system_never_vanishes_on_constraint_degeneracy():
    problem = get_fixture("counterexample_2").ecmo
    z = np.array([0.0, 0.0, 1.0])
    for alpha in np.linspace(0, 1, 100):
        for multiplier in np.linspace(-5, 5, 100):
            residual = naive_ps_residual(problem, z, [alpha, 1 - alpha], [multiplier, -multiplier])
            assert abs(residual[0]) == pytest.approx(1.0, abs=1e-12)


def test_naive_system_never_vanishes_on_flat_constraint():
    problem = get_fixture("counterexample_1").ecmo
    z = np.array([1.0])
    for alpha in np.linspace(0, 1, 100):
        for multiplier in np.linspace(-5, 5, 100):
            residual = naive_ps_residual(problem, z, [alpha, 1 - alpha], [multiplier])
            assert residual[0] == pytest.approx(-1.0, abs=1e-12)


def test_linear_scalarization_residual_at_optimum():
    problem = get_fixture("quad_affine").ecmo
    # 0.5 (f1 + f2) has Hessian 5 I and gradient 5 z - (8, 2); constraint 0.5 z1 - z2 = 0.1
    system = np.array([[5.0, 0.0, 0.5], [0.0, 5.0, -1.0], [0.5, -1.0, 0.0]])
    solution = np.linalg.solve(system, [8.0, 2.0, 0.1])
    residual = ls_kkt_residual(problem, [0.5, 0.5], solution[:2])
    assert residual.sq_norm <= 1e-20
    assert ls_kkt_residual(problem, [0.5, 0.5], np.array([0.0, 0.0])).sq_norm > 1.0


def test_linear_scalarization_accepts_zero_weights():
    problem = get_fixture("quad_affine").ecmo
    residual = ls_kkt_residual(problem, [1.0, 0.0], np.array([0.1, -0.05]))
    assert residual.sq_norm <= 1e-20


def test_overflowing_residual_is_infinite():
    with np.errstate(over="ignore"):
        residual = KKTResidual.from_blocks(1e200, np.zeros(1), np.zeros(0), np.zeros(1))
    assert residual.sq_norm == np.inf
    assert residual.block_rho == 1e200
