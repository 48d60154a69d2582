"""KKT residuals used as convergence metrics"""

from typing import Any

import numpy as np

from ecmo_solver.errors import InputError, NumericError
from ecmo_solver.functions import as_point
from ecmo_solver.model import KKTResidual, Preference
from ecmo_solver.penalty import as_weights
from ecmo_solver.problem import ECMOProblem, Evaluation


def kkt_from_evaluation(
    weights: np.ndarray, rho: float, evaluation: Evaluation, omega: np.ndarray, nu: np.ndarray
) -> KKTResidual:
    """Residual blocks (sum omega - 1; stationarity; h(z); min(omega_s, rho - lambda_s f_s))"""
    block_z = evaluation.JF.T @ (omega * weights) + evaluation.Jh.T @ nu
    block_slack = np.minimum(omega, rho - weights * evaluation.F)
    residual = KKTResidual.from_blocks(float(omega.sum()) - 1.0, block_z, evaluation.h, block_slack)
    if not np.isfinite(residual.sq_norm):
        raise NumericError("non-finite KKT residual")
    return residual


def kkt_residual(
    problem: ECMOProblem, preference: Preference | Any, rho: float, z: Any, omega: Any, nu: Any
) -> KKTResidual:
    weights = as_weights(preference, problem.num_objectives)
    omega = np.asarray(omega, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if omega.shape != (problem.num_objectives,):
        raise InputError(f"omega must have {problem.num_objectives} components, got shape {omega.shape}")
    if nu.shape != (problem.num_constraints,):
        raise InputError(f"nu must have {problem.num_constraints} components, got shape {nu.shape}")
    evaluation = problem.evaluate(z)
    if not evaluation.is_finite():
        raise NumericError(f"non-finite function evaluation at z={np.asarray(z).tolist()}")
    return kkt_from_evaluation(weights, float(rho), evaluation, omega, nu)


def naive_ps_residual(problem: ECMOProblem, z: Any, alpha: Any, v: Any) -> np.ndarray:
    """Stacked (grad F(z) alpha + grad h(z) v, h(z)).

    This system is not a valid Pareto stationarity test; it is kept to reproduce points where it fails
    to vanish although the point is Pareto stationary.
    """
    alpha = as_weights(alpha, problem.num_objectives, allow_zero=True)
    v = np.asarray(v, dtype=float).reshape(problem.num_constraints)
    evaluation = problem.evaluate(as_point(z, problem.dimension))
    return np.concatenate([evaluation.JF.T @ alpha + evaluation.Jh.T @ v, evaluation.h])


def ls_kkt_from_evaluation(weights: np.ndarray, evaluation: Evaluation) -> KKTResidual:
    gradient = evaluation.JF.T @ weights
    if len(evaluation.h):
        nu, *_ = np.linalg.lstsq(evaluation.Jh.T, -gradient, rcond=None)
        stationarity = gradient + evaluation.Jh.T @ nu
    else:
        stationarity = gradient
    residual = KKTResidual.from_blocks(0.0, stationarity, evaluation.h, np.zeros(0))
    if not np.isfinite(residual.sq_norm):
        raise NumericError("non-finite KKT residual")
    return residual


def ls_kkt_residual(problem: ECMOProblem, preference: Preference | Any, z: Any) -> KKTResidual:
    """KKT residual of min lambda^T F(z) s.t. Az = b, with the multiplier chosen by least squares"""
    weights = as_weights(preference, problem.num_objectives, allow_zero=True)
    return ls_kkt_from_evaluation(weights, problem.evaluate(z))
