"""Weighted-Chebyshev penalty objective over theta = (rho, z, delta).

P(theta) = rho + u/2 * sum_i h_i(z)^2 + v/2 * sum_s (lambda_s f_s(z) + delta_s - rho)^2
"""

import math
from typing import Any, Union

import numpy as np

from ecmo_solver.config import DEFAULT_C_BATCH, DEFAULT_C_ETA, DEFAULT_C_UV
from ecmo_solver.errors import InputError, NumericError
from ecmo_solver.functions import as_point
from ecmo_solver.model import DualVariables, PenaltyParams, PenaltyState, Preference
from ecmo_solver.problem import ECMOProblem, Evaluation, eval_objectives

PreferenceLike = Union[Preference, Any]


def as_weights(preference: PreferenceLike, size: int, allow_zero: bool = False) -> np.ndarray:
    """Validated weight vector of a preference given as Preference or a plain sequence"""
    if not isinstance(preference, Preference):
        preference = Preference(np.asarray(preference, dtype=float), allow_zero=allow_zero)
    elif not allow_zero and np.any(preference.weights <= 0):
        raise InputError("lambda components must be strictly positive")
    if preference.size != size:
        raise InputError(f"lambda has {preference.size} components, the problem has {size} objectives")
    return preference.weights


def _check_state(problem: ECMOProblem, state: PenaltyState) -> None:
    as_point(state.z, problem.dimension)
    if np.shape(state.delta) != (problem.num_objectives,):
        raise InputError(f"delta must have {problem.num_objectives} components, got shape {np.shape(state.delta)}")


def scalarization_residuals(weights: np.ndarray, state: PenaltyState, F: np.ndarray) -> np.ndarray:
    """lambda_s f_s(z) + delta_s - rho for every objective"""
    return weights * F + state.delta - state.rho


def penalty_parts(
    weights: np.ndarray, u: float, v: float, state: PenaltyState, evaluation: Evaluation
) -> tuple[float, PenaltyState, DualVariables]:
    """Penalty value, gradient (in theta layout) and duals from one shared evaluation"""
    residuals = scalarization_residuals(weights, state, evaluation.F)
    h = evaluation.h
    value = state.rho + 0.5 * u * float(h @ h) + 0.5 * v * float(residuals @ residuals)
    omega = v * residuals
    nu = u * h
    gradient = PenaltyState(
        rho=1.0 - float(omega.sum()),
        z=evaluation.JF.T @ (omega * weights) + evaluation.Jh.T @ nu,
        delta=omega,
    )
    return value, gradient, DualVariables(omega=omega, nu=nu)


def _evaluate(problem: ECMOProblem, preference: PreferenceLike, state: PenaltyState) -> tuple[np.ndarray, Evaluation]:
    weights = as_weights(preference, problem.num_objectives)
    _check_state(problem, state)
    evaluation = problem.evaluate(state.z)
    if not evaluation.is_finite():
        raise NumericError(f"non-finite function evaluation at z={np.asarray(state.z).tolist()}")
    return weights, evaluation


def penalty_value(problem: ECMOProblem, preference: PreferenceLike, u: float, v: float, state: PenaltyState) -> float:
    weights, evaluation = _evaluate(problem, preference, state)
    value, _, _ = penalty_parts(weights, u, v, state, evaluation)
    if not np.isfinite(value):
        raise NumericError("non-finite penalty value")
    return value


def penalty_gradient(
    problem: ECMOProblem, preference: PreferenceLike, u: float, v: float, state: PenaltyState
) -> PenaltyState:
    """Gradient of the penalty objective, returned with the (rho, z, delta) layout of a state"""
    weights, evaluation = _evaluate(problem, preference, state)
    _, gradient, _ = penalty_parts(weights, u, v, state, evaluation)
    if not gradient.is_finite():
        raise NumericError("non-finite penalty gradient")
    return gradient


def recover_duals(
    problem: ECMOProblem, preference: PreferenceLike, u: float, v: float, state: PenaltyState
) -> DualVariables:
    """omega_s = v (lambda_s f_s + delta_s - rho), nu_i = u h_i"""
    weights, evaluation = _evaluate(problem, preference, state)
    _, _, duals = penalty_parts(weights, u, v, state, evaluation)
    return duals


def project_feasible(state: PenaltyState) -> PenaltyState:
    """Projection onto R x R^k x R_+^S"""
    return PenaltyState(rho=state.rho, z=state.z, delta=np.maximum(state.delta, 0.0))


def batch_size(T: int, c_batch: float) -> int:
    # 10000 ** 1.25 evaluates to 100000.00000000001
    return max(1, math.ceil(round(c_batch * T**1.25, 9)))


def default_schedule(
    T: int,
    c_eta: float = DEFAULT_C_ETA,
    c_uv: float = DEFAULT_C_UV,
    c_batch: float = DEFAULT_C_BATCH,
    seed: Union[int, None] = None,
) -> PenaltyParams:
    """eta = c_eta T^(-1/4), u = v = c_uv T^(1/4), stochastic batches ceil(c_batch T^(5/4))"""
    if int(T) < 1:
        raise InputError(f"T must be a positive integer, got {T!r}")
    if not (c_eta > 0 and c_uv > 0 and c_batch > 0):
        raise InputError("schedule constants must be positive")
    quarter = T**0.25
    batch = batch_size(T, c_batch)
    return PenaltyParams(
        u=c_uv * quarter, v=c_uv * quarter, eta=c_eta / quarter, T=int(T), batch_B=batch, batch_T=batch, seed=seed
    )


def initial_state(problem: ECMOProblem, preference: PreferenceLike, z0: Any) -> PenaltyState:
    """rho_0 = max_s lambda_s f_s(z0), delta_0 = rho_0 - lambda f(z0), so every scalarized constraint starts tight"""
    weights = as_weights(preference, problem.num_objectives)
    z = as_point(z0, problem.dimension).copy()
    scaled = weights * eval_objectives(problem, z)
    if not np.all(np.isfinite(scaled)):
        raise NumericError(f"non-finite objective at the initial point {z.tolist()}")
    rho = float(scaled.max())
    if rho < 0:
        raise InputError(f"initial rho {rho!r} is negative; shift the objectives positive first")
    return PenaltyState(rho=rho, z=z, delta=rho - scaled)
