"""Iterative solvers: weighted-Chebyshev penalty descent (deterministic and stochastic) and projected
gradient descent on the linear scalarization for affine-constrained convex problems."""

import logging
from enum import Enum
from typing import Any, Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from ecmo_solver.config import CONVEXITY_PROBE_SEGMENTS
from ecmo_solver.errors import DivergedError, InputError, NumericError
from ecmo_solver.functions import as_point
from ecmo_solver.kkt import kkt_from_evaluation, ls_kkt_from_evaluation
from ecmo_solver.model import KKTResidual, PenaltyParams, PenaltyState, SolverConfig, SolveResult, Trace, TraceRecord
from ecmo_solver.penalty import as_weights, default_schedule, initial_state, penalty_parts, project_feasible
from ecmo_solver.problem import (
    ECMOProblem,
    Evaluation,
    StochasticProblem,
    affine_system,
    quadratic_hessian,
    sample_stream,
)

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-10


class SolverKind(str, Enum):
    WC = "wc"
    WC_STOC = "wc-stoc"
    LS = "ls"


def _record(
    iteration: int, objective: float, kkt: KKTResidual, state: PenaltyState, h: np.ndarray, violation: float = 0.0
) -> TraceRecord:
    return TraceRecord(
        iteration=iteration,
        objective=float(objective),
        kkt_sq=kkt.sq_norm,
        kkt_rho=kkt.block_rho,
        kkt_z_norm=kkt.z_norm,
        kkt_primal_norm=kkt.primal_norm,
        kkt_slack_norm=kkt.slack_norm,
        rho=float(state.rho),
        h_norm=float(np.linalg.norm(h)),
        delta_violation=float(violation),
        delta_max=float(np.max(state.delta, initial=0.0)),
    )


def _initial_point(config: SolverConfig, problem: ECMOProblem) -> np.ndarray:
    if config.z0 is None:
        raise InputError("an initial point z0 is required")
    return as_point(config.z0, problem.dimension).copy()


def solve_wc_penalty(problem: ECMOProblem, preference: Any, config: SolverConfig) -> SolveResult:
    """Projected gradient descent on the weighted-Chebyshev penalty objective for a fixed preference"""
    return _run_penalty(problem, preference, config, SolverKind.WC)


def solve_wc_penalty_stochastic(
    problem: StochasticProblem, preference: Any, config: SolverConfig, stream_key: Sequence[int] = ()
) -> SolveResult:
    """Penalty descent driven by mini-batch estimates; the traced KKT residual uses exact evaluations.

    :param stream_key: distinguishes the sample streams of solves sharing one seed
    """
    params = config.params or default_schedule(config.T)
    if params.seed is None:
        raise InputError("a stochastic solve needs a seed")
    rng = sample_stream(params.seed, stream_key)

    def sampler(z: np.ndarray) -> Evaluation:
        return problem.sample(z, params.batch_B, params.batch_T, rng)

    return _run_penalty(problem.base, preference, config, SolverKind.WC_STOC, sampler, params)


def _run_penalty(
    problem: ECMOProblem,
    preference: Any,
    config: SolverConfig,
    kind: SolverKind,
    sampler: Optional[Callable[[np.ndarray], Evaluation]] = None,
    params: Optional[PenaltyParams] = None,
) -> SolveResult:
    weights = as_weights(preference, problem.num_objectives)
    params = params or config.params or default_schedule(config.T)
    u, v, eta = params.u, params.v, params.eta
    state = initial_state(problem, weights, _initial_point(config, problem))
    logger.info(
        f"{kind.value} solve of {problem.name or 'problem'}: lambda={weights.tolist()} T={config.T} "
        f"eta={eta:.4g} u={u:.4g} v={v:.4g}"
    )

    trace = Trace()
    total, best = 0.0, np.inf
    iterations, truncated = config.T, False
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for t in range(config.T):
            try:
                evaluation = problem.evaluate(state.z)
                if not evaluation.is_finite():
                    raise NumericError("non-finite function evaluation")
                value, gradient, duals = penalty_parts(weights, u, v, state, evaluation)
                kkt = kkt_from_evaluation(weights, state.rho, evaluation, duals.omega, duals.nu)
                if sampler is not None:
                    sampled = sampler(state.z)
                    if not sampled.is_finite():
                        raise NumericError("non-finite sampled evaluation")
                    _, gradient, _ = penalty_parts(weights, u, v, state, sampled)
                if not (np.isfinite(value) and gradient.is_finite()):
                    raise NumericError("non-finite penalty value or gradient")
            except ArithmeticError as error:
                logger.error(f"{kind.value} solve diverged at iteration {t}: {error}")
                raise DivergedError(f"diverged at iteration {t}: {error}", state=state, iteration=t) from error

            total += kkt.sq_norm
            best = min(best, kkt.sq_norm)
            stepped = PenaltyState(
                rho=state.rho - eta * gradient.rho,
                z=state.z - eta * gradient.z,
                delta=state.delta - eta * gradient.delta,
            )
            violation = max(0.0, -float(np.min(stepped.delta, initial=0.0)))
            if t % config.record_every == 0:
                trace.records.append(_record(t, value, kkt, state, evaluation.h, violation))
                logger.debug(f"t={t} P={value:.6g} kkt_sq={kkt.sq_norm:.6g} rho={state.rho:.6g}")
            if config.stop_tol is not None and kkt.sq_norm <= config.stop_tol:
                iterations, truncated = t + 1, True
                break
            if not stepped.is_finite():
                logger.error(f"{kind.value} solve diverged at iteration {t + 1}")
                raise DivergedError(f"non-finite iterate at iteration {t + 1}", state=state, iteration=t + 1)
            state = project_feasible(stepped)

        evaluation = problem.evaluate(state.z)
        if not evaluation.is_finite():
            raise DivergedError(
                f"non-finite function evaluation at iteration {iterations}", state=state, iteration=iterations
            )
    if not truncated:
        value, _, duals = penalty_parts(weights, u, v, state, evaluation)
        kkt = kkt_from_evaluation(weights, state.rho, evaluation, duals.omega, duals.nu)
        trace.records.append(_record(config.T, value, kkt, state, evaluation.h))

    result = SolveResult(
        solver=kind.value,
        weights=weights,
        final_state=state,
        final_F=evaluation.F,
        final_constraint_norm=float(np.linalg.norm(evaluation.h)),
        avg_kkt_sq=total / iterations,
        min_kkt_sq=float(best),
        iterations=iterations,
        trace=trace,
        config={"solver": kind.value, "lambda": weights.tolist(), **config.to_dict(), "params": params.to_dict()},
        seed=params.seed if kind is SolverKind.WC_STOC else None,
        truncated=truncated,
    )
    logger.info(
        f"{kind.value} solve finished: |h|={result.final_constraint_norm:.3g} avg_kkt_sq={result.avg_kkt_sq:.3g}"
        + (" (stopped early)" if truncated else "")
    )
    return result


class AffineProjector:
    """Euclidean projection onto {z : Az = b}, w - A^T (A A^T)^{-1} (A w - b)"""

    def __init__(self, A: np.ndarray, b: np.ndarray):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        if self.A.ndim != 2 or self.b.shape != (self.A.shape[0],):
            raise InputError(f"incompatible constraint shapes A {self.A.shape} and b {self.b.shape}")
        self._factor = None
        if self.A.shape[0]:
            if np.linalg.matrix_rank(self.A) < self.A.shape[0]:
                raise InputError(f"constraint matrix has rank below its {self.A.shape[0]} rows")
            try:
                self._factor = scipy.linalg.cho_factor(self.A @ self.A.T)
            except np.linalg.LinAlgError as error:
                raise InputError("constraint matrix is rank deficient") from error

    def __call__(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if self._factor is None:
            return w.copy()
        return w - self.A.T @ scipy.linalg.cho_solve(self._factor, self.A @ w - self.b)

    def residual(self, z: np.ndarray) -> float:
        return float(np.linalg.norm(self.A @ z - self.b)) if len(self.b) else 0.0


def project_affine(A: Any, b: Any, w: Any) -> np.ndarray:
    """argmin over Az = b of |z - w|"""
    projector = AffineProjector(A, b)
    return projector(as_point(w, projector.A.shape[1]))


def estimate_lipschitz(problem: ECMOProblem, weights: np.ndarray) -> float:
    """Largest eigenvalue of sum_s lambda_s Q_s for quadratic objectives"""
    hessian = np.zeros((problem.dimension, problem.dimension))
    for weight, objective in zip(weights, problem.objectives):
        if weight == 0:
            continue
        quadratic = quadratic_hessian(objective)
        if quadratic is None:
            raise InputError("a Lipschitz constant is required for objectives that are not quadratic")
        hessian += weight * quadratic
    lipschitz = float(np.linalg.eigvalsh(0.5 * (hessian + hessian.T)).max())
    if lipschitz <= 0:
        raise InputError("estimated Lipschitz constant is not positive; pass one explicitly")
    return lipschitz


def midpoint_convex(
    problem: ECMOProblem, weights: np.ndarray, center: np.ndarray, segments: int = CONVEXITY_PROBE_SEGMENTS
) -> bool:
    """Sampled midpoint convexity test of the scalarized objective"""
    if problem.bounding_box is not None:
        low, high = problem.bounding_box[:, 0], problem.bounding_box[:, 1]
    else:
        low, high = center - 1.0, center + 1.0
    rng = np.random.default_rng(0)
    starts = rng.uniform(low, high, size=(segments, problem.dimension))
    ends = rng.uniform(low, high, size=(segments, problem.dimension))
    scalarized = [problem.objective_values_batch(points) @ weights for points in (starts, ends, (starts + ends) / 2)]
    at_start, at_end, at_middle = scalarized
    slack = 1e-9 * (1.0 + np.abs(at_start) + np.abs(at_end))
    return bool(np.all(at_middle <= 0.5 * (at_start + at_end) + slack))


def solve_ls(problem: ECMOProblem, preference: Any, config: SolverConfig) -> SolveResult:
    """Projected gradient descent with step 1/L on sum_s lambda_s f_s over {z : Az = b}"""
    weights = as_weights(preference, problem.num_objectives, allow_zero=True)
    A, b = affine_system(problem)
    projector = AffineProjector(A, b)
    lipschitz = config.lipschitz or estimate_lipschitz(problem, weights)
    z = _initial_point(config, problem)
    warnings = []
    if not midpoint_convex(problem, weights, z):
        warnings.append("scalarized objective failed the sampled midpoint convexity check")
    if projector.residual(z) > FEASIBILITY_TOL:
        warnings.append("infeasible z0 projected onto the constraint set")
        z = projector(z)
    for message in warnings:
        logger.warning(message)
    logger.info(f"ls solve of {problem.name or 'problem'}: lambda={weights.tolist()} T={config.T} L={lipschitz:.6g}")

    trace = Trace()
    total, best = 0.0, np.inf
    iterations, truncated = config.T, False
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(config.T):
            evaluation = problem.evaluate(z)
            state = PenaltyState(rho=float(weights @ evaluation.F), z=z, delta=np.zeros(problem.num_objectives))
            try:
                if not evaluation.is_finite():
                    raise NumericError("non-finite function evaluation")
                kkt = ls_kkt_from_evaluation(weights, evaluation)
            except NumericError as error:
                raise DivergedError(f"diverged at iteration {t}: {error}", state=state, iteration=t) from error
            total += kkt.sq_norm
            best = min(best, kkt.sq_norm)
            if t % config.record_every == 0:
                trace.records.append(_record(t, state.rho, kkt, state, evaluation.h))
            if config.stop_tol is not None and kkt.sq_norm <= config.stop_tol:
                iterations, truncated = t + 1, True
                break
            z = projector(z - evaluation.JF.T @ weights / lipschitz)

        evaluation = problem.evaluate(z)
        state = PenaltyState(rho=float(weights @ evaluation.F), z=z, delta=np.zeros(problem.num_objectives))
        if not evaluation.is_finite():
            raise DivergedError(
                f"non-finite function evaluation at iteration {iterations}", state=state, iteration=iterations
            )
    if not truncated:
        kkt = ls_kkt_from_evaluation(weights, evaluation)
        trace.records.append(_record(config.T, state.rho, kkt, state, evaluation.h))

    config_echo = {"solver": SolverKind.LS.value, "lambda": weights.tolist(), **config.to_dict()}
    config_echo["lipschitz"] = lipschitz
    return SolveResult(
        solver=SolverKind.LS.value,
        weights=weights,
        final_state=state,
        final_F=evaluation.F,
        final_constraint_norm=float(np.linalg.norm(evaluation.h)),
        avg_kkt_sq=total / iterations,
        min_kkt_sq=float(best),
        iterations=iterations,
        trace=trace,
        config=config_echo,
        truncated=truncated,
        warnings=warnings,
    )
