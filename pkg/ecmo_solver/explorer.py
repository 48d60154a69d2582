"""Preference lattices over the simplex and multi-preference sweeps assembled into a Pareto front"""

import dataclasses
import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Iterator, Union

import numpy as np

from ecmo_solver.errors import DivergedError, InputError, NumericError
from ecmo_solver.model import FrontEntry, Preference, SweepOutcome, SweepResult, SweepSpec
from ecmo_solver.pareto import pareto_filter
from ecmo_solver.penalty import default_schedule
from ecmo_solver.problem import ECMOProblem, StochasticProblem, affine_system
from ecmo_solver.solvers import SolverKind, solve_ls, solve_wc_penalty, solve_wc_penalty_stochastic

logger = logging.getLogger(__name__)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Non-negative integer vectors of length ``parts`` summing to ``total``, in lexicographic order"""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def simplex_grid(S: int, resolution: int, floor: float) -> list[Preference]:
    """Lattice lambda_s = floor + m_s (1 - S floor) / resolution with sum m_s = resolution.

    Resolution 0 yields the centroid.
    """
    if S < 1:
        raise InputError(f"number of objectives must be positive, got {S}")
    if resolution < 0:
        raise InputError(f"resolution must be non-negative, got {resolution}")
    if not 0 < floor or floor * S >= 1:
        raise InputError(f"floor must lie in (0, 1/S) = (0, {1 / S:.6g}), got {floor!r}")
    if resolution == 0:
        return [Preference(np.full(S, 1.0 / S))]
    free = 1.0 - S * floor
    return [
        Preference(floor + np.array(counts, dtype=float) * free / resolution)
        for counts in _compositions(resolution, S)
    ]


def stream_key(weights: np.ndarray) -> tuple[int, ...]:
    """Sample-stream key derived from the preference itself, independent of its position in a sweep"""
    digest = hashlib.sha256(np.ascontiguousarray(weights, dtype=float).tobytes()).digest()
    return tuple(int(word) for word in np.frombuffer(digest[:16], dtype=np.uint32))


def sweep_preferences(
    problem: Union[ECMOProblem, StochasticProblem], spec: SweepSpec, solver: SolverKind = SolverKind.WC
) -> SweepResult:
    """Solve once per preference and assemble the admitted endpoints into a Pareto front.

    Solves that diverge are kept in the outcomes with their error and left out of the front; the sweep
    only fails when every solve fails.
    """
    solver = SolverKind(solver)
    if solver is SolverKind.WC_STOC and not isinstance(problem, StochasticProblem):
        raise InputError("a stochastic sweep needs a StochasticProblem")
    base = problem.base if isinstance(problem, StochasticProblem) else problem
    if solver is SolverKind.LS:
        affine_system(base)
    preferences = spec.preferences or simplex_grid(base.num_objectives, spec.resolution, spec.floor)
    config = spec.config
    if solver is SolverKind.WC_STOC:
        params = config.params or default_schedule(config.T)
        config = dataclasses.replace(config, params=dataclasses.replace(params, seed=spec.seed))

    def run(index: int, preference: Preference) -> SweepOutcome:
        try:
            if solver is SolverKind.WC:
                result = solve_wc_penalty(base, preference, config)
            elif solver is SolverKind.LS:
                result = solve_ls(base, preference, config)
            else:
                result = solve_wc_penalty_stochastic(
                    problem, preference, config, stream_key(preference.weights)  # type: ignore[arg-type]
                )
        except NumericError as error:
            logger.warning(f"sweep solve {index} with lambda={preference.to_list()} failed: {error}")
            return SweepOutcome(index=index, weights=preference.weights, status="failed", error=str(error))
        status = "ok" if result.final_constraint_norm <= spec.admission_tol else "infeasible"
        return SweepOutcome(index=index, weights=preference.weights, status=status, result=result)

    with ThreadPoolExecutor(max_workers=spec.workers) as executor:
        futures = [executor.submit(run, index, preference) for index, preference in enumerate(preferences)]
        outcomes = [future.result() for future in futures]

    if all(outcome.status == "failed" for outcome in outcomes):
        raise DivergedError(f"all {len(outcomes)} solves of the sweep failed")
    entries = [
        FrontEntry(
            z=outcome.result.final_state.z, F=outcome.result.final_F, weights=outcome.weights, run_id=outcome.run_id
        )
        for outcome in outcomes
        if outcome.status == "ok" and outcome.result is not None
    ]
    front = pareto_filter(entries)
    logger.info(f"sweep finished: {len(outcomes)} solves, {len(entries)} admitted, {len(front)} on the front")
    return SweepResult(outcomes=outcomes, front=front)
