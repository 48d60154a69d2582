from typing import Callable

import numpy as np

from ecmo_solver.functions import MonomialFunction

# chunk of sample points processed at once by the Monte Carlo hypervolume
MC_CHUNK = 100_000


def random_monomial(rng: np.random.Generator, dimension: int, terms: int = 4, max_power: int = 3) -> MonomialFunction:
    """Random polynomial with coefficients in [-2, 2]"""
    return MonomialFunction(
        [(rng.uniform(-2, 2), rng.integers(0, max_power + 1, size=dimension).tolist()) for _ in range(terms)],
        dimension,
    )


def central_difference(fn: Callable[[np.ndarray], float], z: np.ndarray, step: float = 1e-5) -> np.ndarray:
    estimate = np.zeros(len(z))
    for i in range(len(z)):
        offset = np.zeros(len(z))
        offset[i] = step
        estimate[i] = (fn(z + offset) - fn(z - offset)) / (2 * step)
    return estimate


def relative_error(analytic: np.ndarray, estimate: np.ndarray, floor: float = 1e-8) -> float:
    return float(np.abs(analytic - estimate).max() / max(float(np.abs(estimate).max()), floor))


def brute_force_mask(points: np.ndarray) -> np.ndarray:
    """Non-dominated rows, keeping the first of exact duplicates"""
    keep = np.ones(len(points), dtype=bool)
    for i, p in enumerate(points):
        others = np.delete(np.arange(len(points)), i)
        for j in others:
            q = points[j]
            if np.all(q <= p) and np.any(q < p):
                keep[i] = False
                break
            if j < i and np.all(q == p):
                keep[i] = False
                break
    return keep


def brute_force_epsilon(front: np.ndarray, reference: np.ndarray) -> float:
    worst = 0.0
    for r in reference:
        worst = max(worst, min(float(np.max(p - r)) for p in front))
    return worst


def monte_carlo_hypervolume(points: np.ndarray, ref: np.ndarray, samples: int, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    low = points.min(axis=0)
    box = float(np.prod(ref - low))
    hits = 0
    for start in range(0, samples, MC_CHUNK):
        count = min(MC_CHUNK, samples - start)
        draws = rng.uniform(low, ref, size=(count, len(ref)))
        dominated = np.any(np.all(points[None, :, :] <= draws[:, None, :], axis=2), axis=1)
        hits += int(dominated.sum())
    return box * hits / samples
