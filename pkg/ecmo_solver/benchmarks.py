"""Registry of benchmark problems with independent reference-front oracles"""

import functools
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from ecmo_solver.config import DEFAULT_C_ETA, DEFAULT_C_UV, DEFAULT_GRID_DENSITY
from ecmo_solver.errors import CapabilityError, InputError
from ecmo_solver.functions import MonomialFunction, NativeFunction
from ecmo_solver.model import FrontEntry, PenaltyParams, ParetoFront
from ecmo_solver.pareto import pareto_mask
from ecmo_solver.penalty import default_schedule
from ecmo_solver.problem import ECMOProblem, MTBLProblem, mtbl_to_ecmo

logger = logging.getLogger(__name__)

GridSampler = Callable[[int], np.ndarray]


@dataclass(frozen=True, eq=False)
class Fixture:
    name: str
    problem: Union[ECMOProblem, MTBLProblem]
    z0: np.ndarray
    """Default initial point"""
    bounding_box: np.ndarray
    notes: str = ""
    """Provenance and known analytic facts"""
    sampler: Optional[GridSampler] = None
    """Maps a density n to n feasible points along a bounded parameterization of the feasible set"""
    grid_density: int = DEFAULT_GRID_DENSITY
    c_eta: float = DEFAULT_C_ETA
    """Recommended step-size constant of the penalty schedule"""
    c_uv: float = DEFAULT_C_UV
    """Recommended penalty constant of the penalty schedule"""
    ecmo: ECMOProblem = field(init=False, repr=False)
    """The problem in equality-constrained form"""

    def __post_init__(self):
        problem = mtbl_to_ecmo(self.problem) if isinstance(self.problem, MTBLProblem) else self.problem
        object.__setattr__(self, "ecmo", problem)
        object.__setattr__(self, "z0", np.asarray(self.z0, dtype=float))
        object.__setattr__(self, "bounding_box", np.asarray(self.bounding_box, dtype=float))

    @property
    def has_reference_front(self) -> bool:
        return self.sampler is not None

    def default_schedule(self, T: int, c_batch: float = 1.0, seed: Optional[int] = None) -> PenaltyParams:
        return default_schedule(T, self.c_eta, self.c_uv, c_batch, seed)


def reference_front(fixture: Fixture, grid_density: Optional[int] = None) -> ParetoFront:
    """Dense grid over the feasible set, evaluated and reduced to its non-dominated points"""
    if fixture.sampler is None:
        raise CapabilityError(f"reference front unavailable for {fixture.name}: no bounded feasible parameterization")
    density = grid_density or fixture.grid_density
    if density < 2:
        raise InputError(f"grid density must be at least 2, got {density}")
    points = fixture.sampler(density)
    values = fixture.ecmo.objective_values_batch(points)
    keep = pareto_mask(values)
    logger.debug(f"{fixture.name} oracle: {keep.sum()} of {density} grid points are non-dominated")
    return ParetoFront([FrontEntry(z=z, F=f, run_id="oracle") for z, f in zip(points[keep], values[keep])])


def _gebken_circle() -> Fixture:
    z1, z2 = MonomialFunction.variables(2)
    problem = ECMOProblem(
        objectives=((z1 - 2) ** 2 + (z2 - 1) ** 2, (z1 - 2) ** 2 + (z2 + 1) ** 2),
        constraints=(1 - z1**2 - z2**2,),
        name="gebken_circle",
        bounding_box=[[-1.5, 1.5], [-1.5, 1.5]],
    )

    def sampler(density: int) -> np.ndarray:
        angles = np.linspace(-np.pi, np.pi, density, endpoint=False)
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)

    return Fixture(
        name="gebken_circle",
        problem=problem,
        z0=np.array([0.9, 0.0]),
        bounding_box=problem.bounding_box,
        notes="Two squared distances to (2, 1) and (2, -1) on the unit circle. The front is the arc |angle| <= "
        "atan(1/2) whose endpoints (2, +-1)/sqrt(5) project the objective centres onto the circle; the equal "
        "preference lands on z = (1, 0) with F = (2, 2).",
        sampler=sampler,
        grid_density=100_000,
        c_eta=0.0035,
        c_uv=28.0,
    )


def _quad_affine() -> Fixture:
    z1, z2 = MonomialFunction.variables(2)
    problem = ECMOProblem(
        objectives=(z1**2 + 4 * z2**2, 4 * (z1 - 2) ** 2 + (z2 - 2) ** 2),
        constraints=(0.5 * z1 - z2 - 0.1,),
        name="quad_affine",
        bounding_box=[[-5.0, 5.0], [-5.0, 5.0]],
    )

    def sampler(density: int) -> np.ndarray:
        t = np.linspace(-5.0, 5.0, density)
        return np.stack([t, 0.5 * t - 0.1], axis=1)

    return Fixture(
        name="quad_affine",
        problem=problem,
        z0=np.array([1.0, 1.0]),
        bounding_box=problem.bounding_box,
        notes="Convex quadratics on the line z2 = 0.5 z1 - 0.1. Equal preference: weighted-Chebyshev optimum "
        "z = (1.4, 0.6) with F = (3.4, 3.4).",
        sampler=sampler,
        grid_density=100_000,
        c_eta=0.005,
        c_uv=10.0,
    )


def _forum_llgc() -> Fixture:
    x, y1, y2, y3 = MonomialFunction.variables(4)
    problem = MTBLProblem(
        upper_objectives=(
            (y1 - 1) ** 2 + (y2 - x) ** 2 + y3**2,
            (y1 - 2) ** 2 + (y2 - x) ** 2 + y3**2,
        ),
        lower_objective=0.5 * (y1 - x) ** 2 + 0.5 * (y2 - x) ** 2 + 0.25 * y3**4,
        p=1,
        q=3,
        name="forum_llgc",
        bounding_box=[[0.0, 3.0], [0.0, 3.0], [0.0, 3.0], [-1.0, 1.0]],
    )

    def sampler(density: int) -> np.ndarray:
        t = np.linspace(0.0, 3.0, density)
        return np.stack([t, t, t, np.zeros_like(t)], axis=1)

    return Fixture(
        name="forum_llgc",
        problem=problem,
        z0=np.array([1.5, 1.5, 1.5, 0.5]),
        bounding_box=problem.bounding_box,
        notes="Convex lower level solved by y = (x, x, 0); the front is {((x-1)^2, (x-2)^2) : x in [1, 2]}.",
        sampler=sampler,
        grid_density=10_000,
        c_eta=0.02,
        c_uv=10.0,
    )


def _llgc_cubic() -> Fixture:
    x, y = MonomialFunction.variables(2)
    problem = MTBLProblem(
        upper_objectives=(y, y + 1),
        lower_objective=x * y + 0.25 * y**4,
        p=1,
        q=1,
        name="llgc_cubic",
        bounding_box=[[-2.0, 2.0], [-2.0, 2.0]],
    )
    return Fixture(
        name="llgc_cubic",
        problem=problem,
        z0=np.array([-1.0, 1.0]),
        bounding_box=problem.bounding_box,
        notes="Constraint h = x + y^3 has a gradient (1, 3y^2) of full rank everywhere; the objectives are "
        "unbounded below, so no positive shift or front exists. Constraint Jacobian tests only.",
    )


def _counterexample_1() -> Fixture:
    (z,) = MonomialFunction.variables(1)

    def value(point: np.ndarray) -> float:
        magnitude = abs(point[0])
        return 0.0 if magnitude <= 1 else (magnitude - 1) ** 2

    def gradient(point: np.ndarray) -> np.ndarray:
        magnitude = abs(point[0])
        return np.array([0.0 if magnitude <= 1 else 2 * (magnitude - 1) * np.sign(point[0])])

    constraint = NativeFunction(value, gradient, 1, name="dead_zone")
    problem = ECMOProblem(objectives=(-0.5 * z**2, -z), constraints=(constraint,), name="counterexample_1")

    def sampler(density: int) -> np.ndarray:
        return np.linspace(-1.0, 1.0, density).reshape(-1, 1)

    return Fixture(
        name="counterexample_1",
        problem=problem,
        z0=np.array([1.0]),
        bounding_box=np.array([[-3.0, 3.0]]),
        notes="Feasible set [-1, 1]; z = 1 is Pareto optimal while grad F(1) alpha = -1 for every alpha and the "
        "constraint gradient vanishes there. Piecewise constraint, not twice differentiable at |z| = 1.",
        sampler=sampler,
    )


def _counterexample_2() -> Fixture:
    z1, z2, z3 = MonomialFunction.variables(3)
    problem = ECMOProblem(
        objectives=(z1 + z2, z1 - z2),
        constraints=(z1**2 + z3**2 - 1, z3 - 1),
        name="counterexample_2",
        bounding_box=[[-2.0, 2.0], [-5.0, 5.0], [-2.0, 2.0]],
    )

    def sampler(density: int) -> np.ndarray:
        t = np.linspace(-5.0, 5.0, density)
        return np.stack([np.zeros_like(t), t, np.ones_like(t)], axis=1)

    return Fixture(
        name="counterexample_2",
        problem=problem,
        z0=np.array([0.0, 0.0, 1.0]),
        bounding_box=problem.bounding_box,
        notes="Feasible set {(0, t, 1)}, every feasible point is Pareto optimal. At (0, 0, 1) the constraint "
        "gradients (0, 0, 2) and (0, 0, 1) are dependent and the first coordinate of grad F alpha is 1.",
        sampler=sampler,
    )


def _unbounded_guard() -> Fixture:
    z1, z2 = MonomialFunction.variables(2)
    problem = ECMOProblem(
        objectives=(z1**4 + z2**2 + 1, (z1 - 1) ** 4 + z2**2 + 1),
        constraints=(z1 + z2 - 1,),
        name="unbounded_guard",
        bounding_box=[[-2.0, 2.0], [-2.0, 2.0]],
    )
    return Fixture(
        name="unbounded_guard",
        problem=problem,
        z0=np.array([0.5, 0.5]),
        bounding_box=problem.bounding_box,
        notes="Quartic objectives whose iterates overflow within a few steps once the step size is inflated; "
        "exercises divergence reporting.",
        c_eta=0.01,
    )


# fmt: off
_WEIGHTING_DESIGNS = np.array([
    [
        [0.42, -1.13, 0.85], [1.27, 0.36, -0.54], [-0.88, 0.91, 1.42], [0.15, -0.47, -1.26],
        [1.63, 1.08, 0.23], [-1.35, 0.12, -0.71], [0.67, -1.82, 0.39], [-0.24, 0.55, 1.91],
        [0.98, 1.46, -0.33], [-1.57, -0.69, 0.64], [0.31, 0.83, -1.48], [1.12, -0.28, 1.07],
        [-0.73, 1.64, -0.19], [0.56, -0.95, -0.87], [-1.04, 0.27, 0.96], [1.49, 0.71, 1.35],
        [-0.36, -1.41, 0.08], [0.89, 0.04, -1.62], [-1.21, 1.19, 0.47], [0.07, -0.62, 1.18],
    ],
    [
        [-0.61, 0.94, 1.27], [1.38, -0.22, 0.46], [0.25, 1.57, -0.83], [-1.46, 0.68, 0.12],
        [0.83, -1.35, 0.97], [0.14, 0.41, -1.52], [-0.97, -0.86, 0.58], [1.72, 0.33, 1.09],
        [-0.28, 1.21, -0.44], [0.59, -0.73, -1.17], [-1.18, 0.06, 1.63], [0.46, 1.84, 0.29],
        [1.05, -1.09, -0.66], [-0.52, 0.49, 0.81], [0.77, -0.18, -1.39], [-1.63, 1.32, 0.35],
        [0.38, -1.58, 1.24], [1.26, 0.87, -0.21], [-0.09, -0.41, -0.95], [0.93, 1.03, 1.56],
    ],
])
_WEIGHTING_TRAIN_TARGETS = np.array([
    [1.21, 0.84, -0.37, 1.65, 2.03, -0.92, 1.48, -0.15, 0.61, -1.27,
     1.09, 0.33, -0.74, 1.52, -0.48, 1.86, 0.97, 1.34, -1.05, 0.22],
    [-0.83, 1.42, 0.56, -1.19, 0.28, 1.73, -0.64, 0.91, 1.15, -0.37,
     -1.58, 0.69, 1.24, -0.21, 1.47, -0.95, 0.38, 1.81, -0.46, 0.74],
])
_WEIGHTING_VALIDATION_TARGETS = np.array([
    [1.05, 0.97, -0.52, 1.41, 1.88, -0.79, 1.63, -0.31, 0.48, -1.12,
     1.24, 0.17, -0.86, 1.37, -0.63, 1.71, 1.08, 1.19, -0.91, 0.36],
    [-0.71, 1.29, 0.68, -1.33, 0.41, 1.58, -0.49, 1.06, 0.99, -0.52,
     -1.44, 0.82, 1.11, -0.35, 1.62, -0.81, 0.23, 1.95, -0.59, 0.61],
])
# fmt: on


def _least_squares(design: np.ndarray, target: np.ndarray, y: list[MonomialFunction]) -> MonomialFunction:
    """(1/2n) |design y - target|^2 as a polynomial in y"""
    loss = MonomialFunction.constant(0.0, y[0].dimension)
    for row, value in zip(design, target):
        residual = sum((float(a) * yj for a, yj in zip(row, y)), -float(value))
        loss = loss + residual**2
    return loss / (2 * len(target))


def softmax(x: np.ndarray) -> np.ndarray:
    weights = np.exp(x - x.max())
    return weights / weights.sum()


def weighted_normal_equations(x: np.ndarray) -> np.ndarray:
    """Lower-level solution of the data-weighting fixture for task logits x"""
    weights = softmax(np.asarray(x, dtype=float))
    n = _WEIGHTING_TRAIN_TARGETS.shape[1]
    gram = sum(w * A.T @ A for w, A in zip(weights, _WEIGHTING_DESIGNS)) / n
    moment = sum(w * A.T @ b for w, A, b in zip(weights, _WEIGHTING_DESIGNS, _WEIGHTING_TRAIN_TARGETS)) / n
    return np.linalg.solve(gram, moment)


def _toy_data_weighting() -> Fixture:
    tasks, p, q = 2, 2, 3
    n = _WEIGHTING_TRAIN_TARGETS.shape[1]
    grams = np.array([A.T @ A / n for A in _WEIGHTING_DESIGNS])
    moments = np.array([A.T @ b / n for A, b in zip(_WEIGHTING_DESIGNS, _WEIGHTING_TRAIN_TARGETS)])
    offsets = np.array([b @ b / (2 * n) for b in _WEIGHTING_TRAIN_TARGETS])

    def split(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        x, y = z[:p], z[p:]
        losses = 0.5 * np.einsum("i,sij,j->s", y, grams, y) - moments @ y + offsets
        loss_gradients = grams @ y - moments
        return softmax(x), losses, loss_gradients, y

    def softmax_jacobian(w: np.ndarray) -> np.ndarray:
        return np.diag(w) - np.outer(w, w)

    def value(z: np.ndarray) -> float:
        w, losses, _, _ = split(z)
        return float(w @ losses)

    def gradient(z: np.ndarray) -> np.ndarray:
        w, losses, loss_gradients, _ = split(z)
        return np.concatenate([softmax_jacobian(w).T @ losses, w @ loss_gradients])

    def hessian(z: np.ndarray) -> np.ndarray:
        w, losses, loss_gradients, _ = split(z)
        jacobian = softmax_jacobian(w)
        identity = np.eye(tasks)
        xx = sum(
            losses[s] * w[s] * (np.outer(identity[s] - w, identity[s] - w) - jacobian) for s in range(tasks)
        )
        xy = jacobian.T @ loss_gradients
        yy = np.einsum("s,sij->ij", w, grams)
        return np.block([[xx, xy], [xy.T, yy]])

    variables = MonomialFunction.variables(p + q)
    y = variables[p:]
    upper = tuple(
        _least_squares(A, c, y) for A, c in zip(_WEIGHTING_DESIGNS, _WEIGHTING_VALIDATION_TARGETS)
    )
    problem = MTBLProblem(
        upper_objectives=upper,
        lower_objective=NativeFunction(value, gradient, p + q, hessian=hessian, name="weighted_training_loss"),
        p=p,
        q=q,
        name="toy_data_weighting",
        bounding_box=[[-3.0, 3.0]] * p + [[-3.0, 3.0]] * q,
    )

    def sampler(density: int) -> np.ndarray:
        t = np.linspace(-6.0, 6.0, density)
        logits = np.stack([t / 2, -t / 2], axis=1)
        return np.array([np.concatenate([x, weighted_normal_equations(x)]) for x in logits])

    return Fixture(
        name="toy_data_weighting",
        problem=problem,
        z0=np.zeros(p + q),
        bounding_box=problem.bounding_box,
        notes="Two least-squares tasks on fixed 20x3 designs. The lower level weights the training losses by "
        "softmax(x); the upper level holds the two validation losses. Lower-level solutions solve the weighted "
        "normal equations.",
        sampler=sampler,
        c_eta=0.01,
        c_uv=10.0,
    )


FIXTURES: dict[str, Callable[[], Fixture]] = {
    "gebken_circle": _gebken_circle,
    "quad_affine": _quad_affine,
    "forum_llgc": _forum_llgc,
    "llgc_cubic": _llgc_cubic,
    "counterexample_1": _counterexample_1,
    "counterexample_2": _counterexample_2,
    "toy_data_weighting": _toy_data_weighting,
    "unbounded_guard": _unbounded_guard,
}


@functools.lru_cache(maxsize=None)
def get_fixture(name: str) -> Fixture:
    if name not in FIXTURES:
        raise InputError(f"unknown fixture {name!r}; available: {', '.join(sorted(FIXTURES))}")
    return FIXTURES[name]()
