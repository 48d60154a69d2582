"""Problem definitions: ECMO problems, multi-task bilevel problems and their reduction, noisy oracles"""

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from ecmo_solver.config import FD_ABS_TOL, FD_STEP
from ecmo_solver.errors import CapabilityError, InputError, NumericError
from ecmo_solver.functions import FunctionStack, MonomialFunction, NativeFunction, ScalarFunction, as_point
from ecmo_solver.model import GradcheckReport

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class Evaluation:
    """Objective and constraint values with their Jacobians at one point"""

    F: np.ndarray
    JF: np.ndarray
    h: np.ndarray
    Jh: np.ndarray

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.F))
            and np.all(np.isfinite(self.JF))
            and np.all(np.isfinite(self.h))
            and np.all(np.isfinite(self.Jh))
        )


def _as_box(bounding_box: Any, dimension: int) -> Optional[np.ndarray]:
    if bounding_box is None:
        return None
    box = np.asarray(bounding_box, dtype=float)
    if box.shape != (dimension, 2) or np.any(box[:, 0] > box[:, 1]):
        raise InputError(f"bounding_box must be {dimension} pairs [lo, hi] with lo <= hi")
    return box


@dataclass(frozen=True, eq=False)
class ECMOProblem:
    objectives: tuple[ScalarFunction, ...]
    """Objectives f_1..f_S, all minimized"""
    constraints: tuple[ScalarFunction, ...] = ()
    """Equality constraints h_i(z) = 0"""
    dimension: int = 0
    """Dimension k of the decision point, inferred from the functions when 0"""
    name: str = ""
    bounding_box: Optional[np.ndarray] = None
    """Box [lo, hi] per coordinate used to sample probe points"""
    metadata: dict = field(default_factory=dict)
    """Free-form annotations; ``shifts`` holds the constants added by shift_positive"""
    _objective_stack: FunctionStack = field(init=False, repr=False)
    _constraint_stack: FunctionStack = field(init=False, repr=False)

    def __post_init__(self):
        objectives = tuple(self.objectives)
        constraints = tuple(self.constraints)
        if not objectives:
            raise InputError("a problem needs at least one objective")
        dimension = self.dimension or objectives[0].dimension
        for function in objectives + constraints:
            if function.dimension != dimension:
                raise InputError(f"all functions must have dimension {dimension}, found {function.dimension}")
        object.__setattr__(self, "objectives", objectives)
        object.__setattr__(self, "constraints", constraints)
        object.__setattr__(self, "dimension", dimension)
        object.__setattr__(self, "bounding_box", _as_box(self.bounding_box, dimension))
        object.__setattr__(self, "metadata", dict(self.metadata))
        object.__setattr__(self, "_objective_stack", FunctionStack(objectives, dimension))
        object.__setattr__(self, "_constraint_stack", FunctionStack(constraints, dimension))

    @property
    def num_objectives(self) -> int:
        return len(self.objectives)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def shifts(self) -> np.ndarray:
        return np.asarray(self.metadata.get("shifts", np.zeros(self.num_objectives)), dtype=float)

    def evaluate(self, z: Any) -> Evaluation:
        point = as_point(z, self.dimension)
        return Evaluation(
            F=self._objective_stack.values(point),
            JF=self._objective_stack.jacobian(point),
            h=self._constraint_stack.values(point),
            Jh=self._constraint_stack.jacobian(point),
        )

    def objective_values_batch(self, points: np.ndarray) -> np.ndarray:
        return self._objective_stack.values_batch(points)

    def constraint_values_batch(self, points: np.ndarray) -> np.ndarray:
        return self._constraint_stack.values_batch(points)

    def to_dict(self) -> dict:
        data: dict = {
            "name": self.name,
            "k": self.dimension,
            "objectives": [f.to_dict() for f in self.objectives],
            "constraints": [h.to_dict() for h in self.constraints],
        }
        if self.bounding_box is not None:
            data["bounding_box"] = self.bounding_box.tolist()
        return data


def eval_objectives(problem: ECMOProblem, z: Any) -> np.ndarray:
    return problem._objective_stack.values(as_point(z, problem.dimension))


def eval_objective_jacobian(problem: ECMOProblem, z: Any) -> np.ndarray:
    return problem._objective_stack.jacobian(as_point(z, problem.dimension))


def eval_constraints(problem: ECMOProblem, z: Any) -> np.ndarray:
    return problem._constraint_stack.values(as_point(z, problem.dimension))


def eval_constraint_jacobian(problem: ECMOProblem, z: Any) -> np.ndarray:
    return problem._constraint_stack.jacobian(as_point(z, problem.dimension))


@dataclass(frozen=True, eq=False)
class MTBLProblem:
    upper_objectives: tuple[ScalarFunction, ...]
    """Upper-level objectives over (x, y)"""
    lower_objective: ScalarFunction
    """Lower-level objective g(x, y), minimized over y"""
    p: int
    """Dimension of the upper-level variable x"""
    q: int
    """Dimension of the lower-level variable y"""
    name: str = ""
    bounding_box: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "upper_objectives", tuple(self.upper_objectives))
        if self.p < 0 or self.q < 1:
            raise InputError(f"invalid bilevel dimensions p={self.p}, q={self.q}")
        dimension = self.p + self.q
        for function in self.upper_objectives + (self.lower_objective,):
            if function.dimension != dimension:
                raise InputError(f"bilevel functions must have dimension p+q={dimension}, found {function.dimension}")


def mtbl_to_ecmo(mtbl: MTBLProblem) -> ECMOProblem:
    """Replace the lower-level argmin by its stationarity condition grad_y g(x, y) = 0"""
    g = mtbl.lower_objective
    dimension = mtbl.p + mtbl.q
    constraints: list[ScalarFunction] = []
    if isinstance(g, MonomialFunction):
        constraints = [g.partial(mtbl.p + i) for i in range(mtbl.q)]
    else:
        if not g.has_hessian:
            raise CapabilityError("lower objective lacks second derivatives, needed for the constraint Jacobian")
        for i in range(mtbl.q):
            constraints.append(
                NativeFunction(
                    lambda z, j=mtbl.p + i: g.gradient(z)[j],
                    lambda z, j=mtbl.p + i: g.hessian(z)[j],
                    dimension,
                    name=f"d{getattr(g, 'name', 'g')}/dy{i + 1}",
                )
            )
    metadata = dict(mtbl.metadata)
    metadata["mtbl"] = {"p": mtbl.p, "q": mtbl.q}
    return ECMOProblem(
        objectives=mtbl.upper_objectives,
        constraints=tuple(constraints),
        dimension=dimension,
        name=mtbl.name,
        bounding_box=mtbl.bounding_box,
        metadata=metadata,
    )


def sample_stream(seed: int, key: Sequence[int] = ()) -> np.random.Generator:
    """Independent random stream for a (seed, key) pair"""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True, eq=False)
class StochasticProblem:
    base: ECMOProblem
    objective_noise_sigma: float = 0.0
    """Standard deviation of a single objective sample, per value and per gradient coordinate"""
    constraint_noise_sigma: float = 0.0
    """Standard deviation of a single constraint sample"""

    def __post_init__(self):
        if self.objective_noise_sigma < 0 or self.constraint_noise_sigma < 0:
            raise InputError("noise sigmas must be non-negative")

    @property
    def noiseless(self) -> bool:
        return self.objective_noise_sigma == 0 and self.constraint_noise_sigma == 0

    def sample(self, z: Any, batch_B: int, batch_T: int, rng: np.random.Generator) -> Evaluation:
        """Mini-batch estimate of the evaluation at z.

        The mean of a batch of n samples with independent additive noise is drawn directly as one
        Gaussian with standard deviation sigma/sqrt(n).
        """
        exact = self.base.evaluate(z)
        if self.noiseless:
            return exact
        F, JF, h, Jh = exact.F, exact.JF, exact.h, exact.Jh
        if self.objective_noise_sigma > 0:
            scale = self.objective_noise_sigma / np.sqrt(batch_B)
            F = F + rng.normal(0.0, scale, F.shape)
            JF = JF + rng.normal(0.0, scale, JF.shape)
        if self.constraint_noise_sigma > 0 and len(h):
            scale = self.constraint_noise_sigma / np.sqrt(batch_T)
            h = h + rng.normal(0.0, scale, h.shape)
            Jh = Jh + rng.normal(0.0, scale, Jh.shape)
        return Evaluation(F=F, JF=JF, h=h, Jh=Jh)


def shift_positive(problem: ECMOProblem, probe_points: Sequence[Any], margin: float) -> ECMOProblem:
    """Add a constant to each objective so that it is at least ``margin`` on every probe point"""
    probes = np.array([as_point(z, problem.dimension) for z in probe_points]).reshape(-1, problem.dimension)
    if len(probes) == 0:
        raise InputError("shift_positive needs at least one probe point")
    minima = problem.objective_values_batch(probes).min(axis=0)
    shifts = np.maximum(0.0, margin - minima)
    if np.any(shifts > 0):
        logger.info(f"shifting objectives of {problem.name or 'problem'} by {shifts.tolist()}")
    objectives = tuple(f.shifted(float(c)) if c > 0 else f for f, c in zip(problem.objectives, shifts))
    metadata = dict(problem.metadata)
    metadata["shifts"] = (problem.shifts + shifts).tolist()
    return dataclasses.replace(problem, objectives=objectives, metadata=metadata)


def unshift_values(problem: ECMOProblem, values: np.ndarray) -> np.ndarray:
    """Objective values of the unshifted problem"""
    return np.asarray(values, dtype=float) - problem.shifts


def default_probe_points(
    problem: ECMOProblem, initial_points: Sequence[Any], count: int = 1000, seed: int = 0
) -> list[np.ndarray]:
    """Initial points plus a uniform sample of the problem's bounding box"""
    probes = [as_point(z, problem.dimension) for z in initial_points]
    if problem.bounding_box is not None and count > 0:
        rng = np.random.default_rng(seed)
        low, high = problem.bounding_box[:, 0], problem.bounding_box[:, 1]
        probes.extend(rng.uniform(low, high, size=(count, problem.dimension)))
    return probes


def gradcheck(fn: ScalarFunction, z: Any, step: float = FD_STEP, abs_floor: float = FD_ABS_TOL) -> GradcheckReport:
    """Compare the analytic gradient with central differences (f(z + h e_i) - f(z - h e_i)) / 2h"""
    if not step > 0:
        raise InputError(f"finite-difference step must be positive, got {step!r}")
    point = as_point(z, fn.dimension)
    analytic = fn.gradient(point)
    if not np.all(np.isfinite(analytic)):
        raise NumericError("non-finite analytic gradient", coordinate=int(np.argmin(np.isfinite(analytic))))
    estimate = np.zeros(fn.dimension)
    for i in range(fn.dimension):
        offset = np.zeros(fn.dimension)
        offset[i] = step
        upper, lower = fn.value(point + offset), fn.value(point - offset)
        if not (np.isfinite(upper) and np.isfinite(lower)):
            raise NumericError(f"non-finite value while differencing coordinate {i}", coordinate=i)
        estimate[i] = (upper - lower) / (2 * step)
    errors = np.abs(analytic - estimate)
    max_abs = float(errors.max(initial=0.0))
    scale = max(float(np.abs(estimate).max(initial=0.0)), abs_floor)
    return GradcheckReport(max_abs_err=max_abs, max_rel_err=max_abs / scale, per_coordinate=errors)


def affine_system(problem: ECMOProblem) -> tuple[np.ndarray, np.ndarray]:
    """(A, b) such that the constraints read A z - b = 0"""
    rows, offsets = [], []
    origin = np.zeros(problem.dimension)
    for constraint in problem.constraints:
        if not isinstance(constraint, MonomialFunction) or constraint.degree > 1:
            raise InputError("constraints must be affine")
        rows.append(constraint.gradient(origin))
        offsets.append(-constraint.value(origin))
    return np.array(rows, dtype=float).reshape(len(rows), problem.dimension), np.array(offsets, dtype=float)


def quadratic_hessian(fn: ScalarFunction) -> Optional[np.ndarray]:
    """Constant Hessian of a monomial sum of degree at most two, None otherwise"""
    if not isinstance(fn, MonomialFunction) or fn.degree > 2:
        return None
    return fn.hessian(np.zeros(fn.dimension))
