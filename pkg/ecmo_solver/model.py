from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

import numpy as np

from ecmo_solver.errors import InputError

SIMPLEX_TOLERANCE = 1e-12


def _floats(values: Any) -> list[float]:
    return [float(x) for x in np.asarray(values, dtype=float).ravel()]


@dataclass(frozen=True, eq=False)
class Preference:
    weights: np.ndarray
    """Weight of each objective, non-negative and summing to one"""
    allow_zero: bool = False
    """Accept zero weights (linear scalarization); weighted-Chebyshev needs them strictly positive"""

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1 or len(weights) == 0:
            raise InputError(f"lambda must be a non-empty vector, got shape {weights.shape}")
        if not np.all(np.isfinite(weights)):
            raise InputError("lambda must be finite")
        if self.allow_zero and np.any(weights < 0):
            raise InputError("lambda components must be non-negative")
        if not self.allow_zero and np.any(weights <= 0):
            raise InputError("lambda components must be strictly positive")
        if abs(weights.sum() - 1.0) > SIMPLEX_TOLERANCE:
            raise InputError(f"lambda must sum to 1, got {weights.sum()!r}")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def parse(cls, text: str, allow_zero: bool = False) -> "Preference":
        """Parse a comma separated list such as ``0.5,0.5``"""
        try:
            weights = [float(item) for item in text.split(",") if item.strip()]
        except ValueError as error:
            raise InputError(f"lambda must be a comma separated list of numbers, got {text!r}") from error
        return cls(np.array(weights), allow_zero=allow_zero)

    @property
    def size(self) -> int:
        return len(self.weights)

    def to_list(self) -> list[float]:
        return _floats(self.weights)


@dataclass(eq=False)
class PenaltyState:
    rho: float
    """Level of the weighted-Chebyshev epigraph variable"""
    z: np.ndarray
    """Decision point"""
    delta: np.ndarray
    """Slack of each scalarized objective constraint"""

    def to_vector(self) -> np.ndarray:
        return np.concatenate([[self.rho], self.z, self.delta])

    @classmethod
    def from_vector(cls, vector: np.ndarray, dimension: int) -> "PenaltyState":
        return cls(rho=float(vector[0]), z=np.array(vector[1 : 1 + dimension]), delta=np.array(vector[1 + dimension :]))

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.rho) and np.all(np.isfinite(self.z)) and np.all(np.isfinite(self.delta)))

    def to_dict(self) -> dict:
        return {"rho": float(self.rho), "z": _floats(self.z), "delta": _floats(self.delta)}

    @classmethod
    def from_dict(cls, data: dict) -> "PenaltyState":
        return cls(
            rho=float(data["rho"]), z=np.array(data["z"], dtype=float), delta=np.array(data["delta"], dtype=float)
        )


@dataclass
class PenaltyParams:
    u: float
    """Penalty weight of the equality constraints"""
    v: float
    """Penalty weight of the slack-equalized scalarization constraints"""
    eta: float
    """Step size"""
    T: int
    """Number of iterations"""
    batch_B: int = 1
    """Mini-batch size for objective samples (stochastic runs)"""
    batch_T: int = 1
    """Mini-batch size for constraint samples (stochastic runs)"""
    seed: Optional[int] = None
    """Seed of the sample stream (stochastic runs)"""

    def __post_init__(self):
        for name in ("u", "v", "eta"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise InputError(f"{name} must be a positive number, got {value!r}")
        for name in ("T", "batch_B", "batch_T"):
            if int(getattr(self, name)) < 1:
                raise InputError(f"{name} must be a positive integer, got {getattr(self, name)!r}")

    def to_dict(self) -> dict:
        return {
            "u": float(self.u),
            "v": float(self.v),
            "eta": float(self.eta),
            "T": int(self.T),
            "batch_B": int(self.batch_B),
            "batch_T": int(self.batch_T),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PenaltyParams":
        return cls(**data)


@dataclass(eq=False)
class DualVariables:
    omega: np.ndarray
    """Multipliers of the scalarized objective constraints"""
    nu: np.ndarray
    """Multipliers of the equality constraints"""


@dataclass(eq=False)
class KKTResidual:
    block_rho: float
    """Sum of objective multipliers minus one"""
    block_z: np.ndarray
    """Stationarity in the decision variables"""
    block_primal: np.ndarray
    """Equality constraint values"""
    block_slack: np.ndarray
    """Complementarity, min(omega_s, rho - lambda_s f_s)"""
    sq_norm: float
    """Squared Euclidean norm of all blocks"""

    @classmethod
    def from_blocks(
        cls, block_rho: float, block_z: np.ndarray, block_primal: np.ndarray, block_slack: np.ndarray
    ) -> "KKTResidual":
        block_rho = np.float64(block_rho)
        sq_norm = block_rho * block_rho + block_z @ block_z + block_primal @ block_primal + block_slack @ block_slack
        return cls(float(block_rho), block_z, block_primal, block_slack, float(sq_norm))

    @property
    def z_norm(self) -> float:
        return float(np.linalg.norm(self.block_z))

    @property
    def primal_norm(self) -> float:
        return float(np.linalg.norm(self.block_primal))

    @property
    def slack_norm(self) -> float:
        return float(np.linalg.norm(self.block_slack))


@dataclass(eq=False)
class FrontEntry:
    z: np.ndarray
    """Decision point"""
    F: np.ndarray
    """Objective vector at z"""
    weights: Optional[np.ndarray] = None
    """Preference that produced the point, None for oracle points"""
    run_id: str = ""
    """Identifier of the producing run"""


@dataclass(eq=False)
class ParetoFront:
    entries: list[FrontEntry] = field(default_factory=list)
    """Mutually non-dominated entries"""

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[FrontEntry]:
        return iter(self.entries)

    def objectives(self) -> np.ndarray:
        if not self.entries:
            return np.zeros((0, 0))
        return np.array([entry.F for entry in self.entries], dtype=float)

    def points(self) -> np.ndarray:
        if not self.entries:
            return np.zeros((0, 0))
        return np.array([entry.z for entry in self.entries], dtype=float)


@dataclass
class SolverConfig:
    T: int
    """Number of iterations"""
    z0: Optional[np.ndarray] = None
    """Initial decision point, fixture default when omitted"""
    params: Optional[PenaltyParams] = None
    """Penalty schedule for the weighted-Chebyshev solvers"""
    lipschitz: Optional[float] = None
    """Gradient Lipschitz constant for linear scalarization, estimated when omitted"""
    record_every: int = 1
    """Record every n-th iteration in the trace"""
    stop_tol: Optional[float] = None
    """Stop once the squared KKT residual falls below this value"""

    def __post_init__(self):
        if int(self.T) < 1:
            raise InputError(f"T must be a positive integer, got {self.T!r}")
        if int(self.record_every) < 1:
            raise InputError(f"record_every must be a positive integer, got {self.record_every!r}")
        if self.params is not None and self.params.T != self.T:
            raise InputError(f"params.T ({self.params.T}) does not match T ({self.T})")
        if self.lipschitz is not None and not self.lipschitz > 0:
            raise InputError(f"lipschitz must be positive, got {self.lipschitz!r}")

    def to_dict(self) -> dict:
        return {
            "T": int(self.T),
            "z0": None if self.z0 is None else _floats(self.z0),
            "params": None if self.params is None else self.params.to_dict(),
            "lipschitz": self.lipschitz,
            "record_every": int(self.record_every),
            "stop_tol": self.stop_tol,
        }


TRACE_COLUMNS = (
    "iter",
    "P",
    "kkt_sq",
    "kkt_rho",
    "kkt_z_norm",
    "kkt_primal_norm",
    "kkt_slack_norm",
    "rho",
    "h_norm",
    "delta_violation",
    "delta_max",
)


@dataclass
class TraceRecord:
    iteration: int
    objective: float
    """Penalty value, or the scalarized objective for linear scalarization"""
    kkt_sq: float
    kkt_rho: float
    kkt_z_norm: float
    kkt_primal_norm: float
    kkt_slack_norm: float
    rho: float
    h_norm: float
    delta_violation: float = 0.0
    """Largest negative part of delta before the projection of this step"""
    delta_max: float = 0.0
    """Largest slack component"""

    def as_row(self) -> tuple:
        return (
            self.iteration,
            self.objective,
            self.kkt_sq,
            self.kkt_rho,
            self.kkt_z_norm,
            self.kkt_primal_norm,
            self.kkt_slack_norm,
            self.rho,
            self.h_norm,
            self.delta_violation,
            self.delta_max,
        )


@dataclass
class Trace:
    records: list[TraceRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        index = TRACE_COLUMNS.index(name)
        return np.array([record.as_row()[index] for record in self.records], dtype=float)

    @property
    def iterations(self) -> list[int]:
        return [record.iteration for record in self.records]


@dataclass(eq=False)
class SolveResult:
    solver: str
    """Solver name: wc, wc-stoc or ls"""
    weights: np.ndarray
    """Preference of the solve"""
    final_state: PenaltyState
    final_F: np.ndarray
    final_constraint_norm: float
    avg_kkt_sq: float
    """Mean squared KKT residual over the iterations run"""
    min_kkt_sq: float
    iterations: int
    """Iterations actually run"""
    trace: Trace = field(default_factory=Trace)
    config: dict = field(default_factory=dict)
    """Echo of the configuration that produced the result"""
    seed: Optional[int] = None
    truncated: bool = False
    """Early stopping cut the run short, so the average covers fewer than T iterations"""
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "solver": self.solver,
            "lambda": _floats(self.weights),
            "final_state": self.final_state.to_dict(),
            "final_F": _floats(self.final_F),
            "final_constraint_norm": float(self.final_constraint_norm),
            "avg_kkt_sq": float(self.avg_kkt_sq),
            "min_kkt_sq": float(self.min_kkt_sq),
            "iterations": int(self.iterations),
            "trace_records": len(self.trace),
            "config": self.config,
            "seed": self.seed,
            "truncated": self.truncated,
            "warnings": list(self.warnings),
        }


@dataclass
class SweepSpec:
    config: SolverConfig
    """Configuration template applied to every preference"""
    preferences: Optional[list[Preference]] = None
    """Explicit preferences; the lattice below is used when omitted"""
    resolution: int = 10
    floor: float = 0.01
    workers: int = 1
    admission_tol: float = 1e-2
    """Largest constraint norm for a point to enter the front"""
    seed: int = 0
    """Master seed of the stochastic sample streams"""

    def __post_init__(self):
        if self.workers < 1:
            raise InputError(f"workers must be a positive integer, got {self.workers!r}")
        if self.admission_tol < 0:
            raise InputError(f"admission tolerance must be non-negative, got {self.admission_tol!r}")


@dataclass(eq=False)
class SweepOutcome:
    index: int
    weights: np.ndarray
    status: str
    """ok, infeasible or failed"""
    result: Optional[SolveResult] = None
    error: str = ""

    @property
    def run_id(self) -> str:
        return f"lambda-{self.index:03d}"


@dataclass(eq=False)
class SweepResult:
    outcomes: list[SweepOutcome]
    front: ParetoFront

    @property
    def per_lambda(self) -> list[Optional[SolveResult]]:
        return [outcome.result for outcome in self.outcomes]


@dataclass(eq=False)
class GradcheckReport:
    max_abs_err: float
    max_rel_err: float
    """Largest absolute error relative to the finite-difference gradient scale"""
    per_coordinate: np.ndarray
    """Absolute error of each gradient coordinate"""

    def passed(self, rel_tol: float) -> bool:
        return self.max_rel_err <= rel_tol
