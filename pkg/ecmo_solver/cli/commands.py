import logging
import os
import sys
import typing as tp

import numpy as np

from ecmo_solver.benchmarks import Fixture, get_fixture, reference_front
from ecmo_solver.config import (
    AGREEMENT_FILE,
    DEFAULT_C_BATCH,
    DEFAULT_C_ETA,
    DEFAULT_C_UV,
    DEFAULT_PROBE_COUNT,
    FD_REL_TOL,
    FRONT_FILE,
    HV_MAX_OBJECTIVES,
    MANIFEST_FILE,
    METRICS_FILE,
    ORACLE_FRONT_FILE,
    RUN_RECORD_FILE,
    TRACE_FILE,
)
from ecmo_solver.errors import DivergedError, InputError
from ecmo_solver.explorer import sweep_preferences
from ecmo_solver.model import FrontEntry, ParetoFront, Preference, SolverConfig, SolveResult, SweepSpec
from ecmo_solver.pareto import default_ref_point, epsilon_indicator, hausdorff_distance, hypervolume, nearest_distances
from ecmo_solver.penalty import default_schedule
from ecmo_solver.problem import (
    ECMOProblem,
    StochasticProblem,
    default_probe_points,
    gradcheck,
    shift_positive,
    unshift_values,
)
from ecmo_solver.records import (
    RunRecord,
    load_problem,
    problem_hash,
    read_front,
    write_front,
    write_json,
    write_trace,
)
from ecmo_solver.solvers import SolverKind, solve_ls, solve_wc_penalty, solve_wc_penalty_stochastic

logger = logging.getLogger(__name__)


class Command(tp.Protocol):
    def execute(self) -> int: ...  # noqa: E704


def parse_floats(text: str, flag: str) -> np.ndarray:
    try:
        return np.array([float(item) for item in text.split(",") if item.strip()])
    except ValueError as error:
        raise InputError(f"{flag} must be a comma separated list of numbers, got {text!r}") from error


def _float_list(values: tp.Any) -> list[float]:
    return [float(x) for x in np.asarray(values, dtype=float).ravel()]


class SolverOptions:
    """Options shared by solve and sweep"""

    def __init__(self, cfg: dict):
        self.argv = list(cfg.get("argv", []))
        self.out_dir = cfg["out"]
        self.problem_ref = cfg["problem"]
        self.solver = SolverKind(cfg["solver"])
        self.T = cfg["T"]
        self.eta_c = cfg["eta_c"]
        self.uv_c = cfg["uv_c"]
        self.batch_c = cfg["batch_c"]
        self.seed = cfg["seed"]
        self.sigma_f = cfg["sigma_f"]
        self.sigma_h = cfg["sigma_h"]
        self.record_every = cfg["record_every"]
        self.stop_tol = cfg["stop_tol"]
        self.z0 = cfg["z0"]
        self.lipschitz = cfg["lipschitz"]
        self.shift_margin = cfg["shift_margin"]
        self.display_inverse = cfg["display"] == "inverse"

    def load(self) -> tuple[ECMOProblem, tp.Optional[Fixture]]:
        if self.problem_ref is None:
            raise InputError("--problem is required")
        if self.T is None:
            raise InputError("--T is required")
        return load_problem(self.problem_ref)

    def solver_config(self, problem: ECMOProblem, fixture: tp.Optional[Fixture]) -> SolverConfig:
        if self.z0 is not None:
            z0 = parse_floats(self.z0, "--z0")
        elif fixture is not None:
            z0 = fixture.z0
        else:
            raise InputError("--z0 is required for problem files")
        params = None
        if self.solver is not SolverKind.LS:
            params = default_schedule(
                self.T,
                self.eta_c if self.eta_c is not None else fixture.c_eta if fixture else DEFAULT_C_ETA,
                self.uv_c if self.uv_c is not None else fixture.c_uv if fixture else DEFAULT_C_UV,
                self.batch_c if self.batch_c is not None else DEFAULT_C_BATCH,
                self.seed if self.solver is SolverKind.WC_STOC else None,
            )
        return SolverConfig(
            T=self.T,
            z0=z0,
            params=params,
            lipschitz=self.lipschitz,
            record_every=self.record_every,
            stop_tol=self.stop_tol,
        )

    def prepare(self, problem: ECMOProblem, config: SolverConfig) -> ECMOProblem:
        """Shift objectives positive over the initial point and a box sample for the penalty solvers"""
        if self.solver is SolverKind.LS:
            return problem
        probes = default_probe_points(problem, [config.z0], count=DEFAULT_PROBE_COUNT)
        return shift_positive(problem, probes, self.shift_margin)

    def target(self, problem: ECMOProblem) -> tp.Union[ECMOProblem, StochasticProblem]:
        if self.solver is SolverKind.WC_STOC:
            return StochasticProblem(problem, self.sigma_f, self.sigma_h)
        return problem

    def config_echo(self, config: SolverConfig) -> dict:
        return {
            "solver": self.solver.value,
            **config.to_dict(),
            "sigma_f": self.sigma_f,
            "sigma_h": self.sigma_h,
            "shift_margin": self.shift_margin,
        }


def result_summary(result: SolveResult, problem: ECMOProblem) -> dict:
    """Result dictionary with objective values reported on the unshifted problem"""
    summary = result.to_dict()
    summary["final_F"] = _float_list(unshift_values(problem, result.final_F))
    summary["shifts"] = _float_list(problem.shifts)
    return summary


class SolveCommand(SolverOptions):
    def __init__(self, cfg: dict):
        super().__init__(cfg)
        self.weights = cfg["lambda"]

    def execute(self) -> int:
        problem, fixture = self.load()
        if self.weights is None:
            raise InputError("--lambda is required")
        preference = Preference.parse(self.weights, allow_zero=self.solver is SolverKind.LS)
        config = self.solver_config(problem, fixture)
        work = self.prepare(problem, config)
        target = self.target(work)
        if self.solver is SolverKind.WC:
            result = solve_wc_penalty(work, preference, config)
        elif self.solver is SolverKind.LS:
            result = solve_ls(work, preference, config)
        else:
            result = solve_wc_penalty_stochastic(target, preference, config)  # type: ignore[arg-type]

        os.makedirs(self.out_dir, exist_ok=True)
        summary = result_summary(result, work)
        write_trace(os.path.join(self.out_dir, TRACE_FILE), result.trace)
        RunRecord(
            command=self.argv,
            config={**self.config_echo(config), "lambda": preference.to_list()},
            problem_ref=self.problem_ref,
            problem_hash=problem_hash(problem),
            results=summary,
        ).write(os.path.join(self.out_dir, RUN_RECORD_FILE))

        print(f"final F: {summary['final_F']}")
        if self.display_inverse:
            with np.errstate(divide="ignore"):
                print(f"final 1/F: {_float_list(1.0 / np.asarray(summary['final_F']))}")
        print(f"|h|: {result.final_constraint_norm!r}")
        print(f"avg_kkt_sq: {result.avg_kkt_sq!r}")
        return 0


def front_metrics(front: ParetoFront, fixture: tp.Optional[Fixture], ref_point: tp.Optional[np.ndarray]) -> dict:
    metrics: dict = {"points": len(front), "hv": None, "ref_point": None, "epsilon": None, "reference_name": None}
    if not len(front):
        return metrics
    objectives = front.objectives()
    ref = default_ref_point(objectives) if ref_point is None else ref_point
    metrics["ref_point"] = _float_list(ref)
    if objectives.shape[1] <= HV_MAX_OBJECTIVES:
        metrics["hv"] = hypervolume(objectives, ref)
    else:
        logger.warning(f"hypervolume skipped for {objectives.shape[1]} objectives")
    if fixture is not None and fixture.has_reference_front:
        reference = reference_front(fixture)
        metrics["epsilon"] = epsilon_indicator(objectives, reference)
        metrics["max_distance"] = float(nearest_distances(objectives, reference).max())
        metrics["reference_name"] = fixture.name
    return metrics


class SweepCommand(SolverOptions):
    def __init__(self, cfg: dict):
        super().__init__(cfg)
        self.resolution = cfg["grid_resolution"]
        self.floor = cfg["floor"]
        self.workers = cfg["workers"]
        self.admission_tol = cfg["admission_tol"]
        self.ref_point = cfg["ref_point"]

    def execute(self) -> int:
        problem, fixture = self.load()
        config = self.solver_config(problem, fixture)
        ref_point = None if self.ref_point is None else parse_floats(self.ref_point, "--ref-point")
        work = self.prepare(problem, config)
        spec = SweepSpec(
            config=config,
            resolution=self.resolution,
            floor=self.floor,
            workers=self.workers,
            admission_tol=self.admission_tol,
            seed=self.seed,
        )
        sweep = sweep_preferences(self.target(work), spec, self.solver)

        runs_dir = os.path.join(self.out_dir, "runs")
        os.makedirs(runs_dir, exist_ok=True)
        digest = problem_hash(problem)
        echo = self.config_echo(config)
        runs = []
        for outcome in sweep.outcomes:
            run = {
                "run_id": outcome.run_id,
                "lambda": _float_list(outcome.weights),
                "status": outcome.status,
                "error": outcome.error,
            }
            if outcome.result is not None:
                record_file = os.path.join("runs", f"{outcome.run_id}.json")
                trace_file = os.path.join("runs", f"{outcome.run_id}.trace.csv")
                write_trace(os.path.join(self.out_dir, trace_file), outcome.result.trace)
                RunRecord(
                    command=self.argv,
                    config={**echo, "lambda": run["lambda"]},
                    problem_ref=self.problem_ref,
                    problem_hash=digest,
                    results=result_summary(outcome.result, work),
                ).write(os.path.join(self.out_dir, record_file))
                run.update(record=record_file, trace=trace_file)
            runs.append(run)

        front = ParetoFront(
            [
                FrontEntry(z=entry.z, F=unshift_values(work, entry.F), weights=entry.weights, run_id=entry.run_id)
                for entry in sweep.front
            ]
        )
        write_front(
            os.path.join(self.out_dir, FRONT_FILE),
            front,
            problem.num_objectives,
            problem.dimension,
            self.display_inverse,
        )
        metrics = front_metrics(front, fixture, ref_point)
        write_json(os.path.join(self.out_dir, METRICS_FILE), metrics)
        RunRecord(
            command=self.argv,
            config={
                **echo,
                "grid_resolution": self.resolution,
                "floor": self.floor,
                "workers": self.workers,
                "admission_tol": self.admission_tol,
                "seed": self.seed,
            },
            problem_ref=self.problem_ref,
            problem_hash=digest,
            results={"runs": runs, "front": FRONT_FILE, "metrics": METRICS_FILE, "front_size": len(front)},
        ).write(os.path.join(self.out_dir, MANIFEST_FILE))

        failed = sum(1 for run in runs if run["status"] != "ok")
        print(f"solves: {len(runs)} ({failed} not admitted)")
        print(f"front points: {len(front)}")
        print(f"hv: {metrics['hv']!r}")
        if not len(front):
            raise DivergedError("no solve satisfied the admission tolerance; the front is empty")
        return 0


class BenchCommand:
    def __init__(self, cfg: dict):
        self.out_dir = cfg["out"]
        self.fixture_name = cfg["fixture"]
        self.grid_density = cfg["grid_density"]
        self.front_path = cfg["front"]

    def execute(self) -> int:
        if self.fixture_name is None:
            raise InputError("--fixture is required")
        fixture = get_fixture(self.fixture_name)
        oracle = reference_front(fixture, self.grid_density)
        os.makedirs(self.out_dir, exist_ok=True)
        write_front(
            os.path.join(self.out_dir, ORACLE_FRONT_FILE), oracle, fixture.ecmo.num_objectives, fixture.ecmo.dimension
        )
        print(f"oracle front: {len(oracle)} points")
        if self.front_path is None:
            return 0

        provided = read_front(self.front_path)
        if not len(provided):
            raise InputError(f"{self.front_path} holds no front points")
        report = {
            "reference_name": fixture.name,
            "grid_density": self.grid_density or fixture.grid_density,
            "front": self.front_path,
            "epsilon": epsilon_indicator(provided, oracle),
            "max_distance": float(nearest_distances(provided, oracle).max()),
            "hausdorff": hausdorff_distance(provided, oracle),
        }
        write_json(os.path.join(self.out_dir, AGREEMENT_FILE), report)
        print(f"epsilon: {report['epsilon']!r}")
        print(f"max distance to oracle: {report['max_distance']!r}")
        return 0


class GradcheckCommand:
    def __init__(self, cfg: dict):
        self.fixture_name = cfg["fixture"]
        self.problem_ref = cfg["problem"]
        self.step = cfg["step"]
        self.points = cfg["points"]
        self.seed = cfg["seed"]

    def sample_points(self, problem: ECMOProblem, fixture: tp.Optional[Fixture]) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        if problem.bounding_box is not None:
            low, high = problem.bounding_box[:, 0], problem.bounding_box[:, 1]
            return rng.uniform(low, high, size=(self.points, problem.dimension))
        center = fixture.z0 if fixture is not None else np.zeros(problem.dimension)
        return center + rng.standard_normal((self.points, problem.dimension))

    def execute(self) -> int:
        if self.fixture_name is not None:
            fixture: tp.Optional[Fixture] = get_fixture(self.fixture_name)
            problem = fixture.ecmo  # type: ignore[union-attr]
        elif self.problem_ref is not None:
            problem, fixture = load_problem(self.problem_ref)
        else:
            raise InputError("--fixture or --problem is required")
        if self.points < 1:
            raise InputError(f"--points must be positive, got {self.points}")

        points = self.sample_points(problem, fixture)
        labelled = [(f"f{s + 1}", f) for s, f in enumerate(problem.objectives)]
        labelled += [(f"h{i + 1}", h) for i, h in enumerate(problem.constraints)]
        passed = True
        for label, function in labelled:
            reports = [gradcheck(function, z, self.step) for z in points]
            max_abs = max(report.max_abs_err for report in reports)
            max_rel = max(report.max_rel_err for report in reports)
            ok = max_rel <= FD_REL_TOL
            passed = passed and ok
            print(f"{label}: max_abs_err={max_abs:.3e} max_rel_err={max_rel:.3e} {'ok' if ok else 'FAILED'}")
        if not passed:
            print(f"error: gradients disagree with finite differences beyond {FD_REL_TOL}", file=sys.stderr)
            return 1
        return 0


def create_command(cfg: dict) -> tp.Optional[Command]:
    if cfg["command"] == "solve":
        return SolveCommand(cfg)
    elif cfg["command"] == "sweep":
        return SweepCommand(cfg)
    elif cfg["command"] == "bench":
        return BenchCommand(cfg)
    elif cfg["command"] == "gradcheck":
        return GradcheckCommand(cfg)
    return None

