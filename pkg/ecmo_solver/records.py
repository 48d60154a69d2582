"""Reading and writing problem files, run records, traces, fronts and metrics.

Every file carries a schema version and is written through a temporary file that replaces the
target once complete.
"""

import csv
import dataclasses
import hashlib
import io
import json
import os
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from typing import Any, Optional, Union

import numpy as np
import scipy
import yaml

from ecmo_solver.benchmarks import Fixture, get_fixture
from ecmo_solver.config import APP_NAME, SCHEMA_SUPPORTED_VERSIONS, SCHEMA_VERSION
from ecmo_solver.errors import CapabilityError, InputError
from ecmo_solver.functions import function_from_dict
from ecmo_solver.model import TRACE_COLUMNS, FrontEntry, ParetoFront, Trace, TraceRecord
from ecmo_solver.problem import ECMOProblem, MTBLProblem, mtbl_to_ecmo

FIXTURE_PREFIX = "fixture:"
CSV_VERSION_PREFIX = "# schema_version: "


def write_text(path: str, content: str) -> None:
    """Write ``content`` to a temporary file and move it over ``path``"""
    temp_file_path = path + ".tmp"
    try:
        with open(temp_file_path, "w", newline="") as output_file:
            output_file.write(content)
    except Exception as error:
        raise InputError(f"The file '{path}' was not written. Error: {error}") from error
    else:
        os.replace(temp_file_path, os.path.realpath(path))


def check_schema_version(data: dict, source: str) -> None:
    file_version = data.get("schema_version", 0)
    if file_version not in SCHEMA_SUPPORTED_VERSIONS:
        raise InputError(
            f"Incompatible schema version in {source}: {file_version} does not match required version {SCHEMA_VERSION}."
        )


def write_json(path: str, data: dict) -> None:
    write_text(path, json.dumps({"schema_version": SCHEMA_VERSION, **data}, indent=2) + "\n")


def read_json(path: str) -> dict:
    try:
        with open(path) as input_file:
            data = json.load(input_file)
    except OSError as error:
        raise InputError(f"cannot read {path}: {error}") from error
    except json.JSONDecodeError as error:
        raise InputError(f"{path} is not valid JSON: {error}") from error
    if not isinstance(data, dict):
        raise InputError(f"{path} must hold a JSON object")
    check_schema_version(data, path)
    return data


def _field(data: dict, name: str, source: str = "problem file") -> Any:
    if name not in data:
        raise InputError(f"{source}: missing field '{name}'")
    return data[name]


def problem_from_dict(data: Any) -> ECMOProblem:
    """Build a problem from its file description; an ``mtbl`` section is reduced to its stationarity constraints"""
    if not isinstance(data, dict):
        raise InputError("problem file: top level must be a mapping")
    check_schema_version({"schema_version": SCHEMA_VERSION, **data}, "problem file")
    raw_dimension = _field(data, "k")
    try:
        dimension = int(raw_dimension)
    except (TypeError, ValueError) as error:
        raise InputError("problem file: field 'k' must be an integer") from error
    if dimension < 1:
        raise InputError(f"problem file: field 'k' must be positive, got {dimension}")
    raw_objectives = _field(data, "objectives")
    if not isinstance(raw_objectives, list) or not raw_objectives:
        raise InputError("problem file: field 'objectives' must be a non-empty list")
    objectives = tuple(function_from_dict(item, dimension) for item in raw_objectives)
    constraints = tuple(function_from_dict(item, dimension) for item in data.get("constraints") or [])
    name = str(data.get("name", ""))
    bounding_box = data.get("bounding_box")

    if "mtbl" not in data:
        return ECMOProblem(objectives, constraints, dimension=dimension, name=name, bounding_box=bounding_box)
    section = data["mtbl"]
    if not isinstance(section, dict):
        raise InputError("problem file: field 'mtbl' must be a mapping")
    p, q = int(_field(section, "p", "mtbl section")), int(_field(section, "q", "mtbl section"))
    if p + q != dimension:
        raise InputError(f"problem file: mtbl p + q = {p + q} does not match k = {dimension}")
    lower = function_from_dict(_field(section, "lower_objective", "mtbl section"), dimension)
    reduced = mtbl_to_ecmo(MTBLProblem(objectives, lower, p, q, name=name, bounding_box=bounding_box))
    return dataclasses.replace(reduced, constraints=reduced.constraints + constraints)


def problem_to_dict(problem: Union[ECMOProblem, MTBLProblem]) -> dict:
    """File description of a problem made of monomial sums; native functions raise CapabilityError"""
    if isinstance(problem, ECMOProblem):
        data = problem.to_dict()
    else:
        data = {
            "name": problem.name,
            "k": problem.p + problem.q,
            "objectives": [f.to_dict() for f in problem.upper_objectives],
            "constraints": [],
            "mtbl": {"p": problem.p, "q": problem.q, "lower_objective": problem.lower_objective.to_dict()},
        }
        if problem.bounding_box is not None:
            data["bounding_box"] = np.asarray(problem.bounding_box, dtype=float).tolist()
    return {"schema_version": SCHEMA_VERSION, **data}


def fixture_to_dict(fixture: Fixture) -> dict:
    """Problem file description of a polynomial fixture, metadata only for native ones"""
    try:
        return problem_to_dict(fixture.problem)
    except CapabilityError:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": fixture.name,
            "k": fixture.ecmo.dimension,
            "native": True,
            "notes": fixture.notes,
        }


def read_problem_file(path: str) -> ECMOProblem:
    """Load a JSON or YAML problem file"""
    try:
        with open(path) as input_file:
            if path.endswith((".yaml", ".yml")):
                data = yaml.safe_load(input_file)
            else:
                data = json.load(input_file)
    except FileNotFoundError as error:
        raise InputError(f"problem file not found: {path}") from error
    except (json.JSONDecodeError, yaml.YAMLError) as error:
        raise InputError(f"problem file {path} is malformed: {error}") from error
    return problem_from_dict(data)


def write_problem_file(path: str, problem: Union[ECMOProblem, MTBLProblem]) -> None:
    data = problem_to_dict(problem)
    if path.endswith((".yaml", ".yml")):
        write_text(path, yaml.safe_dump(data, sort_keys=False))
    else:
        write_json(path, data)


def load_problem(ref: str) -> tuple[ECMOProblem, Optional[Fixture]]:
    """Resolve ``fixture:NAME`` through the benchmark registry, anything else as a problem file"""
    if ref.startswith(FIXTURE_PREFIX):
        fixture = get_fixture(ref[len(FIXTURE_PREFIX) :])
        return fixture.ecmo, fixture
    return read_problem_file(ref), None


def problem_hash(problem: ECMOProblem) -> str:
    """Content hash of a problem; native functions contribute their names only"""
    try:
        data = problem.to_dict()
    except CapabilityError:
        data = {
            "name": problem.name,
            "k": problem.dimension,
            "functions": [repr(f) for f in problem.objectives + problem.constraints],
        }
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()


def environment_note() -> dict:
    try:
        package_version = version(APP_NAME)
    except PackageNotFoundError:
        package_version = "unknown"
    return {
        APP_NAME: package_version,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunRecord:
    command: list[str]
    """Argument vector that produced the run"""
    config: dict
    """Complete configuration echo"""
    problem_ref: str
    """Fixture reference or problem file path"""
    problem_hash: str
    results: dict
    """SolveResult or sweep summary"""
    timestamp: str = field(default_factory=_timestamp)
    environment: dict = field(default_factory=environment_note)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "timestamp": self.timestamp,
            "command": list(self.command),
            "config": self.config,
            "problem_ref": self.problem_ref,
            "problem_hash": self.problem_hash,
            "results": self.results,
            "environment": self.environment,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        check_schema_version(data, "run record")
        try:
            return cls(
                command=list(data["command"]),
                config=data["config"],
                problem_ref=data["problem_ref"],
                problem_hash=data["problem_hash"],
                results=data["results"],
                timestamp=data["timestamp"],
                environment=data.get("environment", {}),
                schema_version=data["schema_version"],
            )
        except KeyError as error:
            raise InputError(f"run record: missing field {error}") from error

    def write(self, path: str) -> None:
        write_text(path, json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def read(cls, path: str) -> "RunRecord":
        return cls.from_dict(read_json(path))


def _csv_text(header: list[str], rows: list[list[Any]]) -> str:
    buffer = io.StringIO()
    buffer.write(f"{CSV_VERSION_PREFIX}{SCHEMA_VERSION}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="") as input_file:
            first = input_file.readline().strip()
            if not first.startswith(CSV_VERSION_PREFIX):
                raise InputError(f"{path}: missing schema version line")
            try:
                file_version = int(first[len(CSV_VERSION_PREFIX) :])
            except ValueError as error:
                raise InputError(f"{path}: malformed schema version line {first!r}") from error
            check_schema_version({"schema_version": file_version}, path)
            rows = list(csv.reader(input_file))
    except OSError as error:
        raise InputError(f"cannot read {path}: {error}") from error
    if not rows:
        raise InputError(f"{path}: missing header row")
    return rows[0], rows[1:]


def _number(value: Any) -> str:
    return repr(float(value))


def write_trace(path: str, trace: Trace) -> None:
    rows = [[record.iteration] + [_number(value) for value in record.as_row()[1:]] for record in trace.records]
    write_text(path, _csv_text(list(TRACE_COLUMNS), rows))


def read_trace(path: str) -> Trace:
    header, rows = _read_csv(path)
    if tuple(header) != TRACE_COLUMNS:
        raise InputError(f"{path}: unexpected trace columns {header}")
    return Trace([TraceRecord(int(row[0]), *(float(value) for value in row[1:])) for row in rows])


def front_columns(num_objectives: int, dimension: int, display_inverse: bool = False) -> list[str]:
    columns = ["run_id"]
    columns += [f"lambda_{s + 1}" for s in range(num_objectives)]
    columns += [f"z_{i + 1}" for i in range(dimension)]
    columns += [f"F_{s + 1}" for s in range(num_objectives)]
    if display_inverse:
        columns += [f"inv_F_{s + 1}" for s in range(num_objectives)]
    return columns


def write_front(
    path: str, front: ParetoFront, num_objectives: int, dimension: int, display_inverse: bool = False
) -> None:
    """Front CSV; preference cells stay empty for oracle points, ``inv_F`` columns are display only"""
    rows = []
    with np.errstate(divide="ignore"):
        for entry in front:
            weights = [""] * num_objectives if entry.weights is None else [_number(w) for w in entry.weights]
            row = [entry.run_id] + weights + [_number(x) for x in entry.z] + [_number(f) for f in entry.F]
            if display_inverse:
                row += [_number(value) for value in 1.0 / np.asarray(entry.F, dtype=float)]
            rows.append(row)
    write_text(path, _csv_text(front_columns(num_objectives, dimension, display_inverse), rows))


def read_front(path: str) -> ParetoFront:
    header, rows = _read_csv(path)
    num_objectives = sum(1 for name in header if name.startswith("F_"))
    dimension = sum(1 for name in header if name.startswith("z_"))
    if header[: 1 + 2 * num_objectives + dimension] != front_columns(num_objectives, dimension):
        raise InputError(f"{path}: unexpected front columns {header}")
    entries = []
    for row in rows:
        weights = row[1 : 1 + num_objectives]
        z = row[1 + num_objectives : 1 + num_objectives + dimension]
        F = row[1 + num_objectives + dimension : 1 + 2 * num_objectives + dimension]
        try:
            entries.append(
                FrontEntry(
                    z=np.array([float(x) for x in z]),
                    F=np.array([float(f) for f in F]),
                    weights=None if all(w == "" for w in weights) else np.array([float(w) for w in weights]),
                    run_id=row[0],
                )
            )
        except ValueError as error:
            raise InputError(f"{path}: malformed front row {row}") from error
    return ParetoFront(entries)
