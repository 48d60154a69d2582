import numpy as np
import pytest

from ecmo_solver.benchmarks import get_fixture
from ecmo_solver.cli import commands
from ecmo_solver.cli.main import build_parser
from ecmo_solver.errors import InputError
from ecmo_solver.model import FrontEntry, ParetoFront
from ecmo_solver.solvers import SolverKind


def _cfg(command: str, *args: str) -> dict:
    (options, _) = build_parser(command).parse_args(list(args))
    return {"command": command, "argv": ["ecmo", command, *args], **vars(options)}


def test_solve():
    cfg = _cfg("solve", "--problem", "fixture:quad_affine", "--T", "100", "--lambda", "0.5,0.5")
    cmd = commands.create_command(cfg)

    assert isinstance(cmd, commands.SolveCommand)
    assert cmd.problem_ref == "fixture:quad_affine"
    assert cmd.solver is SolverKind.WC
    assert cmd.T == 100
    assert cmd.weights == "0.5,0.5"


def test_sweep():
    cfg = _cfg("sweep", "--problem", "fixture:gebken_circle", "--T", "10", "--solver", "wc-stoc", "--workers", "3")
    cmd = commands.create_command(cfg)

    assert isinstance(cmd, commands.SweepCommand)
    assert cmd.solver is SolverKind.WC_STOC
    assert cmd.workers == 3
    assert cmd.resolution == 10


def test_bench():
    cmd = commands.create_command(_cfg("bench", "--fixture", "gebken_circle", "--grid-density", "500"))

    assert isinstance(cmd, commands.BenchCommand)
    assert cmd.fixture_name == "gebken_circle"
    assert cmd.grid_density == 500


def test_gradcheck():
    cmd = commands.create_command(_cfg("gradcheck", "--fixture", "quad_affine", "--points", "3"))

    assert isinstance(cmd, commands.GradcheckCommand)
    assert cmd.points == 3


def test_unknown_command():
    assert commands.create_command({"command": "plot"}) is None


def test_parse_floats():
    assert np.array_equal(commands.parse_floats("1, 2.5,", "--z0"), [1.0, 2.5])
    with pytest.raises(InputError, match="--ref-point"):
        commands.parse_floats("1,x", "--ref-point")


def test_fixture_schedule_is_the_default():
    cfg = _cfg("solve", "--problem", "fixture:gebken_circle", "--T", "10000")
    cmd = commands.SolveCommand(cfg)
    fixture = get_fixture("gebken_circle")
    config = cmd.solver_config(fixture.ecmo, fixture)
    assert config.params.u == pytest.approx(280.0)
    assert config.params.seed is None
    assert np.array_equal(config.z0, fixture.z0)


def test_explicit_schedule_constants():
    cfg = _cfg("solve", "--problem", "fixture:gebken_circle", "--T", "16", "--eta-c", "1", "--uv-c", "1")
    cmd = commands.SolveCommand(cfg)
    fixture = get_fixture("gebken_circle")
    config = cmd.solver_config(fixture.ecmo, fixture)
    assert config.params.eta == pytest.approx(0.5)
    assert config.params.u == pytest.approx(2.0)


def test_problem_files_need_an_initial_point():
    cmd = commands.SolveCommand(_cfg("solve", "--problem", "problem.json", "--T", "10"))
    with pytest.raises(InputError, match="--z0"):
        cmd.solver_config(get_fixture("quad_affine").ecmo, None)


def test_penalty_solvers_shift_objectives():
    fixture = get_fixture("quad_affine")
    cmd = commands.SolveCommand(_cfg("solve", "--problem", "fixture:quad_affine", "--T", "10"))
    work = cmd.prepare(fixture.ecmo, cmd.solver_config(fixture.ecmo, fixture))
    assert np.all((work.shifts > 0) & (work.shifts <= 0.1))
    assert work.objective_values_batch(fixture.z0.reshape(1, -1)).min() >= 0.1
    ls = commands.SolveCommand(_cfg("solve", "--problem", "fixture:quad_affine", "--T", "10", "--solver", "ls"))
    assert ls.prepare(fixture.ecmo, ls.solver_config(fixture.ecmo, fixture)) is fixture.ecmo


def test_front_metrics():
    front = ParetoFront(
        [
            FrontEntry(z=np.array([1.0, 0.0]), F=np.array([2.0, 2.0]), run_id="lambda-000"),
            FrontEntry(z=np.array([0.0, 1.0]), F=np.array([4.0, 8.0]), run_id="lambda-001"),
        ]
    )
    metrics = commands.front_metrics(front, get_fixture("gebken_circle"), np.array([5.0, 9.0]))
    assert metrics["hv"] == pytest.approx(21.0)
    assert metrics["reference_name"] == "gebken_circle"
    assert metrics["epsilon"] >= 0
    assert commands.front_metrics(ParetoFront(), None, None)["hv"] is None
