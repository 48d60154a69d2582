import optparse
import sys
import typing as tp

from ecmo_solver.cli.commands import create_command
from ecmo_solver.config import (
    DEFAULT_ADMISSION_TOL,
    DEFAULT_FLOOR,
    DEFAULT_OUT_DIR,
    DEFAULT_RESOLUTION,
    DEFAULT_SHIFT_MARGIN,
    DEFAULT_WORKERS,
    FD_STEP,
    GRADCHECK_POINTS,
)
from ecmo_solver.errors import CapabilityError, InputError, NumericError
from ecmo_solver.logger import add_log_file, logger, set_verbose

COMMANDS = ("solve", "sweep", "bench", "gradcheck")
SOLVERS = ("wc", "wc-stoc", "ls")

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_DIVERGED = 2


class OptionParser(optparse.OptionParser):
    """Reports usage errors as InputError instead of exiting"""

    def error(self, msg):
        raise InputError(msg)


def _add_common_options(parser: optparse.OptionParser) -> None:
    parser.add_option(
        "--out", type="string", dest="out", default=DEFAULT_OUT_DIR, help="output directory", metavar="DIR"
    )
    parser.add_option("--log-file", type="string", dest="log_file", help="mirror the log into a file", metavar="PATH")
    parser.add_option("-v", "--verbose", action="store_true", dest="verbose", default=False, help="debug logging")


def _add_solver_options(parser: optparse.OptionParser) -> None:
    parser.add_option(
        "--problem",
        type="string",
        dest="problem",
        help="problem file (JSON or YAML) or fixture:NAME",
        metavar="REF",
    )
    parser.add_option(
        "--solver", type="choice", choices=SOLVERS, dest="solver", default="wc", help="wc, wc-stoc or ls"
    )
    parser.add_option("--T", type="int", dest="T", help="number of iterations", metavar="N")
    parser.add_option(
        "--eta-c",
        type="float",
        dest="eta_c",
        help="step-size constant, eta = c * T^(-1/4). defaults to the fixture's recommendation",
        metavar="X",
    )
    parser.add_option(
        "--uv-c",
        type="float",
        dest="uv_c",
        help="penalty constant, u = v = c * T^(1/4). defaults to the fixture's recommendation",
        metavar="X",
    )
    parser.add_option(
        "--batch-c", type="float", dest="batch_c", help="batch constant, B = ceil(c * T^(5/4))", metavar="X"
    )
    parser.add_option("--seed", type="int", dest="seed", default=0, help="seed of the sample streams", metavar="N")
    parser.add_option(
        "--sigma-f", type="float", dest="sigma_f", default=0.0, help="objective sample noise", metavar="X"
    )
    parser.add_option(
        "--sigma-h", type="float", dest="sigma_h", default=0.0, help="constraint sample noise", metavar="X"
    )
    parser.add_option(
        "--record-every", type="int", dest="record_every", default=1, help="trace every n-th iteration", metavar="N"
    )
    parser.add_option(
        "--stop-tol", type="float", dest="stop_tol", help="stop once the squared KKT residual is below", metavar="X"
    )
    parser.add_option(
        "--z0", type="string", dest="z0", help="initial point. defaults to the fixture's", metavar="LIST"
    )
    parser.add_option(
        "--lipschitz", type="float", dest="lipschitz", help="gradient Lipschitz constant (ls)", metavar="X"
    )
    parser.add_option(
        "--shift-margin",
        type="float",
        dest="shift_margin",
        default=DEFAULT_SHIFT_MARGIN,
        help="lower bound the shifted objectives must reach on the probe points (wc, wc-stoc)",
        metavar="X",
    )
    parser.add_option(
        "--display", type="choice", choices=("raw", "inverse"), dest="display", default="raw", help="raw or inverse"
    )


def build_parser(command: str) -> optparse.OptionParser:
    parser = OptionParser(usage=f"%prog {command} [options]", prog="ecmo")
    _add_common_options(parser)
    if command in ("solve", "sweep"):
        _add_solver_options(parser)
    if command == "solve":
        parser.add_option(
            "--lambda", type="string", dest="lambda", help="preference, e.g. 0.5,0.5", metavar="LIST"
        )
    elif command == "sweep":
        parser.add_option(
            "--grid-resolution",
            type="int",
            dest="grid_resolution",
            default=DEFAULT_RESOLUTION,
            help="simplex lattice resolution, 0 for the centroid only",
            metavar="N",
        )
        parser.add_option(
            "--floor", type="float", dest="floor", default=DEFAULT_FLOOR, help="smallest preference weight"
        )
        parser.add_option("--workers", type="int", dest="workers", default=DEFAULT_WORKERS, metavar="N")
        parser.add_option(
            "--admission-tol",
            type="float",
            dest="admission_tol",
            default=DEFAULT_ADMISSION_TOL,
            help="largest constraint norm admitted to the front",
            metavar="X",
        )
        parser.add_option(
            "--ref-point", type="string", dest="ref_point", help="hypervolume reference point", metavar="LIST"
        )
    elif command == "bench":
        parser.add_option("--fixture", type="string", dest="fixture", metavar="NAME")
        parser.add_option("--grid-density", type="int", dest="grid_density", metavar="N")
        parser.add_option(
            "--front", type="string", dest="front", help="front CSV to compare against the oracle", metavar="FILE"
        )
    elif command == "gradcheck":
        parser.add_option("--fixture", type="string", dest="fixture", metavar="NAME")
        parser.add_option("--problem", type="string", dest="problem", metavar="REF")
        parser.add_option("--step", type="float", dest="step", default=FD_STEP, help="finite-difference step")
        parser.add_option("--points", type="int", dest="points", default=GRADCHECK_POINTS, metavar="N")
        parser.add_option("--seed", type="int", dest="seed", default=0, metavar="N")
    return parser


def execute(argv: tp.Optional[list[str]] = None) -> int:
    """Run one command and return its exit code"""
    argv = sys.argv[1:] if argv is None else list(argv)
    file_handler = None
    try:
        if not argv or argv[0] not in COMMANDS:
            raise InputError(f"expected a command: {', '.join(COMMANDS)}")
        (options, args) = build_parser(argv[0]).parse_args(argv[1:])
        if args:
            raise InputError(f"unexpected arguments: {' '.join(args)}")
        set_verbose(options.verbose)
        if options.log_file:
            file_handler = add_log_file(options.log_file)
        command = create_command({"command": argv[0], "argv": ["ecmo"] + argv, **vars(options)})
        if command is None:
            raise InputError(f"unknown command {argv[0]}")
        return command.execute()
    except (InputError, CapabilityError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except NumericError as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_DIVERGED
    finally:
        set_verbose(False)
        if file_handler is not None:
            logger.removeHandler(file_handler)
            file_handler.close()


def cmd_solve(args: list[str]) -> int:
    return execute(["solve", *args])


def cmd_sweep(args: list[str]) -> int:
    return execute(["sweep", *args])


def cmd_bench(args: list[str]) -> int:
    return execute(["bench", *args])


def cmd_gradcheck(args: list[str]) -> int:
    return execute(["gradcheck", *args])


def main():
    sys.exit(execute())


if __name__ == "__main__":
    main()
