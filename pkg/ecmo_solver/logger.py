import logging
import sys

logger = logging.getLogger("ecmo_solver")
stderr_handler = logging.StreamHandler(sys.stderr)
stderr_handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
logger.addHandler(stderr_handler)
logger.setLevel(logging.INFO)


def add_log_file(path: str) -> logging.FileHandler:
    """Mirror the package log into a file"""
    file_handler = logging.FileHandler(path)
    file_handler.setFormatter(stderr_handler.formatter)
    logger.addHandler(file_handler)
    return file_handler


def set_verbose(verbose: bool) -> None:
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
