"""Error kinds raised by ecmo_solver"""

from typing import Optional


class EcmoError(Exception):
    pass


class InputError(EcmoError, ValueError):
    """Malformed input: bad dimensions, invalid preference, invalid file, unsupported problem shape"""


class CapabilityError(EcmoError):
    """The object cannot provide the requested operation"""


class NumericError(EcmoError, ArithmeticError):
    def __init__(self, message: str, coordinate: Optional[int] = None):
        super().__init__(message)
        self.coordinate = coordinate
        """Coordinate whose evaluation produced the non-finite value, if known"""


class DivergedError(NumericError):
    def __init__(self, message: str, state=None, iteration: int = 0):
        super().__init__(message)
        self.state = state
        """Last finite iterate before the divergence"""
        self.iteration = iteration
        """Iteration index at which a non-finite value appeared"""
