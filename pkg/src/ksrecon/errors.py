from typing import Mapping


class KsreconError(Exception):
    pass


class DomainMismatchError(KsreconError, ValueError):
    def __init__(self, expected: str, actual: str, operation: str):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{operation} expects domain '{expected}', got '{actual}'")


class ShapeError(KsreconError, ValueError):
    pass


class DimensionMismatchError(ShapeError):
    pass


class DegenerateInputError(KsreconError, ValueError):
    pass


class ConfigurationError(KsreconError, ValueError):
    pass


class CalibrationError(ConfigurationError):
    pass


class SolverError(KsreconError):
    pass


class DivergenceError(KsreconError, ArithmeticError):
    """Non-finite value produced by an iterative method"""

    def __init__(self, message: str, iteration: int, slice_index: int | None = None):
        self.iteration = iteration
        self.slice_index = slice_index
        where = f" (slice {slice_index})" if slice_index is not None else ""
        super().__init__(f"{message} at iteration {iteration}{where}")


class TrainingError(DivergenceError):
    pass


class NumericError(DivergenceError):
    pass


class SliceReconstructionError(KsreconError):
    def __init__(self, failures: Mapping[int, Exception]):
        self.failures = dict(sorted(failures.items()))
        details = "; ".join(f"slice {idx}: {err}" for idx, err in self.failures.items())
        super().__init__(f"{len(self.failures)} slice(s) failed: {details}")

    @property
    def diverged(self) -> bool:
        return any(isinstance(err, DivergenceError) for err in self.failures.values())


class DegenerateStatisticsError(KsreconError, ValueError):
    pass


class OutOfBoundsError(KsreconError, IndexError):
    pass


class FileFormatError(KsreconError):
    pass
