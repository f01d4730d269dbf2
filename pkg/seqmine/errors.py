from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from seqmine.checkpoint import Checkpoint

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_DIVERGENCE = 4


class SeqMineError(Exception):
    """Base class for every error raised by the engine."""

    exit_code: int = EXIT_UNEXPECTED


class ShapeError(SeqMineError, ValueError):
    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, *shapes: Any) -> None:
        if shapes:
            message = f"{message}: " + " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(message)
        self.shapes = tuple(tuple(s) for s in shapes)


class EmptySequenceError(ShapeError):
    def __init__(self, message: str = "sequence has no time steps") -> None:
        super().__init__(message)


class BoundsError(SeqMineError, IndexError):
    exit_code = EXIT_VALIDATION


class DomainError(SeqMineError, ValueError):
    exit_code = EXIT_VALIDATION


class NonFiniteError(SeqMineError, FloatingPointError):
    exit_code = EXIT_DIVERGENCE


class NotScalarError(SeqMineError, ValueError):
    exit_code = EXIT_VALIDATION


class DetachedLossError(SeqMineError, ValueError):
    """The loss has no path back to any tensor that requires grad."""

    exit_code = EXIT_VALIDATION


class GraphConsumedError(SeqMineError, RuntimeError):
    pass


class TsFormatError(SeqMineError, ValueError):
    """Malformed `.ts` input, reported with the offending line number."""

    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line
        self.reason = message


class EmptyDatasetError(SeqMineError, ValueError):
    exit_code = EXIT_VALIDATION


class ConfigValidationError(SeqMineError, ValueError):
    exit_code = EXIT_VALIDATION


class CheckpointError(SeqMineError, IOError):
    exit_code = EXIT_IO


class CorruptCheckpointError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointShapeError(CheckpointError):
    pass


class MissingGradientError(SeqMineError, RuntimeError):
    def __init__(self, name: str) -> None:
        super().__init__(f"No gradient populated for parameter <{name}>")
        self.name = name


class NonFiniteGradientError(NonFiniteError):
    def __init__(self, name: str) -> None:
        super().__init__(f"Non-finite gradient in parameter <{name}>, step aborted")
        self.name = name


class DivergenceError(SeqMineError, RuntimeError):
    """Training produced a non-finite loss; `last_good` holds the last sound state."""

    exit_code = EXIT_DIVERGENCE

    def __init__(self, message: str, last_good: Checkpoint | None = None) -> None:
        super().__init__(message)
        self.last_good = last_good


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, SeqMineError):
        return exc.exit_code

    if isinstance(exc, (FileNotFoundError, PermissionError, IsADirectoryError, OSError)):
        return EXIT_IO

    return EXIT_UNEXPECTED
