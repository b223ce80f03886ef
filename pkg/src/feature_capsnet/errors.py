"""
Exception hierarchy for feature-capsnet

Every error carries the exit code the command line maps it to, so command
modules can translate failures without inspecting messages.
"""

from typing import Optional


class CapsNetError(Exception):
    """Base class for all library errors"""

    exit_code = 1


class ConfigurationError(CapsNetError):
    """Invalid configuration, shapes or architecture parameters"""

    exit_code = 2


class ShapeError(ConfigurationError):
    """Operand shapes do not fit the operation"""

    def __init__(self, op: str, *shapes: tuple):
        self.op = op
        self.shapes = shapes
        rendered = " and ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {rendered}")


class UsageError(CapsNetError):
    """API called with arguments that violate its contract"""

    exit_code = 2


class IngestError(CapsNetError):
    """Dataset files are missing, malformed or inconsistent"""

    exit_code = 3

    def __init__(self, message: str, path: Optional[str] = None, offset: Optional[int] = None, line: Optional[int] = None):
        self.path = path
        self.offset = offset
        self.line = line
        where = []
        if path is not None:
            where.append(str(path))
        if offset is not None:
            where.append(f"offset {offset}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class NumericError(CapsNetError):
    """Non-finite values where finite values are required"""

    exit_code = 4


class DivergenceError(NumericError):
    """Training produced a non-finite loss or parameter"""

    def __init__(self, epoch: int, last_finite_epoch: int):
        self.epoch = epoch
        self.last_finite_epoch = last_finite_epoch
        super().__init__(
            f"Training diverged at epoch {epoch}: non-finite values "
            f"(last finite epoch: {last_finite_epoch})"
        )


class GradientCheckError(CapsNetError):
    """Analytic gradients disagree with finite differences"""

    exit_code = 5


class SweepError(CapsNetError):
    """No cell of a benchmark sweep completed"""

    exit_code = 4
