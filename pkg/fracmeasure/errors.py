"""Exception hierarchy shared by every fracmeasure module."""

from __future__ import annotations

from typing import Sequence


class FracMeasureError(Exception):
    """Base class for all library errors."""


class ConfigError(FracMeasureError, ValueError):
    """Invalid run configuration."""

    def __init__(self, key: str, reason: str) -> None:
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason


class DimensionMismatch(FracMeasureError, ValueError):
    """Operands live on different meshes or have incompatible lengths."""


class NumericalError(FracMeasureError):
    """A numerical kernel failed."""


class NotPositiveDefinite(NumericalError):
    """A matrix expected to be SPD produced a non-positive pivot."""


class ConvergenceFailure(NumericalError):
    """A direct iteration (e.g. the dense eigensolver) did not converge."""


class NoConvergence(NumericalError):
    """An iterative method exhausted its iteration budget."""

    def __init__(
        self,
        message: str,
        *,
        iterations: int,
        residual: float,
        last_iterate=None,
        shift_index: int | None = None,
    ) -> None:
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
        self.last_iterate = last_iterate
        self.shift_index = shift_index


class DomainError(NumericalError, ValueError):
    """Argument outside the domain of a special function."""


class RootNotBracketed(NumericalError):
    """A sign change could not be located for a root search."""


class ParseError(FracMeasureError, ValueError):
    """Malformed mesh file."""

    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class InvalidTopology(FracMeasureError, ValueError):
    """Mesh violates orientation, conformity or boundary-flag invariants."""

    def __init__(self, message: str, triangle: int | None = None) -> None:
        prefix = f"triangle {triangle}: " if triangle is not None else ""
        super().__init__(prefix + message)
        self.triangle = triangle


class OutsideDomain(FracMeasureError, ValueError):
    """A point does not belong to the meshed domain."""

    def __init__(self, point: Sequence[float], message: str | None = None) -> None:
        x, y = float(point[0]), float(point[1])
        super().__init__(message or f"point ({x:.12g}, {y:.12g}) is outside the domain")
        self.point = (x, y)


class SupportTooCloseToBoundary(FracMeasureError, ValueError):
    """A regularized measure would leak outside the domain."""
