"""Spectral fractional Laplacian solvers with measure-valued data."""

from .errors import (
    ConfigError,
    DimensionMismatch,
    DomainError,
    FracMeasureError,
    NoConvergence,
    NumericalError,
    OutsideDomain,
)
from .fem import Density, FEFunction, PointDirac, WeightedCircle, measure_load
from .mesh import Mesh, build_structured_square, load_mesh
from .quadrature import DiagonalizationRule, build_rule, select_params, solve_practical
from .spectral import EigenDecomposition, FracParams, decompose, solve_ideal

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DiagonalizationRule",
    "DimensionMismatch",
    "Density",
    "DomainError",
    "EigenDecomposition",
    "FEFunction",
    "FracMeasureError",
    "FracParams",
    "Mesh",
    "NoConvergence",
    "NumericalError",
    "OutsideDomain",
    "PointDirac",
    "WeightedCircle",
    "build_rule",
    "build_structured_square",
    "decompose",
    "load_mesh",
    "measure_load",
    "select_params",
    "solve_ideal",
    "solve_practical",
]
