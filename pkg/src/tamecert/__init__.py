"""Sampled injectivity certificates for nonsmooth piecewise maps."""

from .dsl import ParseError, format_map, load_map, parse_expr, parse_map
from .piecewise import (
    NONDIFFERENTIABLE,
    DomainError,
    NoPieceError,
    PiecewiseMap,
    directional_derivative,
    eval_map,
    jacobian,
)

__version__ = "0.1.0"

__all__ = [
    "NONDIFFERENTIABLE", "DomainError", "NoPieceError", "ParseError", "PiecewiseMap",
    "directional_derivative", "eval_map", "format_map", "jacobian", "load_map",
    "parse_expr", "parse_map", "__version__",
]
