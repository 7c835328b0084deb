"""Spectral analysis of non-self-adjoint first-order systems through their characteristic exponential sums."""

from .catalog import example_catalog
from .expsum import ExpSum, ExpSumMatrix, es_eval, es_eval_scaled, es_mul
from .hull import HullReport, analyze_exponents, lattice_zeros, predicted_count, symbol_density
from .rootfinder import Rect, ZeroSet, count_function, find_zeros, localization_report, winding_number
from .system_model import (
    PiecewiseFirstOrderSystem,
    SecondOrderDiagonalSystem,
    char_function_numeric,
    expand_char_function,
)

__version__ = "0.1.0"

__all__ = [
    "ExpSum", "ExpSumMatrix", "HullReport", "PiecewiseFirstOrderSystem", "Rect", "SecondOrderDiagonalSystem",
    "ZeroSet", "analyze_exponents", "char_function_numeric", "count_function", "es_eval", "es_eval_scaled",
    "es_mul", "example_catalog", "expand_char_function", "find_zeros", "lattice_zeros", "localization_report",
    "predicted_count", "symbol_density", "winding_number",
]
