"""Operator-level diagnostics: eigenfunctions, projection norms, numerical range, inverse problem."""

from .eigenfunctions import (
    PiecewiseExponentialFunction,
    ProjectionReport,
    adjoint_eigenfunction,
    eigenfunction,
    gram_integral,
    projection_norm,
)
from .numerical_range import ProbeConfig, bump, numerical_range_probe
from .reconstruct import Reconstruction, reconstruct_polygon

__all__ = [
    "PiecewiseExponentialFunction", "ProjectionReport", "adjoint_eigenfunction", "eigenfunction",
    "gram_integral", "projection_norm", "ProbeConfig", "bump", "numerical_range_probe", "Reconstruction",
    "reconstruct_polygon",
]
