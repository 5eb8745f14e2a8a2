"""Willmore energy and isoperimetric ratio of triangulated surfaces, inversions and connected sums."""

from .errors import IsowillError, NumericalFailure, ValidationError
from .mesh import SecondFundamentalForm2D, SurfaceMeasures, TriangleMesh, build_mesh, measure

__all__ = [
    "IsowillError",
    "NumericalFailure",
    "ValidationError",
    "SecondFundamentalForm2D",
    "SurfaceMeasures",
    "TriangleMesh",
    "build_mesh",
    "measure",
]

__version__ = "0.1.0"
