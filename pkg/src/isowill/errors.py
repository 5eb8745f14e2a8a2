"""Exception hierarchy.

Validation problems derive from :class:`ValidationError`, numerical
breakdowns from :class:`NumericalFailure`; the CLI maps the two families to
different exit codes.
"""

from __future__ import annotations


class IsowillError(Exception):
    """Base class for all package errors."""


class ValidationError(IsowillError, ValueError):
    pass


class NumericalFailure(IsowillError, ArithmeticError):
    pass


# mesh construction
class MeshError(ValidationError):
    def __init__(self, message: str, simplex=None):
        super().__init__(message)
        self.simplex = simplex


class NonManifold(MeshError):
    pass


class OpenBoundary(MeshError):
    pass


class DegenerateFace(MeshError):
    pass


class BadIndex(MeshError):
    pass


class NonPositiveVolume(ValidationError):
    pass


class RankDeficientFit(NumericalFailure):
    pass


class DomainError(ValidationError):
    pass


class GeometryClash(ValidationError):
    pass


# inversions
class CenterOnSurface(ValidationError):
    pass


class UmbilicPoint(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class TargetOutOfRange(ValidationError):
    pass


class NoBracket(NumericalFailure):
    def __init__(self, message: str, samples=None):
        super().__init__(message)
        self.samples = samples or []


# variation
class ConstantCurvature(ValidationError):
    pass


class SupportTouchesForbidden(ValidationError):
    pass


class ZeroField(ValidationError):
    pass


class DegenerateStep(NumericalFailure):
    pass


# biharmonic bridge
class IllConditioned(NumericalFailure):
    pass


class OutOfDomain(ValidationError):
    pass


class QuadratureDivergence(NumericalFailure):
    pass


# gluing
class OriginNotUnique(ValidationError):
    pass


class DegeneratePair(ValidationError):
    pass


class BandTooWide(ValidationError):
    pass


class StitchMismatch(NumericalFailure):
    pass


class NoNegativeExcess(NumericalFailure):
    def __init__(self, message: str, rows=None):
        super().__init__(message)
        self.rows = rows or []


class BisectionNoBracket(NumericalFailure):
    def __init__(self, message: str, endpoints=None):
        super().__init__(message)
        self.endpoints = endpoints or {}


class MissingBeta(ValidationError):
    pass


# io
class ParseError(ValidationError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class NonTriangleFace(ParseError):
    pass


class IoError(IsowillError, OSError):
    pass
