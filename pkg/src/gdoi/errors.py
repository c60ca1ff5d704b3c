"""Exception hierarchy shared by every module.

Input-shaped problems derive from ``InputError`` and numerical precondition
failures from ``PreconditionError`` so the CLI can map them onto exit codes
without inspecting individual classes.
"""

from __future__ import annotations


class GdoiError(Exception):
    """Base class for all library errors."""


class InputError(GdoiError, ValueError):
    """Malformed or inconsistent input."""


class PreconditionError(GdoiError, ArithmeticError):
    """A numerical precondition of an operation does not hold."""


class DimensionMismatch(InputError):
    pass


class EmptyList(InputError):
    pass


class DerivativeOrderUnavailable(InputError):
    pass


class SingularBasis(PreconditionError):
    pass


class ConditioningExceeded(PreconditionError):
    pass


class ClusterAmbiguity(PreconditionError):
    pass


class NonConvergence(PreconditionError):
    pass


class RadiusExceeded(PreconditionError):
    pass


class SeparationViolation(PreconditionError):
    pass


class NonDiagonalizableInput(PreconditionError):
    pass


class SpectraOverlap(PreconditionError):
    pass


class NuViolation(PreconditionError):
    pass


class SeparationUnattainable(PreconditionError):
    pass
