"""Exception hierarchy. Each class carries the CLI exit code it maps to."""

from __future__ import annotations

from typing import Any


class QuatPolarError(Exception):
    exit_code = 2

    def __init__(self, message: str, witness: dict[str, Any] | None = None):
        super().__init__(message)
        self.witness = witness or {}


# exit 2: invalid input


class InvalidInputError(QuatPolarError, ValueError):
    exit_code = 2


class DimensionMismatchError(InvalidInputError):
    pass


class StructureError(InvalidInputError):
    """A complex matrix is not within tolerance of the quaternion block pattern."""


class NotHermitianError(InvalidInputError):
    pass


class SingularFormError(InvalidInputError):
    pass


class NotSelfadjointError(InvalidInputError):
    pass


class InvalidParamsError(InvalidInputError):
    pass


class MatrixFileError(InvalidInputError):
    pass


# exit 1: proven nonexistence


class NonexistenceError(QuatPolarError):
    exit_code = 1


class GramMismatchError(NonexistenceError):
    pass


class KernelMismatchError(NonexistenceError):
    pass


class SignatureMismatchError(NonexistenceError):
    pass


class NotIsometryError(NonexistenceError):
    pass


class SqrtExistenceError(NonexistenceError):
    pass


class KernelAlignmentError(NonexistenceError):
    pass


class PolarExistenceError(NonexistenceError):
    pass


# exit 3: numerical ambiguity


class NumericalAmbiguityError(QuatPolarError, RuntimeError):
    exit_code = 3


class ClusterAmbiguityError(NumericalAmbiguityError):
    pass


class CertificationError(NumericalAmbiguityError):
    pass


class ResampleExhaustedError(NumericalAmbiguityError):
    pass
