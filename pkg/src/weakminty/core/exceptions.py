"""
Custom exceptions for weakminty.

This module defines the exception hierarchy for all solver, problem and
experiment errors.
"""

from typing import Optional, Sequence


class WeakMintyError(Exception):
    """Base exception for all weakminty errors."""

    def __init__(self, message: str, details: Optional[dict] = None) -> None:
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self) -> str:
        if self.details:
            return f"{self.message} | Details: {self.details}"
        return self.message


class ConfigurationError(WeakMintyError):
    """
    Raised when an experiment or solver is misconfigured.

    This includes unknown problem or algorithm ids, non-finite or
    out-of-range numerics, and empty sweeps.
    """

    def __init__(
        self,
        message: str = "Configuration error",
        setting_name: Optional[str] = None,
        details: Optional[dict] = None,
    ) -> None:
        details = details or {}
        if setting_name:
            details["setting"] = setting_name
        super().__init__(message, details)
        self.setting_name = setting_name


class MissingMetadataError(WeakMintyError):
    """
    Raised when an operation needs problem metadata that is not set.

    Lipschitz constant, weak Minty parameter or solution. This is never
    used to signal a step size outside the theory; see ValidityReport.
    """

    def __init__(
        self,
        message: str = "Required problem metadata is missing",
        field_name: Optional[str] = None,
        problem: Optional[str] = None,
        details: Optional[dict] = None,
    ) -> None:
        details = details or {}
        if field_name:
            details["field"] = field_name
        if problem:
            details["problem"] = problem
        super().__init__(message, details)
        self.field_name = field_name
        self.problem = problem


class NonFiniteIterateError(WeakMintyError):
    """
    Raised when a field value or an iterate stops being finite.

    The offending point is kept so the run can be reproduced.
    """

    def __init__(
        self,
        message: str = "Non-finite value encountered",
        iteration: Optional[int] = None,
        point: Optional[Sequence[float]] = None,
        details: Optional[dict] = None,
    ) -> None:
        details = details or {}
        if iteration is not None:
            details["iteration"] = iteration
        if point is not None:
            details["point"] = [float(x) for x in point]
        super().__init__(message, details)
        self.iteration = iteration
        self.point = point


class DimensionMismatchError(WeakMintyError):
    """Raised when a point does not match the operator dimension."""

    def __init__(
        self,
        message: str = "Dimension mismatch",
        expected: Optional[int] = None,
        got: Optional[int] = None,
        details: Optional[dict] = None,
    ) -> None:
        details = details or {}
        if expected is not None:
            details["expected"] = expected
        if got is not None:
            details["got"] = got
        super().__init__(message, details)
        self.expected = expected
        self.got = got
