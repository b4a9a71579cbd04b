"""
Error handling for SchurLab
Custom exceptions for every numerical failure mode, plus a handler that
logs them by severity, counts them and maps them to CLI exit codes.
"""

import traceback
from typing import Dict, Any, Optional, Sequence
from datetime import datetime, timezone
from enum import Enum

from schurlab.core.logging import main_logger as logger


class ErrorSeverity(Enum):
    """Error severity levels"""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class ErrorCategory(Enum):
    """Error categories for classification"""
    VALIDATION = "validation"
    DOMAIN = "domain"
    NUMERICAL = "numerical"
    RESOURCE = "resource"
    TOLERANCE = "tolerance"
    IO = "io"
    SYSTEM = "system"


class SchurLabException(Exception):
    """Base exception class for SchurLab"""

    def __init__(
        self,
        message: str,
        error_code: str = "GENERAL_ERROR",
        category: ErrorCategory = ErrorCategory.SYSTEM,
        severity: ErrorSeverity = ErrorSeverity.MEDIUM,
        details: Optional[Dict[str, Any]] = None,
        recoverable: bool = False
    ):
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.category = category
        self.severity = severity
        self.details = details or {}
        self.recoverable = recoverable
        self.timestamp = datetime.now(timezone.utc)

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to a structured error record"""
        return {
            "error_code": self.error_code,
            "message": self.message,
            "category": self.category.value,
            "severity": self.severity.value,
            "details": self.details,
            "recoverable": self.recoverable,
        }


class OrderTooLowError(SchurLabException):
    """Function does not provide enough derivatives"""

    def __init__(self, message: str, required: Optional[int] = None,
                 available: Optional[int] = None, **kwargs):
        super().__init__(message, error_code="ORDER_TOO_LOW",
                         category=ErrorCategory.VALIDATION, **kwargs)
        if required is not None:
            self.details["required"] = required
        if available is not None:
            self.details["available"] = available


class NodeClashError(SchurLabException):
    """Two declared-distinct nodes lie within the node tolerance"""

    def __init__(self, message: str, nodes: Optional[Sequence[float]] = None,
                 tol: Optional[float] = None, **kwargs):
        super().__init__(message, error_code="NODE_CLASH",
                         category=ErrorCategory.VALIDATION, **kwargs)
        if nodes is not None:
            self.details["nodes"] = [float(x) for x in nodes]
        if tol is not None:
            self.details["tol"] = tol


class DegenerateDenominatorError(SchurLabException):
    """A reduction or fraction would divide by a vanishing difference"""

    def __init__(self, message: str, **kwargs):
        super().__init__(message, error_code="DEGENERATE_DENOMINATOR",
                         category=ErrorCategory.DOMAIN, **kwargs)


class ZeroNodeError(SchurLabException):
    """Zero-insertion pivots must be nonzero"""

    def __init__(self, message: str, index: Optional[int] = None, **kwargs):
        super().__init__(message, error_code="ZERO_NODE",
                         category=ErrorCategory.DOMAIN, **kwargs)
        if index is not None:
            self.details["index"] = index


class IndexOutOfRangeError(SchurLabException):
    """Index outside the admissible range"""

    def __init__(self, message: str, index: Optional[int] = None,
                 bounds: Optional[Sequence[int]] = None, **kwargs):
        super().__init__(message, error_code="INDEX_OUT_OF_RANGE",
                         category=ErrorCategory.VALIDATION, **kwargs)
        if index is not None:
            self.details["index"] = index
        if bounds is not None:
            self.details["bounds"] = list(bounds)


class SingularSystemError(SchurLabException):
    """Exact linear system has no unique solution"""

    def __init__(self, message: str, **kwargs):
        super().__init__(message, error_code="SINGULAR_SYSTEM",
                         category=ErrorCategory.NUMERICAL,
                         severity=ErrorSeverity.CRITICAL, **kwargs)


class InvalidExponentsError(SchurLabException):
    """Schatten exponents outside the admissible range"""

    def __init__(self, message: str, exponents: Optional[Sequence[float]] = None, **kwargs):
        super().__init__(message, error_code="INVALID_EXPONENTS",
                         category=ErrorCategory.VALIDATION, **kwargs)
        if exponents is not None:
            self.details["exponents"] = [float(x) for x in exponents]


class OnDiagonalError(SchurLabException):
    """Point lies on a diagonal where the partition is undefined"""

    def __init__(self, message: str, **kwargs):
        super().__init__(message, error_code="ON_DIAGONAL",
                         category=ErrorCategory.DOMAIN, **kwargs)


class OffDomainError(SchurLabException):
    """Point has coinciding coordinates"""

    def __init__(self, message: str, **kwargs):
        super().__init__(message, error_code="OFF_DOMAIN",
                         category=ErrorCategory.DOMAIN, **kwargs)


class SizeGuardError(SchurLabException):
    """Requested size exceeds a combinatorial growth guard"""

    def __init__(self, message: str, requested: Optional[int] = None,
                 limit: Optional[int] = None, **kwargs):
        super().__init__(message, error_code="SIZE_GUARD",
                         category=ErrorCategory.RESOURCE, **kwargs)
        if requested is not None:
            self.details["requested"] = requested
        if limit is not None:
            self.details["limit"] = limit


class SupportViolationError(SchurLabException):
    """Symbol is nonzero outside its declared support margin"""

    def __init__(self, message: str, **kwargs):
        super().__init__(message, error_code="SUPPORT_VIOLATION",
                         category=ErrorCategory.DOMAIN, **kwargs)


class GridTooCoarseError(SchurLabException):
    """Fourier grid does not resolve the decay of the sampled weight"""

    def __init__(self, message: str, boundary_ratio: Optional[float] = None, **kwargs):
        super().__init__(message, error_code="GRID_TOO_COARSE",
                         category=ErrorCategory.NUMERICAL, **kwargs)
        if boundary_ratio is not None:
            self.details["boundary_ratio"] = boundary_ratio


class ZeroCoordinateError(SchurLabException):
    """Reconstruction requires nonzero coordinates"""

    def __init__(self, message: str, **kwargs):
        super().__init__(message, error_code="ZERO_COORDINATE",
                         category=ErrorCategory.DOMAIN, **kwargs)


class DimensionMismatchError(SchurLabException):
    """Matrix shapes or symbol arity do not line up"""

    def __init__(self, message: str, **kwargs):
        super().__init__(message, error_code="DIMENSION_MISMATCH",
                         category=ErrorCategory.VALIDATION, **kwargs)


class NonpositiveInputError(SchurLabException):
    """Input must be strictly positive"""

    def __init__(self, message: str, **kwargs):
        super().__init__(message, error_code="NONPOSITIVE_INPUT",
                         category=ErrorCategory.VALIDATION, **kwargs)


class MissingInputError(SchurLabException):
    """Results or config files are missing"""

    def __init__(self, message: str, path: Optional[str] = None, **kwargs):
        super().__init__(message, error_code="MISSING_INPUT",
                         category=ErrorCategory.IO, **kwargs)
        if path is not None:
            self.details["path"] = path


class ConfigValidationError(SchurLabException):
    """Experiment configuration failed schema validation"""

    def __init__(self, message: str, errors: Optional[Any] = None, **kwargs):
        super().__init__(message, error_code="CONFIG_VALIDATION",
                         category=ErrorCategory.VALIDATION,
                         severity=ErrorSeverity.LOW, **kwargs)
        if errors is not None:
            self.details["errors"] = errors


class ToleranceBreachError(SchurLabException):
    """A verification residual exceeded its tolerance"""

    def __init__(self, message: str, suite: Optional[str] = None,
                 residual: Optional[float] = None, tol: Optional[float] = None, **kwargs):
        super().__init__(message, error_code="TOLERANCE_BREACH",
                         category=ErrorCategory.TOLERANCE,
                         severity=ErrorSeverity.HIGH, **kwargs)
        if suite is not None:
            self.details["suite"] = suite
        if residual is not None:
            self.details["residual"] = residual
        if tol is not None:
            self.details["tol"] = tol


class ErrorHandler:
    """Centralized error logging, statistics and exit-code mapping"""

    EXIT_CODES = {
        ErrorCategory.VALIDATION: 2,
        ErrorCategory.TOLERANCE: 3,
    }

    def __init__(self):
        self.error_counts: Dict[str, int] = {}

    def handle_error(self, error: Exception, context: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """
        Log an error, count it and build its structured record

        Args:
            error: The exception that occurred
            context: Additional context information

        Returns:
            Error record dictionary
        """
        context = context or {}

        if not isinstance(error, SchurLabException):
            error = self.convert_error(error)

        self._log_error(error, context)
        self._update_error_counts(error)
        return self._generate_error_record(error, context)

    def convert_error(self, error: Exception) -> SchurLabException:
        """Convert generic exceptions to SchurLab exceptions"""
        if isinstance(error, FileNotFoundError):
            return MissingInputError(str(error), path=getattr(error, "filename", None))
        elif isinstance(error, (ValueError, TypeError)):
            return SchurLabException(
                message=str(error),
                error_code="INVALID_INPUT",
                category=ErrorCategory.VALIDATION,
                severity=ErrorSeverity.LOW,
                details={"original_type": type(error).__name__}
            )
        elif isinstance(error, (FloatingPointError, ZeroDivisionError, OverflowError)):
            return SchurLabException(
                message=str(error),
                error_code="FLOATING_POINT",
                category=ErrorCategory.NUMERICAL,
                severity=ErrorSeverity.HIGH,
                details={"original_type": type(error).__name__}
            )
        else:
            return SchurLabException(
                message=str(error),
                error_code="UNKNOWN_ERROR",
                severity=ErrorSeverity.CRITICAL,
                details={
                    "original_type": type(error).__name__,
                    "traceback": traceback.format_exception_only(type(error), error)[-1].strip(),
                }
            )

    def exit_code_for(self, error: Exception) -> int:
        """Map an error to the CLI exit code"""
        if not isinstance(error, SchurLabException):
            error = self.convert_error(error)
        return self.EXIT_CODES.get(error.category, 1)

    def _log_error(self, error: SchurLabException, context: Dict[str, Any]):
        """Log error with appropriate severity level"""
        extra = {"error_code": error.error_code}

        if error.severity == ErrorSeverity.CRITICAL:
            logger.critical(f"CRITICAL ERROR: {error.message}", extra=extra)
        elif error.severity == ErrorSeverity.HIGH:
            logger.error(f"HIGH SEVERITY ERROR: {error.message}", extra=extra)
        elif error.severity == ErrorSeverity.MEDIUM:
            logger.warning(f"MEDIUM SEVERITY ERROR: {error.message}", extra=extra)
        else:
            logger.info(f"LOW SEVERITY ERROR: {error.message}", extra=extra)
        if context:
            logger.debug(f"Error context: {context}", extra=extra)

    def _update_error_counts(self, error: SchurLabException):
        key = f"{error.category.value}:{error.error_code}"
        self.error_counts[key] = self.error_counts.get(key, 0) + 1

    def _generate_error_record(self, error: SchurLabException,
                               context: Dict[str, Any]) -> Dict[str, Any]:
        """Generate a standardized error record"""
        record = {"success": False, "error": error.to_dict()}
        if context:
            record["context"] = context
        return record

    def get_error_statistics(self) -> Dict[str, Any]:
        """Get error statistics"""
        return {
            "error_counts": self.error_counts.copy(),
            "total_errors": sum(self.error_counts.values()),
        }


# Global error handler instance
error_handler = ErrorHandler()
