"""Exception hierarchy for dgflow.

Every error carries an ``ErrorCodes`` member so the CLI can log it with a
stable code and map it to an exit status.
"""

from typing import Any, Dict, List, Optional

from .logging_config import ErrorCodes


class DGFlowError(Exception):
    """Base class for all dgflow errors.

    Attributes:
        error_code (ErrorCodes): Stable code used in logs.
        details (Dict[str, Any]): Structured context (element ids, offending values).
    """

    error_code: ErrorCodes = ErrorCodes.CONFIGURATION_ERROR

    def __init__(
        self,
        message: str,
        *,
        error_code: Optional[ErrorCodes] = None,
        **details: Any,
    ):
        super().__init__(message)
        if error_code is not None:
            self.error_code = error_code
        self.details: Dict[str, Any] = details


class InvalidOrderError(DGFlowError, ValueError):
    error_code = ErrorCodes.INVALID_ORDER


class OutOfRangeError(DGFlowError, ValueError):
    error_code = ErrorCodes.OUT_OF_RANGE


class DimensionError(DGFlowError, ValueError):
    error_code = ErrorCodes.DIMENSION_MISMATCH


class ParameterError(DGFlowError, ValueError):
    error_code = ErrorCodes.PARAMETER_ERROR


class GeometryError(DGFlowError, ValueError):
    error_code = ErrorCodes.GEOMETRY_ERROR


class MeshValidityError(GeometryError):
    """Non-positive mapping Jacobian; ``details['element']`` names the element."""

    error_code = ErrorCodes.MESH_VALIDITY_ERROR


class AdmissibilityError(DGFlowError, ArithmeticError):
    """Non-positive density or pressure.

    ``details`` holds the offending ``state`` and, when known, ``element`` and
    ``node`` (tensor index inside the element).
    """

    error_code = ErrorCodes.INADMISSIBLE_STATE


class ConfigurationError(DGFlowError, ValueError):
    error_code = ErrorCodes.CONFIGURATION_ERROR


class NumericalValidityError(DGFlowError, ArithmeticError):
    error_code = ErrorCodes.NUMERICAL_VALIDITY


class RestartFormatError(DGFlowError, ValueError):
    error_code = ErrorCodes.RESTART_FORMAT_ERROR


class StageError(DGFlowError, RuntimeError):
    """Residual evaluation failed inside a Runge-Kutta stage."""

    error_code = ErrorCodes.STAGE_FAILURE


class ControlFileError(DGFlowError, ValueError):
    """Structured parser failure listing every problem found.

    Attributes:
        errors (List[str]): One human-readable entry per problem.
    """

    error_code = ErrorCodes.INVALID_CONTROL_FILE

    def __init__(self, errors: List[str], *, error_code: Optional[ErrorCodes] = None):
        self.errors = list(errors)
        summary = "; ".join(self.errors) if self.errors else "invalid control file"
        super().__init__(summary, error_code=error_code, errors=self.errors)
