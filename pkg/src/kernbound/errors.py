from typing import Any, Dict, Optional


class ErrorCode:
    INPUT_ERROR = "ERR_INPUT"
    DATA_ERROR = "ERR_DATA"
    PARAMETER_ERROR = "ERR_PARAMETER"
    CONSTRAINT_ERROR = "ERR_CONSTRAINT"
    CAPACITY_ERROR = "ERR_CAPACITY"
    PSD_VIOLATION = "ERR_PSD_VIOLATION"
    MEMBERSHIP_ERROR = "ERR_MEMBERSHIP"
    DEGENERATE_DATA = "ERR_DEGENERATE_DATA"
    CONFIG_ERROR = "ERR_CONFIG"


class ExitCode:
    SUCCESS = 0
    VERIFICATION_FAILED = 1
    USAGE = 2
    DATA = 3


class KernboundError(Exception):
    """Base class for kernbound errors"""

    exit_code: int = ExitCode.USAGE

    def __init__(self, message: str, code: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.code = code
        self.context = context or {}

    def to_dict(self) -> Dict[str, Any]:
        return {"code": self.code, "message": self.message, "context": self.context}


class InputError(KernboundError):
    exit_code = ExitCode.DATA

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message, ErrorCode.INPUT_ERROR, context)


class DataError(KernboundError):
    exit_code = ExitCode.DATA

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message, ErrorCode.DATA_ERROR, context)


class ParameterError(KernboundError):
    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message, ErrorCode.PARAMETER_ERROR, context)


class ConstraintError(KernboundError):
    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message, ErrorCode.CONSTRAINT_ERROR, context)


class CapacityError(KernboundError):
    def __init__(self, message: str, cap: int, context: Optional[Dict[str, Any]] = None):
        super().__init__(message, ErrorCode.CAPACITY_ERROR, {"cap": cap, **(context or {})})
        self.cap = cap


class PsdViolationError(KernboundError):
    exit_code = ExitCode.DATA

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message, ErrorCode.PSD_VIOLATION, context)


class MembershipError(KernboundError):
    def __init__(self, message: str, rho_max: float, context: Optional[Dict[str, Any]] = None):
        super().__init__(message, ErrorCode.MEMBERSHIP_ERROR, {"rho_max": rho_max, **(context or {})})
        self.rho_max = rho_max


class DegenerateDataError(KernboundError):
    exit_code = ExitCode.DATA

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message, ErrorCode.DEGENERATE_DATA, context)


class ConfigError(KernboundError):
    def __init__(self, message: str, line: Optional[int] = None, context: Optional[Dict[str, Any]] = None):
        located = f"line {line}: {message}" if line is not None else message
        super().__init__(located, ErrorCode.CONFIG_ERROR, {"line": line, **(context or {})})
        self.line = line
