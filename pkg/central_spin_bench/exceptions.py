class CentralSpinError(Exception):
    """
    Base exception for all error types that central-spin-bench might raise.
    """


class ConfigurationError(CentralSpinError):
    pass


class InvalidStateError(CentralSpinError):
    pass


class ResourceLimitError(CentralSpinError):
    pass


class UnsupportedStateError(CentralSpinError):
    pass


class SolverError(CentralSpinError):
    pass


class IntegratorError(SolverError):
    pass


class AcceptanceCheckFailed(CentralSpinError):
    pass


EXIT_CODES = {
    ConfigurationError: 1,
    InvalidStateError: 1,
    ResourceLimitError: 1,
    UnsupportedStateError: 1,
    SolverError: 2,
    AcceptanceCheckFailed: 3,
}


def exit_code_for(error: CentralSpinError) -> int:
    for error_type, code in EXIT_CODES.items():
        if isinstance(error, error_type):
            return code
    return 2


class TermInterrupt(CentralSpinError):
    pass
