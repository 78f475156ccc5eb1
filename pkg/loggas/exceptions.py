from typing import Dict, Optional


class LogGasError(Exception):
    """Base class for errors raised by loggas"""
    exit_code = 3

    def __init__(self, message: str, diagnostics: Optional[Dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(LogGasError, ValueError):
    """Scenario file could not be parsed or failed validation"""
    exit_code = 2


class NumericalError(LogGasError, ArithmeticError):
    """A solver failed; diagnostics carry the module-level details"""
    exit_code = 3


class AcceptanceFailure(LogGasError):
    """One or more verify checks did not meet their tolerance"""
    exit_code = 1
