"""
Bridge Lab Errors

Exception hierarchy raised by the oracle, simulation and estimation layers.
The command layer maps each class onto an exit code.
"""

from typing import Any, Dict, Optional


class BridgeLabError(Exception):
    """Base class for every error raised by bridgelab."""


class DomainError(BridgeLabError, ValueError):
    """An argument violates an operation's precondition."""


class NumericalError(BridgeLabError, ArithmeticError):
    """A numerical routine failed to reach its accuracy target."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
        return f"{base} ({details})"


class UnsupportedOperationError(BridgeLabError, NotImplementedError):
    """The operation has no implementation for the requested process."""


class RegistryError(BridgeLabError, LookupError):
    """Unknown oracle statistic id or a missing argument for one."""
