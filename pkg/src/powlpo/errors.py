"""Exception hierarchy shared by all modules.

Every error carries an ``exit_code`` so the CLI can map failures without
inspecting messages.
"""
from __future__ import annotations


class PowlError(Exception):
    exit_code = 2


class InputError(PowlError):
    """Input missing, unreadable or undecodable."""

    exit_code = 2


class EmptyInputError(InputError):
    pass


class ConfigError(PowlError):
    exit_code = 2


class ParseError(PowlError):
    """Malformed input file; carries a position when one is known."""

    exit_code = 3

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(PowlError):
    exit_code = 3


class ModelFormatError(PowlError):
    """Model JSON that does not follow the model schema."""

    exit_code = 3


class DomainError(PowlError, ValueError):
    exit_code = 2


class IdentityCollisionError(PowlError, ValueError):
    exit_code = 2


class PreconditionError(PowlError, ValueError):
    exit_code = 2


class StructureError(PowlError):
    """Net that is not a workflow net: no unique source and sink, or a node off every source-to-sink path."""

    exit_code = 3


class BudgetExceeded(PowlError):
    """A bounded search ran out of budget; the answer is unknown, not negative."""

    exit_code = 4

    def __init__(self, budget: int, what: str = "states"):
        super().__init__(f"budget of {budget} {what} exhausted")
        self.budget = budget


class LanguageTooLarge(PowlError):
    exit_code = 4

    def __init__(self, cap: int):
        super().__init__(f"language enumeration exceeded cap of {cap} traces")
        self.cap = cap
