"""
Domain exceptions
Every service failure is an AutomatonError; the API and CLI layers translate them.
"""
from typing import List, Optional


class AutomatonError(ValueError):
    """Base class for all domain errors."""


class AlphabetMismatchError(AutomatonError):
    """A letter or a machine is used against the wrong alphabet."""


class MalformedMachineError(AutomatonError):
    """A machine violates the guard/effect/blindness rules."""

    def __init__(self, message: str, diagnostics: Optional[List[str]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class AcceptanceKindError(AutomatonError):
    """A Büchi-only operation received a Muller machine, or the reverse."""


class CodingError(AutomatonError):
    """A word does not have the block shape expected by the decoder."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class ConstructionError(AutomatonError):
    """A construction received an input outside its precondition."""


class RunError(AutomatonError):
    """A run does not follow the machine's transitions or block boundaries."""


class CertificateError(AutomatonError):
    """A run certificate is malformed."""


class ParseError(AutomatonError):
    """An automaton file could not be parsed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class StrategyError(AutomatonError):
    """A strategy emitted an illegal move."""


class ExplorationLimitError(AutomatonError):
    """An exhaustive procedure was asked to go beyond its length guard."""
