"""Exception hierarchy.

User errors (bad program text, bad registry data) derive from
:class:`UserError`; problems that arise while running a program derive from
:class:`EngineError`. The command line maps the two families to distinct exit
codes.
"""

from __future__ import annotations


class ChrismError(Exception):
    pass


class UserError(ChrismError):
    pass


class EngineError(ChrismError):
    pass


class ParseError(UserError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = f" at line {line}, column {col}" if line is not None else ""
        super().__init__(f"{message}{where}")


class ValidationError(UserError):
    """A syntactically valid program or observation violating a static rule."""


class RegistryError(UserError):
    """Invalid switch distribution or malformed registry file."""


class InstantiationError(EngineError):
    """A term that must be ground at run time is not."""


class EvaluationError(EngineError):
    """Arithmetic failure or a computed probability outside [0, 1]."""


class LimitExceeded(EngineError):
    def __init__(self, limit: str, value: int):
        self.limit = limit
        self.value = value
        super().__init__(f"{limit} limit of {value} exceeded (possible nontermination)")


class ImpossibleObservation(EngineError):
    def __init__(self, observation):
        self.observation = observation
        super().__init__(f"observation has probability zero: {observation}")
