"""Exception types shared across the toolkit.

The CLI maps these onto process exit codes: ConfigError -> 1,
ParseError -> 2, ComputationError -> 3.
"""

from __future__ import annotations


class DomainportError(ValueError):
    """Base class for all toolkit errors."""


class ConfigError(DomainportError):
    """Invalid configuration or command usage."""


class ParseError(DomainportError):
    """Malformed or inconsistent input data.

    Carries an optional 1-based line number and byte offset so messages
    can point at the offending location.
    """

    def __init__(
        self,
        message: str,
        *,
        line: int | None = None,
        offset: int | None = None,
        source: str | None = None,
    ) -> None:
        where = []
        if source is not None:
            where.append(source)
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte offset {offset}")
        full = f"{': '.join(where)}: {message}" if where else message
        super().__init__(full)
        self.line = line
        self.offset = offset
        self.source = source


class ComputationError(DomainportError):
    """A numeric operation has no defined result for the given input."""
