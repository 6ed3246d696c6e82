"""Located diagnostics shared by every compiler stage."""

from __future__ import annotations


class SpdError(Exception):
    """A compiler error with a stable machine-readable code.

    ``str(err)`` renders a single line ``file:line:col: CODE: message`` so the
    CLI can print diagnostics verbatim.
    """

    def __init__(self, code: str, message: str, line: int | None = None,
                 col: int | None = None, filename: str | None = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.line = line
        self.col = col
        self.filename = filename

    @property
    def location(self) -> str:
        parts = [self.filename or "<spd>"]
        if self.line is not None:
            parts.append(str(self.line))
            if self.col is not None:
                parts.append(str(self.col))
        return ":".join(parts)

    def __str__(self) -> str:
        return f"{self.location}: {self.code}: {self.message}"


class SimError(SpdError):
    """Raised by the stream simulator (missing plugins, width mismatches)."""
