"""Source buffers, locations and ranges.

A SourceRange's `end` points at the first byte PAST the last token, so
`text[begin.offset:end.offset]` is always the exact spelling of the node.
"""

from __future__ import annotations

from dataclasses import dataclass


class InternalError(Exception):
    """A contract of the toolkit itself was violated (not a user-input error)."""


class SourceFile:
    """One analyzed file: name plus its full text, with line-offset index."""

    def __init__(self, name: str, text: str):
        self.name = name
        self.text = text
        self._line_starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self._line_starts.append(i + 1)

    def location(self, offset: int) -> "SourceLocation":
        if offset < 0 or offset > len(self.text):
            raise InternalError(f"offset {offset} outside {self.name!r}")
        lo, hi = 0, len(self._line_starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self._line_starts[mid] <= offset:
                lo = mid
            else:
                hi = mid - 1
        return SourceLocation(self, lo + 1, offset - self._line_starts[lo] + 1, offset)

    def line_text(self, line: int) -> str:
        start = self._line_starts[line - 1]
        end = self.text.find("\n", start)
        if end < 0:
            end = len(self.text)
        return self.text[start:end]

    def num_lines(self) -> int:
        return len(self._line_starts)

    def __repr__(self):
        return f"SourceFile({self.name!r})"


@dataclass(frozen=True)
class SourceLocation:
    file: SourceFile
    line: int
    column: int
    offset: int

    def __str__(self):
        return f"{self.file.name}:{self.line}:{self.column}"

    def __lt__(self, other: "SourceLocation"):
        return self.offset < other.offset


@dataclass(frozen=True)
class SourceRange:
    begin: SourceLocation
    end: SourceLocation  # first byte past the last token

    def __post_init__(self):
        if self.begin.offset > self.end.offset:
            raise InternalError("inverted source range")

    @property
    def file(self) -> SourceFile:
        return self.begin.file


def get_source_text(rng: SourceRange, file: SourceFile | None = None) -> str:
    """Exact byte slice covered by `rng`, final token included."""
    f = file if file is not None else rng.file
    if rng.end.offset > len(f.text):
        raise InternalError("range out of bounds")
    return f.text[rng.begin.offset:rng.end.offset]
