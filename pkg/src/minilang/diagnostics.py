"""Diagnostics, fix-it hints and fix application shared by all tools."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .source import InternalError, SourceLocation, SourceRange


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"
    NOTE = "note"


class FixKind(enum.Enum):
    INSERTION = "insertion"
    REPLACEMENT = "replacement"
    REMOVAL = "removal"


@dataclass(frozen=True)
class FixIt:
    kind: FixKind
    range: SourceRange
    text: str = ""

    @staticmethod
    def insertion(loc: SourceLocation, text: str) -> "FixIt":
        return FixIt(FixKind.INSERTION, SourceRange(loc, loc), text)

    @staticmethod
    def replacement(rng: SourceRange, text: str) -> "FixIt":
        return FixIt(FixKind.REPLACEMENT, rng, text)

    @staticmethod
    def removal(rng: SourceRange) -> "FixIt":
        return FixIt(FixKind.REMOVAL, rng)


@dataclass
class Diagnostic:
    location: SourceLocation
    message: str  # placeholders already substituted
    severity: Severity
    check_name: str = ""
    fixits: list[FixIt] = field(default_factory=list)
    attached_notes: list["Diagnostic"] = field(default_factory=list)
    highlight: SourceRange | None = None

    def __post_init__(self):
        for note in self.attached_notes:
            if note.attached_notes:
                raise InternalError("notes carry no nested notes")
        spans = sorted((f.range.begin.offset, f.range.end.offset)
                       for f in self.fixits)
        for (_, prev_end), (begin, _) in zip(spans, spans[1:]):
            if begin < prev_end:
                raise InternalError("overlapping fixits within one diagnostic")


def format_message(template: str, args: tuple) -> str:
    """Substitute %0..%9; node/decl arguments render as their quoted name."""
    out = []
    i = 0
    while i < len(template):
        ch = template[i]
        if ch == "%" and i + 1 < len(template) and template[i + 1].isdigit():
            k = int(template[i + 1])
            if k >= len(args):
                raise InternalError(f"unfilled placeholder %{k} in {template!r}")
            out.append(_render_arg(args[k]))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _render_arg(arg) -> str:
    name = getattr(arg, "name", None)
    if name is not None:
        return f"'{name}'"
    return str(arg)


def emit_diag(loc: SourceLocation, template: str, args: tuple = (),
              severity: Severity = Severity.WARNING, check_name: str = "",
              fixits: list[FixIt] | None = None,
              highlight: SourceRange | None = None) -> Diagnostic:
    return Diagnostic(loc, format_message(template, args), severity,
                      check_name, list(fixits or ()), [], highlight)


def render_diagnostic(diag: Diagnostic, *, show_check_name: bool = True) -> str:
    """`file:line:col: severity: message [check]` plus source line and caret."""
    loc = diag.location
    head = f"{loc}: {diag.severity.value}: {diag.message}"
    if show_check_name and diag.check_name and diag.severity is Severity.WARNING:
        head += f" [{diag.check_name}]"
    lines = [head]
    src = loc.file.line_text(loc.line)
    lines.append(src)
    caret = " " * (loc.column - 1) + "^"
    if diag.highlight is not None and diag.highlight.begin.line == loc.line:
        width = diag.highlight.end.offset - diag.highlight.begin.offset
        extra = max(0, width - 1 - (loc.offset - diag.highlight.begin.offset))
        caret += "~" * min(extra, max(0, len(src) - loc.column))
    lines.append(caret)
    for fx in diag.fixits:
        if fx.kind in (FixKind.INSERTION, FixKind.REPLACEMENT) and fx.text:
            lines.append(" " * (fx.range.begin.column - 1) + fx.text)
    return "\n".join(lines)


def _fix_group(diag: Diagnostic) -> list[FixIt]:
    fixes = list(diag.fixits)
    for note in diag.attached_notes:
        fixes.extend(note.fixits)
    return fixes


def apply_fixes(text: str, diagnostics: list[Diagnostic]) -> tuple[str, list[str]]:
    """Apply fix-it edits, right-to-left by offset.

    A diagnostic and its attached notes form one edit group; a group whose
    edits overlap an already accepted edit is skipped whole, with a tool
    warning. Returns (rewritten text, tool warnings).
    """
    accepted: list[FixIt] = []
    warnings: list[str] = []
    spans: list[tuple[int, int]] = []
    for diag in diagnostics:
        group = _fix_group(diag)
        if not group:
            continue
        gspans = [(f.range.begin.offset, f.range.end.offset) for f in group]
        conflict = any(
            b0 < e1 and b1 < e0 or (b0 == b1 and e0 == b0 and e1 == b1)
            for (b0, e0) in gspans for (b1, e1) in spans
        )
        if conflict:
            warnings.append(
                f"{diag.location}: fix for '{diag.message}' overlaps an earlier fix; skipped")
            continue
        accepted.extend(group)
        spans.extend(gspans)
    new_text = text
    for fx in sorted(accepted, key=lambda f: f.range.begin.offset, reverse=True):
        b, e = fx.range.begin.offset, fx.range.end.offset
        if fx.kind is FixKind.REMOVAL:
            new_text = new_text[:b] + new_text[e:]
        elif fx.kind is FixKind.REPLACEMENT:
            new_text = new_text[:b] + fx.text + new_text[e:]
        else:
            new_text = new_text[:b] + fx.text + new_text[b:]
    return new_text, warnings
