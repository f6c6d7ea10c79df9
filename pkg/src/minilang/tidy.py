"""Lint framework and the redundant-pointer check.

The check watches pointer locals that carry an initializer, classifies each
reference of them (plain use, dereference, dereference that initializes
another variable, null guard), and at end of unit either inlines a
single-use pointer's initializer or, under --std=17, rewrites the
guard + initializing-dereference pair into an if-scoped pointer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from . import matchers as M
from .diagnostics import (  # noqa: F401  (re-exported framework surface)
    apply_fixes, Diagnostic, emit_diag, FixIt, FixKind, format_message,
    render_diagnostic, Severity,
)
from .frontend.astnodes import DeclRef, Expr, IfStmt, Node, VarDecl
from .source import InternalError, SourceFile, SourceRange, get_source_text


class UsageKind(enum.IntEnum):
    # Order encodes specialization: higher replaces lower for the same ref.
    NORMAL = 0
    DEREFERENCE = 1
    DEREF_INIT = 2
    GUARD = 3


@dataclass
class VarUsage:
    usage_kind: UsageKind
    decl_ref: DeclRef
    deref_expr: Node | None = None  # DEREFERENCE, DEREF_INIT
    inited_var: VarDecl | None = None  # DEREF_INIT
    guard_if: IfStmt | None = None  # GUARD
    flow_stmt: Node | None = None  # GUARD

    def __post_init__(self):
        k = self.usage_kind
        assert (self.deref_expr is not None) == (
            k in (UsageKind.DEREFERENCE, UsageKind.DEREF_INIT))
        assert (self.inited_var is not None) == (k is UsageKind.DEREF_INIT)
        assert (self.guard_if is not None) == (k is UsageKind.GUARD)


def _specializes(new: UsageKind, old: UsageKind) -> bool:
    if old is UsageKind.NORMAL:
        return new is not UsageKind.NORMAL
    return old is UsageKind.DEREFERENCE and new is UsageKind.DEREF_INIT


@dataclass
class TrackedPointer:
    decl: VarDecl
    usages: dict[int, VarUsage] = field(default_factory=dict)  # decl_ref id -> usage

    def ordered_usages(self) -> list[VarUsage]:
        return sorted(self.usages.values(), key=lambda u: u.decl_ref.range.begin.offset)


class UsageLedger:
    """Per-unit map from tracked pointer declaration to its usages."""

    def __init__(self):
        self.pointers: dict[int, TrackedPointer] = {}  # VarDecl node_id

    def track(self, decl: VarDecl) -> TrackedPointer:
        entry = self.pointers.get(decl.node_id)
        if entry is None:
            entry = TrackedPointer(decl)
            self.pointers[decl.node_id] = entry
        return entry

    def add_usage(self, decl_ref: DeclRef, usage: VarUsage) -> None:
        decl = decl_ref.decl
        assert isinstance(decl, VarDecl), "usage of an untracked declaration"
        entry = self.track(decl)
        old = entry.usages.get(decl_ref.node_id)
        if old is None or _specializes(usage.usage_kind, old.usage_kind):
            entry.usages[decl_ref.node_id] = usage

    def initializer(self, decl: VarDecl) -> Expr:
        return decl.init


# --- check framework --------------------------------------------------------

class TidyCheck:
    """Base class: subclasses register matchers and consume match results."""

    name = ""

    def register_matchers(self) -> list[M.Matcher]:
        raise NotImplementedError

    def check(self, result: M.MatchResult) -> None:
        raise NotImplementedError

    def on_end_of_translation_unit(self) -> list[Diagnostic]:
        return []


def run_checks(unit, file: SourceFile, checks: list[TidyCheck]) -> list[Diagnostic]:
    """Match, dispatch callbacks, then collect end-of-unit diagnostics,
    ordered by (offset of primary location, emission order)."""
    diags: list[Diagnostic] = []
    for check in checks:
        hits: list[tuple[int, int, M.MatchResult]] = []
        for idx, matcher in enumerate(check.register_matchers()):
            for result in M.match(matcher, unit):
                hits.append((result.root.node_id, idx, result))
        hits.sort(key=lambda h: (h[0], h[1]))
        for _, _, result in hits:
            check.check(result)
        diags.extend(check.on_end_of_translation_unit())
    order = {id(d): i for i, d in enumerate(diags)}
    diags.sort(key=lambda d: (d.location.offset, order[id(d)]))
    return diags


# --- the redundant pointer check ---------------------------------------------

CHECK_NAME = "readability-redundant-pointer"

_DEFAULT_CONSTRUCTIBLE_BASES = ("int", "bool", "char", "string")


def _pointer_var() -> M.Matcher:
    return M.varDecl(M.hasType(M.pointerType()), M.hasInitializer(M.expr()))


class RedundantPointerCheck(TidyCheck):
    name = CHECK_NAME

    def __init__(self, file: SourceFile, std: int = 14, structs: dict | None = None):
        self.file = file
        self.std = std
        self.structs = structs or {}
        self.ledger = UsageLedger()

    def register_matchers(self) -> list[M.Matcher]:
        pointer_var = _pointer_var()
        var_usage = M.declRefExpr(M.to(pointer_var))
        member_usage = M.memberExpr(M.hasDescendant(var_usage.bind("DerefdVar")))
        dereference = M.stmt(M.anyOf(
            member_usage.bind("DerefUsage"),
            M.methodCallExpr(M.has(member_usage)).bind("DerefUsage"),
            M.unaryOperator(M.hasOperatorName("*"),
                            M.hasDescendant(var_usage.bind("DerefdVar"))).bind("DerefUsage"),
        ))
        var_init_from_deref = M.varDecl(
            M.hasInitializer(M.ignoringParens(dereference))).bind("InitedVar")
        flow_breaking = M.stmt(M.anyOf(
            M.returnStmt(), M.continueStmt(), M.breakStmt(),
            M.has(M.callExpr(M.callee(M.functionDecl(M.isNoReturn())))),
        )).bind("EarlyReturn")
        guard = M.ifStmt(
            M.hasCondition(M.allOf(
                M.hasDescendant(var_usage.bind("UsedVar")),
                M.unless(M.hasDescendant(dereference)),
            )),
            M.hasThen(M.anyOf(
                flow_breaking,
                M.compoundStmt(M.statementCountIs(1),
                               M.hasAnySubstatement(flow_breaking)),
            )),
            M.unless(M.hasElse(M.stmt())),
        ).bind("GuardStmt")
        return [
            guard,
            var_init_from_deref,
            dereference,
            var_usage.bind("PlainUsage"),
        ]

    # most specialized result first, each branch returns after handling
    def check(self, result: M.MatchResult) -> None:
        guard = M.getBound(result, "GuardStmt", IfStmt)
        if guard is not None:
            flow = M.getBound(result, "EarlyReturn", Node)
            ref = M.getBound(result, "UsedVar", DeclRef)
            if flow is None or ref is None:
                raise InternalError("guard match without its bindings")
            self.ledger.add_usage(ref, VarUsage(UsageKind.GUARD, ref,
                                                guard_if=guard, flow_stmt=flow))
            return
        inited = M.getBound(result, "InitedVar", VarDecl)
        if inited is not None:
            deref = M.getBound(result, "DerefUsage", Node)
            ref = M.getBound(result, "DerefdVar", DeclRef)
            if deref is None or ref is None:
                raise InternalError("init match without its bindings")
            self.ledger.add_usage(ref, VarUsage(UsageKind.DEREF_INIT, ref,
                                                deref_expr=deref, inited_var=inited))
            return
        deref = M.getBound(result, "DerefUsage", Node)
        if deref is not None:
            ref = M.getBound(result, "DerefdVar", DeclRef)
            if ref is None:
                raise InternalError("dereference match without its bindings")
            self.ledger.add_usage(ref, VarUsage(UsageKind.DEREFERENCE, ref,
                                                deref_expr=deref))
            return
        ref = M.getBound(result, "PlainUsage", DeclRef)
        if ref is not None:
            self.ledger.add_usage(ref, VarUsage(UsageKind.NORMAL, ref))
            return

    # --- end-of-unit decisions ---

    def on_end_of_translation_unit(self) -> list[Diagnostic]:
        diags: list[Diagnostic] = []
        entries = sorted(self.ledger.pointers.values(),
                         key=lambda e: e.decl.range.begin.offset)
        for entry in entries:
            usages = entry.ordered_usages()
            if len(usages) == 0 or len(usages) >= 3:
                continue
            if len(usages) == 1:
                diags.append(self._inline_single_use(entry, usages[0]))
                continue
            guards = [u for u in usages if u.usage_kind is UsageKind.GUARD]
            inits = [u for u in usages if u.usage_kind is UsageKind.DEREF_INIT]
            if (len(guards) == 1 and len(inits) == 1 and self.std >= 17
                    and self._rewritable_var(inits[0].inited_var)
                    and guards[0].decl_ref.range.begin.offset
                    < inits[0].decl_ref.range.begin.offset):
                try:
                    diags.extend(self.build_guard_rewrite(entry, guards[0], inits[0]))
                except InternalError:
                    pass  # a source range was unobtainable: emit nothing for p
        return diags

    def _rewritable_var(self, var: VarDecl) -> bool:
        # default-constructible and assignable: a non-const value type
        t = var.declared_type
        if t.is_const or t.indirections > 0:
            return False
        return t.base in _DEFAULT_CONSTRUCTIBLE_BASES or t.base in self.structs

    def _inline_single_use(self, entry: TrackedPointer, usage: VarUsage) -> Diagnostic:
        decl = entry.decl
        init_text = get_source_text(self.ledger.initializer(decl).range)
        warning = emit_diag(
            decl.name_loc, "redundant pointer variable with only one usage",
            (), Severity.WARNING, CHECK_NAME,
            fixits=[FixIt.removal(statement_range(decl, self.file))],
            highlight=decl.range)
        note = emit_diag(
            usage.decl_ref.range.begin, "pointer usage location", (),
            Severity.NOTE, CHECK_NAME,
            fixits=[FixIt.replacement(usage.decl_ref.range, f"({init_text})")],
            highlight=usage.decl_ref.range)
        warning.attached_notes.append(note)
        return warning

    def build_guard_rewrite(self, entry: TrackedPointer, guard: VarUsage,
                            init: VarUsage) -> list[Diagnostic]:
        decl = entry.decl
        var = init.inited_var
        cond = guard.guard_if.cond
        decl_text = get_source_text(decl.range)
        cond_text = get_source_text(cond.range)
        deref_text = get_source_text(init.deref_expr.range)
        hoisted = f"{var.declared_type} {var.name};"
        new_cond = f"{decl_text}; ({cond_text}) || (({var.name} = {deref_text}), false)"
        d1 = emit_diag(
            decl.name_loc, "redundant pointer variable declared", (),
            Severity.WARNING, CHECK_NAME,
            fixits=[FixIt.replacement(statement_range(decl, self.file, widen=False),
                                      hoisted)],
            highlight=decl.range)
        d2 = emit_diag(
            var.name_loc, "after swap, the initialisation is not needed at this location",
            (), Severity.NOTE, CHECK_NAME,
            fixits=[FixIt.removal(statement_range(var, self.file))],
            highlight=var.range)
        d1.attached_notes.append(d2)
        d3 = emit_diag(
            guard.guard_if.range.begin,
            "rewrite the conditional to C++17 initialise the pointer", (),
            Severity.WARNING, CHECK_NAME,
            fixits=[FixIt.replacement(cond.range, new_cond)],  # if's outer () stay
            highlight=cond.range)
        return [d1, d3]


def statement_range(decl: VarDecl, file: SourceFile, widen: bool = True) -> SourceRange:
    """The declaration statement's extent: declaration plus its trailing ';'.

    With `widen`, grows to the whole line when nothing else shares it, so a
    removal does not leave a blank line behind.
    """
    text = file.text
    end = decl.range.end.offset
    while end < len(text) and text[end] in " \t":
        end += 1
    if end >= len(text) or text[end] != ";":
        raise InternalError("declaration statement without trailing ';'")
    end += 1
    begin = decl.range.begin.offset
    if widen:
        line_start = text.rfind("\n", 0, begin) + 1
        line_end = text.find("\n", end)
        line_end = len(text) if line_end < 0 else line_end + 1
        if text[line_start:begin].strip() == "" and text[end:line_end].strip() == "":
            begin, end = line_start, line_end
    return SourceRange(file.location(begin), file.location(end))


def make_checks(names: list[str] | None, file: SourceFile, std: int,
                structs: dict | None = None) -> list[TidyCheck]:
    available = {CHECK_NAME: lambda: RedundantPointerCheck(file, std, structs)}
    if names is None:
        names = list(available)
    checks = []
    for name in names:
        if name not in available:
            raise KeyError(name)
        checks.append(available[name]())
    return checks
