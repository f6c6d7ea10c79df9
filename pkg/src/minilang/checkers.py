"""Checker registry and the builtin path-sensitive checkers.

MallocLite tracks new/delete allocation state and reports any use of a
released pointer symbol. InnerPointer records the raw buffer pointers handed
out by string c_str()/data(), hands them over to MallocLite's released set
when the string is invalidated, and relies on MallocLite's use detection.
DivZero reports divisions whose divisor is known to be zero on the path.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .frontend.astnodes import Node
from .source import SourceLocation, SourceRange
from .symexec.engine import CallInfo, CheckerContext
from .symexec.state import assume, ProgramState
from .symexec.values import (
    as_symbol, ConcreteInt, LocVal, MemRegion, NullLocVal, RangeSet, SVal,
    Symbol, SymbolicVal,
)

MALLOC_SLOT = "MallocLite.RegionState"
RAWPTR_SLOT = "InnerPointer.RawPtrMap"


# --- shared allocation state -------------------------------------------------

class RefStatus(enum.Enum):
    ALLOCATED = "allocated"
    RELEASED = "released"


class AllocationFamily(enum.Enum):
    HEAP = "heap"
    INNER_BUFFER = "inner buffer"


@dataclass(frozen=True)
class RefState:
    status: RefStatus
    family: AllocationFamily
    origin: Node | None = None  # may be None (destructor-triggered release)

    @staticmethod
    def allocated(family: AllocationFamily, origin: Node | None) -> "RefState":
        return RefState(RefStatus.ALLOCATED, family, origin)

    @staticmethod
    def released(family: AllocationFamily, origin: Node | None) -> "RefState":
        return RefState(RefStatus.RELEASED, family, origin)


def region_state_map(state: ProgramState) -> dict:
    return dict(state.slot(MALLOC_SLOT))


def raw_ptr_map(state: ProgramState) -> dict:
    return dict(state.slot(RAWPTR_SLOT))


def mark_released(state: ProgramState, sym: Symbol, origin: Node | None) -> ProgramState:
    """Hand one buffer symbol over to MallocLite in released state. The new
    state only joins the graph once the caller's addTransition commits it."""
    mapping = region_state_map(state)
    mapping[sym] = RefState.released(AllocationFamily.INNER_BUFFER, origin)
    return state.set_slot(MALLOC_SLOT, mapping)


def get_container_obj_region(state: ProgramState, sym: Symbol) -> MemRegion | None:
    """The region whose recorded buffer-pointer set contains `sym`."""
    for region, ptr_set in state.slot(RAWPTR_SLOT).items():
        if sym in ptr_set:
            return region
    return None


def is_symbol_tracked(state: ProgramState, sym: Symbol) -> bool:
    return get_container_obj_region(state, sym) is not None


# --- bug reports ---------------------------------------------------------------

@dataclass
class BugReport:
    bug_type: str
    category: str
    message: str
    check_name: str
    location: SourceLocation
    highlight: SourceRange | None = None
    visitors: list = field(default_factory=list)
    error_node: object = None  # set by the engine; always a sink

    def add_visitor(self, visitor) -> None:
        self.visitors.append(visitor)


# --- call descriptions ----------------------------------------------------------

@dataclass(frozen=True)
class CallDescription:
    name: str
    argument_count: int

    def matches(self, info: CallInfo) -> bool:
        return info.callee_name == self.name and len(info.args) == self.argument_count


CSTR_FN = CallDescription("c_str", 0)
DATA_FN = CallDescription("data", 0)

_INVALIDATING_DESCRIPTIONS = (
    CallDescription("append", 1), CallDescription("assign", 1),
    CallDescription("clear", 0), CallDescription("erase", 2),
    CallDescription("insert", 2), CallDescription("pop_back", 0),
    CallDescription("push_back", 1), CallDescription("replace", 3),
    CallDescription("reserve", 1), CallDescription("resize", 1),
    CallDescription("shrink_to_fit", 0), CallDescription("swap", 1),
)


def is_invalidating_member_function(info: CallInfo) -> bool:
    """True for the standard's invalidating string operations: the non-const
    methods (minus the element accessors), operator= / operator+=, and the
    destructor; false for c_str, data, size, empty, at, front, back."""
    if info.kind == "assign":
        return info.callee_name in ("operator=", "operator+=")
    if info.kind != "method":
        return False
    return any(d.matches(info) for d in _INVALIDATING_DESCRIPTIONS)


# --- the checkers ----------------------------------------------------------------

class Checker:
    descriptor: "CheckerDescriptor"
    state_slots: tuple[str, ...] = ()


class MallocLite(Checker):
    state_slots = (MALLOC_SLOT,)

    # allocation --------------------------------------------------------------

    def check_post_new(self, ctx: CheckerContext, expr: Node, sym: Symbol) -> None:
        mapping = region_state_map(ctx.state)
        mapping[sym] = RefState.allocated(AllocationFamily.HEAP, expr)
        ctx.add_transition(ctx.state.set_slot(MALLOC_SLOT, mapping))

    def check_pre_delete(self, ctx: CheckerContext, stmt: Node, val: SVal) -> None:
        if isinstance(val, NullLocVal):
            return  # deleting null is a no-op
        sym = as_symbol(val)
        if sym is None:
            if isinstance(val, LocVal):
                ctx.emit_report(BugReport(
                    "Bad free", "Memory error",
                    "argument is not memory allocated by new",
                    "unix.MallocLite", stmt.range.begin, stmt.range))
            return
        mapping = region_state_map(ctx.state)
        ref = mapping.get(sym)
        if ref is None:
            return  # unknown origin: stay quiet
        if ref.status is RefStatus.RELEASED:
            ctx.emit_report(BugReport(
                "Double free", "Memory error",
                "Attempt to free released memory",
                "unix.MallocLite", stmt.range.begin, stmt.range))
            return
        mapping[sym] = RefState.released(ref.family, stmt)
        ctx.add_transition(ctx.state.set_slot(MALLOC_SLOT, mapping))

    # use detection -------------------------------------------------------------

    def check_use(self, ctx: CheckerContext, node: Node, val: SVal, kind: str) -> None:
        sym = as_symbol(val)
        if sym is None:
            return
        ref = ctx.state.slot(MALLOC_SLOT).get(sym)
        if ref is not None and ref.status is RefStatus.RELEASED:
            self.handle_use_after_free(ctx, node.range, sym, ref)

    def check_post_dtor(self, ctx: CheckerContext, element, pending_ret: SVal) -> None:
        # A pointer already stashed for return dangles if a destructor that
        # ran after the return statement released its target.
        sym = as_symbol(pending_ret)
        if sym is None:
            return
        ref = ctx.state.slot(MALLOC_SLOT).get(sym)
        if ref is not None and ref.status is RefStatus.RELEASED:
            rng = SourceRange(element.loc, element.loc)
            self.handle_use_after_free(ctx, rng, sym, ref)

    def handle_use_after_free(self, ctx: CheckerContext, rng: SourceRange,
                              sym: Symbol, ref: RefState) -> None:
        from .reporting import InnerPointerBRVisitor, MallocBugVisitor

        inner = ref.family is AllocationFamily.INNER_BUFFER
        report = BugReport(
            "Use-after-free", "Memory error",
            "Inner pointer of container used after re/deallocation" if inner
            else "Use of memory after it is freed",
            "cplusplus.InnerPointer" if inner else "unix.MallocLite",
            rng.begin, rng)
        report.add_visitor(MallocBugVisitor(sym))
        if inner:
            report.add_visitor(InnerPointerBRVisitor(sym))
        ctx.emit_report(report)

    # hygiene ---------------------------------------------------------------------

    def check_dead_symbols(self, ctx: CheckerContext, dead: frozenset,
                           dead_regions: frozenset) -> None:
        mapping = region_state_map(ctx.state)
        trimmed = {s: r for s, r in mapping.items() if s not in dead}
        if len(trimmed) != len(mapping):
            ctx.add_transition(ctx.state.set_slot(MALLOC_SLOT, trimmed))


class InnerPointer(Checker):
    state_slots = (RAWPTR_SLOT,)

    def check_post_call(self, ctx: CheckerContext, info: CallInfo) -> None:
        state = ctx.state
        if info.kind == "method" and info.receiver_region is not None:
            if CSTR_FN.matches(info) or DATA_FN.matches(info):
                sym = as_symbol(info.ret_val)
                if sym is None:
                    return  # result not symbol-convertible
                mapping = raw_ptr_map(state)
                ptr_set = mapping.get(info.receiver_region, frozenset())
                mapping[info.receiver_region] = ptr_set | {sym}
                ctx.add_transition(state.set_slot(RAWPTR_SLOT, mapping))
                return
            if is_invalidating_member_function(info):
                state = self.mark_ptr_symbols_released(
                    state, info.receiver_region, info.node)
        elif info.kind == "assign" and info.receiver_region is not None:
            if is_invalidating_member_function(info):
                state = self.mark_ptr_symbols_released(
                    state, info.receiver_region, info.node)
        state = self.check_function_arguments(state, info)
        if state is not ctx.state:
            ctx.add_transition(state)

    @staticmethod
    def mark_ptr_symbols_released(state: ProgramState, region: MemRegion,
                                  origin: Node | None) -> ProgramState:
        mapping = raw_ptr_map(state)
        ptr_set = mapping.pop(region, None)
        if ptr_set is None:
            return state  # nobody asked for a buffer pointer: nothing to do
        for sym in ptr_set:
            state = mark_released(state, sym, origin)
        return state.set_slot(RAWPTR_SLOT, mapping)

    def check_function_arguments(self, state: ProgramState,
                                 info: CallInfo) -> ProgramState:
        # Unknown-body library calls only: externs, plus the builtin string
        # methods (swap takes string&). Inlined user functions are simulated.
        if not (info.is_extern or info.kind == "method"):
            return state
        for param_type, _, arg_region in info.args:
            if param_type is None or not param_type.is_reference \
                    or param_type.is_const:
                continue
            if arg_region is None:
                continue
            state = self.mark_ptr_symbols_released(state, arg_region, info.node)
        return state

    def check_implicit_dtor(self, ctx: CheckerContext, element,
                            region: MemRegion) -> None:
        state = self.mark_ptr_symbols_released(ctx.state, region, None)
        if state is not ctx.state:
            ctx.add_transition(state)

    def check_dead_symbols(self, ctx: CheckerContext, dead: frozenset,
                           dead_regions: frozenset) -> None:
        mapping = raw_ptr_map(ctx.state)
        changed = False
        for region in list(mapping):
            ptr_set = mapping[region]
            trimmed = frozenset(s for s in ptr_set if s not in dead)
            if region in dead_regions or not trimmed:
                del mapping[region]
                changed = True
            elif trimmed != ptr_set:
                mapping[region] = trimmed
                changed = True
        if changed:
            ctx.add_transition(ctx.state.set_slot(RAWPTR_SLOT, mapping))


class DivZero(Checker):
    def check_div(self, ctx: CheckerContext, expr: Node, divisor: SVal) -> None:
        zero = isinstance(divisor, ConcreteInt) and divisor.value == 0
        if isinstance(divisor, SymbolicVal):
            sym = as_symbol(divisor)
            if sym is not None and ctx.state.range_of(sym) == RangeSet.singleton(0):
                zero = True
        if zero:
            loc = getattr(expr, "op_loc", expr.range.begin)
            ctx.emit_report(BugReport(
                "Division by zero", "Logic error", "Division by zero",
                "core.DivideZero", loc, expr.range))
            return
        refined = assume(ctx.state, divisor, True)  # keep: divisor != 0
        if refined is not None and refined is not ctx.state:
            ctx.add_transition(refined)


# --- registry ----------------------------------------------------------------------

@dataclass(frozen=True)
class CheckerDescriptor:
    full_name: str  # "package.Name"
    help: str
    dependencies: tuple[str, ...] = ()
    enabled_for: object = staticmethod(lambda unit: True)


_DESCRIPTORS = {
    "core.DivideZero": CheckerDescriptor(
        "core.DivideZero", "Check for division by zero"),
    "cplusplus.InnerPointer": CheckerDescriptor(
        "cplusplus.InnerPointer",
        "Check for inner pointers of C++ containers used after re/deallocation",
        dependencies=("unix.MallocLite",)),
    "unix.MallocLite": CheckerDescriptor(
        "unix.MallocLite",
        "Check for double release and use of memory after it is released"),
}

_FACTORIES = {
    "core.DivideZero": DivZero,
    "cplusplus.InnerPointer": InnerPointer,
    "unix.MallocLite": MallocLite,
}

DEFAULT_CHECKERS = tuple(sorted(_DESCRIPTORS))


class UnknownCheckerError(KeyError):
    pass


def registry_list() -> str:
    """The --analyzer-checker-help text."""
    lines = [
        "OVERVIEW: MiniLang Static Analyzer Checkers List",
        "",
        "USAGE: --checker <CHECKER or PACKAGE,...>",
        "",
        "CHECKERS:",
    ]
    width = max(len(name) for name in _DESCRIPTORS) + 4
    for name in sorted(_DESCRIPTORS):
        lines.append(f"  {name.ljust(width)}{_DESCRIPTORS[name].help}")
    return "\n".join(lines)


def resolve_enabled(names) -> list[str]:
    """Requested checkers plus their dependency closure, sorted by name."""
    enabled: set[str] = set()

    def add(name: str):
        if name not in _DESCRIPTORS:
            raise UnknownCheckerError(name)
        if name in enabled:
            return
        enabled.add(name)
        for dep in _DESCRIPTORS[name].dependencies:
            add(dep)

    for name in names:
        add(name)
    return sorted(enabled)


def make_checkers(names=None) -> list[Checker]:
    enabled = resolve_enabled(names if names is not None else DEFAULT_CHECKERS)
    checkers = []
    for name in enabled:
        checker = _FACTORIES[name]()
        checker.descriptor = _DESCRIPTORS[name]
        checkers.append(checker)
    return checkers
