"""Immutable program states and the constraint (assume) interface."""

from __future__ import annotations

from typing import Mapping

from ..source import InternalError
from .values import (
    ConcreteInt, LocVal, MemRegion, NullLocVal, RangeSet, SVal, Symbol,
    SymbolicVal, SymExpr, linear_form, UndefinedVal, UnknownVal, val_symbols,
)

_FLIP = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}
_MIRROR = {"==": "==", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


class ProgramState:
    """Environment, store, range constraints and checker data, as one
    immutable value; every mutator returns a fresh state."""

    __slots__ = ("environment", "store", "constraints", "gdm", "ret_vals",
                 "loop_counts", "_hash")

    def __init__(self, environment=None, store=None, constraints=None,
                 gdm=None, ret_vals=None, loop_counts=None):
        self.environment: dict[int, SVal] = environment or {}
        self.store: dict[MemRegion, SVal] = store or {}
        self.constraints: dict[Symbol, RangeSet] = constraints or {}
        self.gdm: dict[str, Mapping] = gdm or {}
        self.ret_vals: dict[int, SVal] = ret_vals or {}
        self.loop_counts: dict[tuple, int] = loop_counts or {}
        self._hash = None

    def _replace(self, **kw) -> "ProgramState":
        fields = dict(environment=self.environment, store=self.store,
                      constraints=self.constraints, gdm=self.gdm,
                      ret_vals=self.ret_vals, loop_counts=self.loop_counts)
        fields.update(kw)
        return ProgramState(**fields)

    # --- store ---

    def bind(self, region: MemRegion, val: SVal) -> "ProgramState":
        store = dict(self.store)
        store[region] = val
        return self._replace(store=store)

    def bind_many(self, pairs) -> "ProgramState":
        store = dict(self.store)
        store.update(pairs)
        return self._replace(store=store)

    def unbind_where(self, predicate) -> "ProgramState":
        store = {r: v for r, v in self.store.items() if not predicate(r)}
        return self._replace(store=store)

    def lookup(self, region: MemRegion) -> SVal | None:
        return self.store.get(region)

    # --- environment (per-statement scratch) ---

    def with_env(self, node_id: int, val: SVal) -> "ProgramState":
        env = dict(self.environment)
        env[node_id] = val
        return self._replace(environment=env)

    def clear_env(self) -> "ProgramState":
        if not self.environment:
            return self
        return self._replace(environment={})

    # --- constraints ---

    def range_of(self, symbol: Symbol) -> RangeSet:
        return self.constraints.get(symbol, RangeSet.full())

    def constrain(self, symbol: Symbol, rng: RangeSet) -> "ProgramState":
        if rng.is_empty:
            raise InternalError("empty range set must not be stored")
        constraints = dict(self.constraints)
        if rng.is_full:
            constraints.pop(symbol, None)  # canonical absence
        else:
            constraints[symbol] = rng
        return self._replace(constraints=constraints)

    def drop_constraints(self, symbols) -> "ProgramState":
        constraints = {s: r for s, r in self.constraints.items() if s not in symbols}
        return self._replace(constraints=constraints)

    # --- checker slots (generic data map) ---

    def slot(self, key: str) -> Mapping:
        return self.gdm.get(key, {})

    def set_slot(self, key: str, mapping: Mapping) -> "ProgramState":
        gdm = dict(self.gdm)
        if mapping:
            gdm[key] = dict(mapping)
        else:
            gdm.pop(key, None)
        return self._replace(gdm=gdm)

    # --- per-frame bits ---

    def set_ret(self, frame: int, val: SVal) -> "ProgramState":
        ret_vals = dict(self.ret_vals)
        ret_vals[frame] = val
        return self._replace(ret_vals=ret_vals)

    def ret(self, frame: int) -> SVal | None:
        return self.ret_vals.get(frame)

    def drop_frame(self, frame: int) -> "ProgramState":
        ret_vals = {f: v for f, v in self.ret_vals.items() if f != frame}
        loop_counts = {e: c for e, c in self.loop_counts.items() if e[2] != frame}
        return self._replace(ret_vals=ret_vals, loop_counts=loop_counts)

    def bump_loop(self, edge: tuple) -> "ProgramState":
        loop_counts = dict(self.loop_counts)
        loop_counts[edge] = loop_counts.get(edge, 0) + 1
        return self._replace(loop_counts=loop_counts)

    def loop_count(self, edge: tuple) -> int:
        return self.loop_counts.get(edge, 0)

    # --- identity ---

    def _key(self):
        return (
            frozenset(self.environment.items()),
            frozenset(self.store.items()),
            frozenset(self.constraints.items()),
            frozenset((k, frozenset(
                (ik, frozenset(iv) if isinstance(iv, (set, frozenset)) else iv)
                for ik, iv in v.items())) for k, v in self.gdm.items()),
            frozenset(self.ret_vals.items()),
            frozenset(self.loop_counts.items()),
        )

    def __eq__(self, other):
        if not isinstance(other, ProgramState):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def live_symbols(self) -> frozenset[Symbol]:
        """Symbols reachable from store and pending returns (gdm references
        are weak: checkers purge their own entries on dead-symbol sweeps)."""
        out: set[Symbol] = set()
        for val in self.store.values():
            out |= val_symbols(val)
        for val in self.ret_vals.values():
            out |= val_symbols(val)
        return frozenset(out)

    def gdm_symbols(self) -> frozenset[Symbol]:
        out: set[Symbol] = set()
        for mapping in self.gdm.values():
            for k, v in mapping.items():
                if isinstance(k, Symbol):
                    out.add(k)
                if isinstance(v, (set, frozenset)):
                    out |= {s for s in v if isinstance(s, Symbol)}
        return frozenset(out)


INFEASIBLE = None  # assume() returns None for an infeasible refinement


def assume(state: ProgramState, val: SVal, truth: bool) -> ProgramState | None:
    """Refine `state` by `val` being true/false; None when infeasible."""
    if isinstance(val, ConcreteInt):
        return state if bool(val.value) == truth else INFEASIBLE
    if isinstance(val, SymbolicVal):
        return assume_relation(state, val.expr, "!=", 0, truth)
    if isinstance(val, LocVal):
        return state if truth else INFEASIBLE  # a live region is never null
    if isinstance(val, NullLocVal):
        return INFEASIBLE if truth else state
    if isinstance(val, (UnknownVal, UndefinedVal)):
        return state
    raise InternalError(f"assume on {val!r}")


def assume_relation(state: ProgramState, expr: SymExpr, op: str, const: int,
                    truth: bool) -> ProgramState | None:
    """Refine by `expr op const` (or its negation). Supports the linear
    single-symbol forms sym ⋈ c and (sym + k) ⋈ c; anything else is kept
    unconstrained (both outcomes stay feasible)."""
    if not truth:
        op = _FLIP[op]
    form = linear_form(expr)
    if form is None:
        return state
    sym, a, b = form
    if a != 1:
        return state
    rng = state.range_of(sym).intersect(RangeSet.relation(op, const - b))
    if rng.is_empty:
        return INFEASIBLE
    return state.constrain(sym, rng)


def assume_comparison(state: ProgramState, lhs: SVal, op: str, rhs: SVal,
                      truth: bool) -> ProgramState | None:
    """Refine by `lhs op rhs`, covering the value shapes the engine produces:
    concrete/concrete decides, symbolic/concrete refines a range, location
    null tests decide, everything else stays unconstrained."""
    if isinstance(lhs, ConcreteInt) and isinstance(rhs, ConcreteInt):
        return state if _eval_cmp(lhs.value, op, rhs.value) == truth else INFEASIBLE
    if isinstance(lhs, SymbolicVal) and isinstance(rhs, ConcreteInt):
        return assume_relation(state, lhs.expr, op, rhs.value, truth)
    if isinstance(lhs, ConcreteInt) and isinstance(rhs, SymbolicVal):
        return assume_relation(state, rhs.expr, _MIRROR[op], lhs.value, truth)
    if op in ("==", "!="):
        unequal = (op == "!=") == truth  # the refinement demands lhs != rhs
        lhs_null = isinstance(lhs, NullLocVal) or (
            isinstance(lhs, ConcreteInt) and lhs.value == 0)
        rhs_null = isinstance(rhs, NullLocVal) or (
            isinstance(rhs, ConcreteInt) and rhs.value == 0)
        if isinstance(lhs, LocVal) and rhs_null:
            return state if unequal else INFEASIBLE
        if isinstance(rhs, LocVal) and lhs_null:
            return state if unequal else INFEASIBLE
        if isinstance(lhs, NullLocVal) and rhs_null:
            return INFEASIBLE if unequal else state
        if isinstance(rhs, NullLocVal) and lhs_null:
            return INFEASIBLE if unequal else state
        if isinstance(lhs, LocVal) and isinstance(rhs, LocVal):
            same = lhs.region == rhs.region
            return INFEASIBLE if same == unequal else state
    return state


def _eval_cmp(a: int, op: str, b: int) -> bool:
    return {
        "==": a == b, "!=": a != b, "<": a < b,
        "<=": a <= b, ">": a > b, ">=": a >= b,
    }[op]
