"""The path-sensitive symbolic execution engine.

Exploration is worklist-driven (FIFO) over per-function CFGs. Exploded-graph
nodes are created at block edges, after each statement element, after calls
that change checker state, around inlined calls, and after implicit
destructor elements; exact (point, state) duplicates are merged. Loop back
edges are taken at most `unroll` times per frame and each top-level function
gets `node_budget` nodes before its remaining paths are abandoned.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from ..cfg import (
    Branch, build_cfg, Cfg, ImplicitDtorElement, Jump, Ret, StmtElement,
)
from ..frontend.astnodes import (
    AddressOf, Assign, BinaryOp, BOOL, BoolLit, BreakStmt, Call, ContinueStmt,
    DeclRef, DeleteStmt, ExprStmt, ExternDecl, FieldAccess, FunctionDecl,
    IntLit, MethodCall, NewExpr, Node, Paren, ParamDecl, ReturnStmt,
    StringLit, TranslationUnit, TypeRef, UnaryOp, VarDecl, strip_parens,
)
from ..source import InternalError, SourceFile, SourceLocation
from .state import assume, assume_comparison, ProgramState
from .values import (
    as_symbol, ConcreteInt, FieldRegion, LocVal, MemRegion, NullLocVal,
    RangeSet, region_within, SVal, sym_add, sym_mul, sym_val, Symbol,
    SymbolicVal, UNDEFINED, UndefinedVal, UNKNOWN, VarRegion,
)

_CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")


def _c_div(a: int, b: int) -> int:
    """Integer division truncating toward zero."""
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


@dataclass
class AnalysisConfig:
    unroll: int = 4
    node_budget: int = 50_000
    inline_depth: int = 5


# --- program points ----------------------------------------------------------

@dataclass(frozen=True)
class BlockEdgePoint:
    src: int
    dst: int
    frame: int

    def describe(self) -> str:
        return f"BlockEdge (B{self.src} -> B{self.dst})" if self.src >= 0 \
            else f"BlockEdge (entry -> B{self.dst})"


@dataclass(frozen=True)
class PreStmtPoint:
    node_id: int
    frame: int
    node: Node = field(compare=False, hash=False)

    def describe(self) -> str:
        return f"PreStmt {self.node.kind}"


@dataclass(frozen=True)
class PostStmtPoint:
    node_id: int
    block: int  # -1 for sub-expression transitions (not steppable)
    index: int
    frame: int
    node: Node = field(compare=False, hash=False)

    def describe(self) -> str:
        return f"PostStmt {self.node.kind}"


@dataclass(frozen=True)
class CallEnterPoint:
    call_id: int
    frame: int  # the callee frame

    def describe(self) -> str:
        return "CallEnter"


@dataclass(frozen=True)
class CallExitPoint:
    call_id: int
    frame: int  # the caller frame resumed into

    def describe(self) -> str:
        return "CallExit"


@dataclass(frozen=True)
class PostImplicitCallPoint:
    var_id: int
    block: int
    index: int
    frame: int
    var: Node = field(compare=False, hash=False)
    loc: SourceLocation = field(compare=False, hash=False)

    def describe(self) -> str:
        return f"PostImplicitCall ~{self.var.name}"


# --- exploded graph ----------------------------------------------------------

class ExplodedNode:
    __slots__ = ("point", "state", "preds", "succs", "is_sink", "seq")

    def __init__(self, point, state: ProgramState, seq: int):
        self.point = point
        self.state = state
        self.preds: list[ExplodedNode] = []
        self.succs: list[ExplodedNode] = []
        self.is_sink = False
        self.seq = seq

    def first_pred(self) -> "ExplodedNode | None":
        return self.preds[0] if self.preds else None

    def __repr__(self):
        return f"<node {self.seq} {self.point.describe()}>"


class BudgetExhausted(Exception):
    """Raised when a new node would push the graph past the node budget."""


class ExplodedGraph:
    def __init__(self, budget: int | None = None):
        self.nodes: list[ExplodedNode] = []
        self.roots: list[ExplodedNode] = []
        self.budget = budget
        self._index: dict = {}

    def add(self, point, state: ProgramState,
            pred: ExplodedNode | None) -> tuple[ExplodedNode, bool]:
        key = (point, state)
        node = self._index.get(key)
        is_new = node is None
        if is_new:
            if self.budget is not None and len(self.nodes) >= self.budget:
                raise BudgetExhausted()
            node = ExplodedNode(point, state, len(self.nodes))
            self.nodes.append(node)
            self._index[key] = node
        if pred is None:
            if node not in self.roots:
                self.roots.append(node)
        elif node not in pred.succs:
            pred.succs.append(node)
            node.preds.append(pred)
        return node, is_new

    def leaves(self) -> list[ExplodedNode]:
        return [n for n in self.nodes if not n.succs and not n.is_sink]

    def __len__(self):
        return len(self.nodes)


@dataclass
class CallInfo:
    """What the post-call checker dispatch sees about one evaluated call."""

    node: Node  # Call, MethodCall or Assign
    callee_name: str
    kind: str  # "function" | "method" | "assign"
    receiver_region: MemRegion | None
    ret_val: SVal
    args: list[tuple[TypeRef | None, SVal | None, MemRegion | None]]
    decl: Node | None = None
    method: object | None = None
    is_extern: bool = False


@dataclass
class AnalysisResult:
    graphs: dict[str, ExplodedGraph] = field(default_factory=dict)
    reports: list = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


class CheckerContext:
    """Handed to each checker callback; holds the pending state transition."""

    def __init__(self, engine: "Engine", pred: ExplodedNode | None,
                 state: ProgramState, frame: int):
        self._engine = engine
        self.pred = pred
        self.frame = frame
        self._state = state
        self._pending: ProgramState | None = None
        self.report = None

    @property
    def state(self) -> ProgramState:
        return self._pending if self._pending is not None else self._state

    def add_transition(self, new_state: ProgramState) -> None:
        if self._pending is not None:
            raise InternalError("addTransition called twice in one callback")
        self._pending = new_state

    def conjure(self, value_type: TypeRef, hint: str = "") -> SVal:
        return self._engine.conjure(value_type, hint)

    def emit_report(self, report) -> None:
        self.report = report


@dataclass
class _Frame:
    id: int
    fn: FunctionDecl
    depth: int
    aliases: dict[int, MemRegion] = field(default_factory=dict)  # param id -> region


class Engine:
    def __init__(self, unit: TranslationUnit, file: SourceFile,
                 config: AnalysisConfig | None = None, checkers: list | None = None):
        self.unit = unit
        self.file = file
        self.config = config or AnalysisConfig()
        self.checkers = checkers or []
        self.result = AnalysisResult()
        self._cfgs: dict[int, Cfg] = {}
        self._inlined: set[int] = set()
        self._frames: dict[int, _Frame] = {}
        self._frame_counter = 0
        self._conjure_counter = 0
        self._graph: ExplodedGraph | None = None
        slots = set()
        for checker in self.checkers:
            for key in getattr(checker, "state_slots", ()):
                if key in slots:
                    raise InternalError(f"duplicate checker state slot {key!r}")
                slots.add(key)

    # --- plumbing ---

    def cfg_of(self, fn: FunctionDecl) -> Cfg:
        cfg = self._cfgs.get(fn.node_id)
        if cfg is None:
            cfg = build_cfg(fn)
            self._cfgs[fn.node_id] = cfg
            for note in cfg.notes:
                self.result.notes.append(note)
        return cfg

    def conjure(self, value_type: TypeRef, hint: str = "") -> SVal:
        self._conjure_counter += 1
        name = hint or f"c{self._conjure_counter}"
        sym = Symbol(self._conjure_counter, name, hint or "conjured", value_type)
        return sym_val(sym)

    def new_frame(self, fn: FunctionDecl, depth: int) -> _Frame:
        self._frame_counter += 1
        frame = _Frame(self._frame_counter, fn, depth)
        self._frames[frame.id] = frame
        return frame

    def frame(self, fid: int) -> _Frame:
        return self._frames[fid]

    def note(self, text: str):
        if text not in self.result.notes:
            self.result.notes.append(text)

    # --- top level ---

    def run(self) -> AnalysisResult:
        """Analyze every function not already inlined during an earlier
        top-level analysis, in source order."""
        for decl in self.unit.decls:
            if isinstance(decl, FunctionDecl) and decl.node_id not in self._inlined:
                self.analyze(decl)
        return self.result

    def analyze(self, fn: FunctionDecl) -> ExplodedGraph:
        self._conjure_counter = 0
        graph = ExplodedGraph(budget=self.config.node_budget)
        self._graph = graph
        frame = self.new_frame(fn, 0)
        state = ProgramState()
        for param in fn.params:
            sym = self.conjure_param(param)
            state = state.bind(VarRegion(param, frame.id), sym)
            state = self._constrain_fresh(state, sym, param.declared_type)
        cfg = self.cfg_of(fn)
        root, _ = graph.add(BlockEdgePoint(-1, cfg.entry, frame.id), state, None)
        work = deque([root])
        while work:
            try:
                work.extend(self.step(work.popleft()))
            except BudgetExhausted:
                self.note(f"{fn.name}: note: node budget exhausted, "
                          "paths abandoned")
        self.result.graphs[fn.name] = graph
        return graph

    def conjure_param(self, param: ParamDecl) -> SVal:
        self._conjure_counter += 1
        sym = Symbol(self._conjure_counter, param.name, f"param {param.name}",
                     param.declared_type.value_type())
        return sym_val(sym)

    def _constrain_fresh(self, state: ProgramState, val: SVal,
                         declared: TypeRef) -> ProgramState:
        sym = as_symbol(val)
        if sym is not None and declared.value_type() == BOOL:
            return state.constrain(sym, RangeSet.of((0, 1)))
        return state

    # --- stepping ---

    def step(self, node: ExplodedNode) -> list[ExplodedNode]:
        point = node.point
        if isinstance(point, BlockEdgePoint):
            return self.exec_block_from(node, point.frame, point.dst, 0)
        if isinstance(point, (PostStmtPoint, PostImplicitCallPoint)):
            if point.block < 0:
                return []
            return self.exec_block_from(node, point.frame, point.block, point.index + 1)
        return []

    def exec_block_from(self, via: ExplodedNode, fid: int, block_id: int,
                        index: int) -> list[ExplodedNode]:
        frame = self.frame(fid)
        cfg = self.cfg_of(frame.fn)
        state = via.state
        block = cfg.block(block_id)
        while True:
            if index == len(block.elements):
                return self.exec_terminator(via, state, frame, block)
            element = block.elements[index]
            if isinstance(element, StmtElement):
                out: list[ExplodedNode] = []
                for st, v in self.exec_stmt(via, state, frame, element.stmt):
                    st = self.reap(st.clear_env(), frame)
                    point = PostStmtPoint(element.stmt.node_id, block_id, index,
                                          fid, element.stmt)
                    node, is_new = self._graph.add(point, st, v)
                    if is_new:
                        out.append(node)
                return out
            advanced = self.exec_dtor(via, state, frame, element, block_id, index)
            if advanced is None:
                return []  # the path sank at this destructor
            state, via, made_node = advanced
            if made_node is not None:
                return [made_node]
            index += 1

    def exec_terminator(self, via: ExplodedNode, state: ProgramState,
                        frame: _Frame, block) -> list[ExplodedNode]:
        term = block.terminator
        if term is None:
            return []  # function exit: a leaf of this frame's exploration
        if isinstance(term, (Jump, Ret)):
            node = self.make_block_edge(via, state, frame, block.id, term.target)
            return [node] if node is not None else []
        assert isinstance(term, Branch)
        out = []
        for truth, st, v in self.branch_split(via, state, frame, term.cond):
            target = term.true_target if truth else term.false_target
            node = self.make_block_edge(v, st, frame, block.id, target)
            if node is not None:
                out.append(node)
        return out

    def make_block_edge(self, via: ExplodedNode, state: ProgramState,
                        frame: _Frame, src: int, dst: int) -> ExplodedNode | None:
        state = self.reap(state.clear_env(), frame)
        if dst <= src:  # back edge under reverse post-order numbering
            edge = (src, dst, frame.id)
            if state.loop_count(edge) >= self.config.unroll:
                self.note(f"{frame.fn.name}: note: loop unroll limit reached, "
                          "path abandoned")
                return None
            state = state.bump_loop(edge)
        node, is_new = self._graph.add(BlockEdgePoint(src, dst, frame.id), state, via)
        return node if is_new else None

    def branch_split(self, via: ExplodedNode, state: ProgramState, frame: _Frame,
                     cond: Node) -> list[tuple[bool, ProgramState, ExplodedNode]]:
        """Evaluate a branch condition once; return the feasible refinements
        for both truth values."""
        cond = strip_parens(cond)
        if isinstance(cond, UnaryOp) and cond.op == "!":
            return [(not truth, st, v)
                    for truth, st, v in self.branch_split(via, state, frame, cond.operand)]
        out = []
        if isinstance(cond, BinaryOp) and cond.op in _CMP_OPS:
            for lv, st1, v1 in self.eval(via, state, frame, cond.lhs):
                for rv, st2, v2 in self.eval(v1, st1, frame, cond.rhs):
                    for truth in (True, False):
                        st3 = assume_comparison(st2, lv, cond.op, rv, truth)
                        if st3 is not None:
                            out.append((truth, st3, v2))
            return out
        for val, st, v in self.eval(via, state, frame, cond):
            for truth in (True, False):
                st2 = assume(st, val, truth)
                if st2 is not None:
                    out.append((truth, st2, v))
        return out

    # --- statements ---

    def exec_stmt(self, via: ExplodedNode, state: ProgramState, frame: _Frame,
                  stmt: Node) -> list[tuple[ProgramState, ExplodedNode]]:
        if isinstance(stmt, VarDecl):
            return self.exec_var_decl(via, state, frame, stmt)
        if isinstance(stmt, ExprStmt):
            return [(st, v) for _, st, v in self.eval(via, state, frame, stmt.expr)]
        if isinstance(stmt, ReturnStmt):
            return self.exec_return(via, state, frame, stmt)
        if isinstance(stmt, DeleteStmt):
            return self.exec_delete(via, state, frame, stmt)
        if isinstance(stmt, (BreakStmt, ContinueStmt)):
            return [(state, via)]
        raise InternalError(f"statement kind {stmt.kind} reached the engine")

    def exec_var_decl(self, via, state, frame, decl: VarDecl):
        region = VarRegion(decl, frame.id)
        declared = decl.declared_type
        if decl.init is None:
            if declared.base == "string" and declared.indirections == 0:
                # default construction: the string gets a fresh value identity
                state = state.bind(region, self.conjure(declared.value_type(),
                                                        f"{decl.name}_str"))
            return [(state, via)]
        out = []
        for val, st, v in self.eval(via, state, frame, decl.init):
            if isinstance(val, UndefinedVal):
                val = UNKNOWN
            st = st.bind(region, val)
            if self._is_struct_value(declared):
                st = self._copy_struct(st, frame, region, decl.init)
            out.append((st, v))
        return out

    def _is_struct_value(self, t: TypeRef | None) -> bool:
        from ..frontend.astnodes import BUILTIN_BASES
        return (t is not None and t.indirections == 0
                and t.base not in BUILTIN_BASES)

    def _copy_struct(self, state: ProgramState, frame: _Frame,
                     dst: MemRegion, src_expr: Node) -> ProgramState:
        """Value copy of a struct: mirror every known field binding."""
        src = self.lvalue_region(state, frame, src_expr)
        if src is None:
            return state
        state = state.unbind_where(
            lambda r: region_within(r, dst) and r != dst)
        rebinds = {}
        for region, val in state.store.items():
            if region_within(region, src) and region != src:
                rebinds[_remap_region(region, src, dst)] = val
        src_binding = state.lookup(src)
        if src_binding is not None:
            rebinds[dst] = src_binding
        return state.bind_many(rebinds) if rebinds else state

    def exec_return(self, via, state, frame, stmt: ReturnStmt):
        if stmt.value is None:
            return [(state, via)]
        out = []
        for val, st, v in self.eval(via, state, frame, stmt.value):
            st, v, sank = self.dispatch_use(v, st, frame, stmt, val, "return")
            if sank:
                continue
            out.append((st.set_ret(frame.id, val), v))
        return out

    def exec_delete(self, via, state, frame, stmt: DeleteStmt):
        out = []
        for val, st, v in self.eval(via, state, frame, stmt.operand):
            st, v, sank = self.dispatch(
                "check_pre_delete", v, st, frame,
                lambda: PreStmtPoint(stmt.node_id, frame.id, stmt),
                stmt, val, make_node=False)
            if sank:
                continue
            out.append((st, v))
        return out

    def exec_dtor(self, via: ExplodedNode, state: ProgramState, frame: _Frame,
                  element: ImplicitDtorElement, block_id: int, index: int):
        """Run one implicit string destructor. Returns (state, via, node|None),
        or None when the path sank."""
        region = VarRegion(element.var, frame.id)
        point = PostImplicitCallPoint(element.var.node_id, block_id, index,
                                      frame.id, element.var, element.loc)
        made = None
        new_state, via2, sank = self.dispatch(
            "check_implicit_dtor", via, state, frame, lambda: point,
            element, region, make_node=True)
        if sank:
            return None
        if via2 is not via:
            made = via2
        # a released return value "manifests" here, once the dtor has run
        pending = new_state.ret(frame.id)
        if pending is not None:
            st3, via3, sank = self.dispatch(
                "check_post_dtor", via2, new_state, frame, lambda: point,
                element, pending, make_node=False)
            if sank:
                return None
            new_state = st3
        return new_state, via2, made

    # --- checker dispatch ---

    def dispatch(self, hook: str, via: ExplodedNode, state: ProgramState,
                 frame: _Frame, make_point, *args, make_node: bool):
        """Run one callback on every checker, threading the state. Returns
        (state, via, sank)."""
        original = state
        for checker in self.checkers:
            fn = getattr(checker, hook, None)
            if fn is None:
                continue
            ctx = CheckerContext(self, via, state, frame.id)
            fn(ctx, *args)
            if ctx.report is not None:
                err_state = ctx.state
                node, _ = self._graph.add(make_point(), err_state, via)
                node.is_sink = True
                ctx.report.error_node = node
                self.result.reports.append(ctx.report)
                return state, via, True
            if ctx._pending is not None:
                state = ctx._pending
        if make_node and state is not original and state != original:
            node, _ = self._graph.add(make_point(), state, via)
            via = node
        return state, via, False

    def dispatch_use(self, via, state, frame, node: Node, val: SVal, kind: str):
        return self.dispatch(
            "check_use", via, state, frame,
            lambda: PreStmtPoint(node.node_id, frame.id, node),
            node, val, kind, make_node=False)

    def reap(self, state: ProgramState, frame: _Frame) -> ProgramState:
        return self._reap_with(state, frame, dead_regions=frozenset())

    def _reap_with(self, state: ProgramState, frame: _Frame,
                   dead_regions: frozenset) -> ProgramState:
        live = state.live_symbols()
        dead = (state.gdm_symbols() - live) | {
            s for s in state.constraints if s not in live}
        if dead or dead_regions:
            for checker in self.checkers:
                fn = getattr(checker, "check_dead_symbols", None)
                if fn is None:
                    continue
                ctx = CheckerContext(self, None, state, frame.id)
                fn(ctx, frozenset(dead), dead_regions)
                if ctx._pending is not None:
                    state = ctx._pending
        referenced = live | state.gdm_symbols()
        stale = [s for s in state.constraints if s not in referenced]
        if stale:
            state = state.drop_constraints(stale)
        return state

    # --- expression evaluation ---
    # eval() returns forked outcomes: a list of (value, state, via-node).

    def eval(self, via, state, frame, expr: Node):
        out = []
        for val, st, v in self._eval(via, state, frame, expr):
            out.append((val, st.with_env(expr.node_id, val), v))
        return out

    def _eval(self, via, state, frame, expr: Node):
        if isinstance(expr, IntLit):
            return [(ConcreteInt(expr.value), state, via)]
        if isinstance(expr, BoolLit):
            return [(ConcreteInt(1 if expr.value else 0), state, via)]
        if isinstance(expr, StringLit):
            return [(UNKNOWN, state, via)]
        if isinstance(expr, Paren):
            return self.eval(via, state, frame, expr.inner)
        if isinstance(expr, DeclRef):
            region = self.decl_region(expr, frame)
            val, state = self.load(state, region, frame)
            return [(val, state, via)]
        if isinstance(expr, UnaryOp):
            return self.eval_unary(via, state, frame, expr)
        if isinstance(expr, AddressOf):
            region = self.lvalue_region(state, frame, expr.operand)
            val = LocVal(region) if region is not None else UNKNOWN
            return [(val, state, via)]
        if isinstance(expr, BinaryOp):
            return self.eval_binary(via, state, frame, expr)
        if isinstance(expr, Assign):
            return self.eval_assign(via, state, frame, expr)
        if isinstance(expr, FieldAccess):
            return self.eval_field(via, state, frame, expr)
        if isinstance(expr, NewExpr):
            return self.eval_new(via, state, frame, expr)
        if isinstance(expr, MethodCall):
            return self.eval_method_call(via, state, frame, expr)
        if isinstance(expr, Call):
            return self.eval_call(via, state, frame, expr)
        raise InternalError(f"expression kind {expr.kind} reached the engine")

    def decl_region(self, ref: DeclRef, frame: _Frame) -> MemRegion:
        decl = ref.decl
        if isinstance(decl, ParamDecl):
            alias = frame.aliases.get(decl.node_id)
            if alias is not None:
                return alias
        return VarRegion(decl, frame.id)

    def load(self, state: ProgramState, region: MemRegion,
             frame: _Frame) -> tuple[SVal, ProgramState]:
        val = state.lookup(region)
        if val is not None:
            return val, state
        if isinstance(region, FieldRegion):
            parent_val = state.lookup(region.parent)
            if isinstance(parent_val, SymbolicVal):
                # unknown struct contents: conjure once and remember
                fresh = self.conjure(region.field_type.value_type()
                                     if region.field_type else TypeRef("int"))
                return fresh, state.bind(region, fresh)
        return UNDEFINED, state

    def lvalue_region(self, state: ProgramState, frame: _Frame,
                      expr: Node) -> MemRegion | None:
        expr = strip_parens(expr)
        if isinstance(expr, DeclRef):
            return self.decl_region(expr, frame)
        if isinstance(expr, FieldAccess):
            field_decl = getattr(expr, "field_decl", None)
            field_type = field_decl.declared_type if field_decl else None
            base_region = self.lvalue_region(state, frame, expr.base)
            if expr.is_arrow:
                pointer = state.lookup(base_region) if base_region else None
                if isinstance(pointer, LocVal):
                    return FieldRegion(pointer.region, expr.field_name, field_type)
                return None
            if base_region is None:
                return None
            return FieldRegion(base_region, expr.field_name, field_type)
        if isinstance(expr, UnaryOp) and expr.op == "*":
            region = self.lvalue_region(state, frame, expr.operand)
            val = state.lookup(region) if region is not None else None
            if isinstance(val, LocVal):
                return val.region
            return None
        return None

    def eval_unary(self, via, state, frame, expr: UnaryOp):
        out = []
        for val, st, v in self.eval(via, state, frame, expr.operand):
            if expr.op == "-":
                if isinstance(val, ConcreteInt):
                    out.append((ConcreteInt(-val.value), st, v))
                elif isinstance(val, SymbolicVal):
                    negated = sym_mul(val.expr, -1)
                    out.append((SymbolicVal(negated), st, v))
                else:
                    out.append((UNKNOWN, st, v))
            elif expr.op == "!":
                if isinstance(val, ConcreteInt):
                    out.append((ConcreteInt(0 if val.value else 1), st, v))
                elif isinstance(val, NullLocVal):
                    out.append((ConcreteInt(1), st, v))
                elif isinstance(val, LocVal):
                    out.append((ConcreteInt(0), st, v))
                else:
                    out.append((UNKNOWN, st, v))
            else:  # dereference
                result = self.deref(v, st, frame, expr, val)
                if result is not None:
                    out.append(result)
        return out

    def deref(self, via, state, frame, expr: Node, pointer: SVal):
        """Load through a pointer value; None when the path sank."""
        state, via, sank = self.dispatch_use(via, state, frame, expr, pointer, "deref")
        if sank:
            return None
        if isinstance(pointer, NullLocVal) or self.known_null(state, pointer):
            loc = expr.range.begin
            self.note(f"{loc}: note: null dereference, path terminated")
            node, _ = self._graph.add(
                PreStmtPoint(expr.node_id, frame.id, expr), state, via)
            node.is_sink = True
            return None
        if isinstance(pointer, LocVal):
            val, state = self.load(state, pointer.region, frame)
            return val, state, via
        if isinstance(pointer, SymbolicVal):
            refined = assume(state, pointer, True)  # surviving deref: non-null
            return UNKNOWN, refined if refined is not None else state, via
        return UNKNOWN, state, via

    @staticmethod
    def known_null(state: ProgramState, val: SVal) -> bool:
        sym = as_symbol(val)
        if sym is None:
            return isinstance(val, ConcreteInt) and val.value == 0
        return state.range_of(sym) == RangeSet.singleton(0)

    def eval_binary(self, via, state, frame, expr: BinaryOp):
        op = expr.op
        if op == ",":
            out = []
            for _, st1, v1 in self.eval(via, state, frame, expr.lhs):
                out.extend(self.eval(v1, st1, frame, expr.rhs))
            return out
        if op in ("&&", "||"):
            return self.eval_short_circuit(via, state, frame, expr)
        out = []
        for lv, st1, v1 in self.eval(via, state, frame, expr.lhs):
            for rv, st2, v2 in self.eval(v1, st1, frame, expr.rhs):
                if op == "/":
                    st2, v2, sank = self.dispatch(
                        "check_div", v2, st2, frame,
                        lambda: PreStmtPoint(expr.node_id, frame.id, expr),
                        expr, rv, make_node=False)
                    if sank:
                        continue
                out.append((self.fold_binary(op, lv, rv), st2, v2))
        return out

    def eval_short_circuit(self, via, state, frame, expr: BinaryOp):
        stop = ConcreteInt(0) if expr.op == "&&" else ConcreteInt(1)
        out = []
        for lv, st1, v1 in self.eval(via, state, frame, expr.lhs):
            if isinstance(lv, ConcreteInt):
                if (expr.op == "&&") == bool(lv.value):
                    out.extend(self.eval(v1, st1, frame, expr.rhs))
                else:
                    out.append((stop, st1, v1))
            else:
                # unknown left side: evaluate the right for effects, value unknown
                for _, st2, v2 in self.eval(v1, st1, frame, expr.rhs):
                    out.append((UNKNOWN, st2, v2))
        return out

    def fold_binary(self, op: str, lv: SVal, rv: SVal) -> SVal:
        if op in _CMP_OPS:
            if isinstance(lv, ConcreteInt) and isinstance(rv, ConcreteInt):
                table = {"==": lv.value == rv.value, "!=": lv.value != rv.value,
                         "<": lv.value < rv.value, "<=": lv.value <= rv.value,
                         ">": lv.value > rv.value, ">=": lv.value >= rv.value}
                return ConcreteInt(1 if table[op] else 0)
            return UNKNOWN
        if isinstance(lv, ConcreteInt) and isinstance(rv, ConcreteInt):
            if op == "+":
                return ConcreteInt(lv.value + rv.value)
            if op == "-":
                return ConcreteInt(lv.value - rv.value)
            if op == "*":
                return ConcreteInt(lv.value * rv.value)
            if op == "/":
                if rv.value == 0:
                    return UNKNOWN  # a sink already fired when DivZero is on
                return ConcreteInt(_c_div(lv.value, rv.value))
        if op == "+":
            if isinstance(lv, SymbolicVal) and isinstance(rv, ConcreteInt):
                return SymbolicVal(sym_add(lv.expr, rv.value))
            if isinstance(lv, ConcreteInt) and isinstance(rv, SymbolicVal):
                return SymbolicVal(sym_add(rv.expr, lv.value))
        if op == "-":
            if isinstance(lv, SymbolicVal) and isinstance(rv, ConcreteInt):
                return SymbolicVal(sym_add(lv.expr, -rv.value))
            if isinstance(lv, ConcreteInt) and isinstance(rv, SymbolicVal):
                negated = sym_mul(rv.expr, -1)
                return SymbolicVal(sym_add(negated, lv.value))
        if op == "*":
            sym, const = None, None
            if isinstance(lv, SymbolicVal) and isinstance(rv, ConcreteInt):
                sym, const = lv, rv.value
            elif isinstance(lv, ConcreteInt) and isinstance(rv, SymbolicVal):
                sym, const = rv, lv.value
            if sym is not None:
                product = sym_mul(sym.expr, const)
                return ConcreteInt(0) if product is None else SymbolicVal(product)
        return UNKNOWN  # symbol-vs-symbol arithmetic is not modeled

    def eval_field(self, via, state, frame, expr: FieldAccess):
        field_type = getattr(expr, "field_decl", None)
        field_type = field_type.declared_type if field_type is not None else None
        if expr.is_arrow:
            out = []
            for base, st, v in self.eval(via, state, frame, expr.base):
                result = self.deref_field(v, st, frame, expr, base, field_type)
                if result is not None:
                    out.append(result)
            return out
        region = self.lvalue_region(state, frame, expr)
        if region is None:
            return [(UNKNOWN, state, via)]
        val, state = self.load(state, region, frame)
        return [(val, state, via)]

    def deref_field(self, via, state, frame, expr: FieldAccess, base: SVal,
                    field_type: TypeRef | None):
        state, via, sank = self.dispatch_use(via, state, frame, expr, base, "deref")
        if sank:
            return None
        if isinstance(base, NullLocVal) or self.known_null(state, base):
            self.note(f"{expr.range.begin}: note: null dereference, path terminated")
            node, _ = self._graph.add(
                PreStmtPoint(expr.node_id, frame.id, expr), state, via)
            node.is_sink = True
            return None
        if isinstance(base, LocVal):
            region = FieldRegion(base.region, expr.field_name, field_type)
            val, state = self.load(state, region, frame)
            return val, state, via
        if isinstance(base, SymbolicVal):
            refined = assume(state, base, True)
            ft = field_type.value_type() if field_type else TypeRef("int")
            return self.conjure(ft), refined if refined is not None else state, via
        return UNKNOWN, state, via

    def eval_new(self, via, state, frame, expr: NewExpr):
        val = self.conjure(TypeRef(expr.type_name, 1),
                           f"new{expr.range.begin.line}_{self._conjure_counter + 1}")
        sym = as_symbol(val)
        state = state.constrain(sym, RangeSet.singleton(0).complement())
        state, via, sank = self.dispatch(
            "check_post_new", via, state, frame,
            lambda: PreStmtPoint(expr.node_id, frame.id, expr),
            expr, sym, make_node=False)
        if sank:
            return []
        return [(val, state, via)]

    def eval_assign(self, via, state, frame, expr: Assign):
        lhs_type = expr.lhs.type
        out = []
        for rv, st1, v1 in self.eval(via, state, frame, expr.rhs):
            region = self.lvalue_region(st1, frame, expr.lhs)
            if region is None:
                out.append((rv, st1, v1))
                continue
            if expr.op == "+=":
                if lhs_type is not None and lhs_type.base == "string":
                    result = self.conjure(TypeRef("string"))
                else:
                    current, st1 = self.load(st1, region, frame)
                    result = self.fold_binary("+", current, rv)
            else:
                result = UNKNOWN if isinstance(rv, UndefinedVal) else rv
            st2 = st1.bind(region, result)
            if expr.op == "=" and self._is_struct_value(lhs_type):
                st2 = self._copy_struct(st2, frame, region, expr.rhs)
            if lhs_type is not None and lhs_type.base == "string" \
                    and lhs_type.indirections == 0:
                info = CallInfo(expr, "operator" + expr.op, "assign",
                                region, result, [])
                st2, v1, sank = self.dispatch(
                    "check_post_call", v1, st2, frame,
                    lambda: PostStmtPoint(expr.node_id, -1, -1, frame.id, expr),
                    info, make_node=True)
                if sank:
                    continue
            out.append((result, st2, v1))
        return out

    # --- calls ---

    def eval_method_call(self, via, state, frame, expr: MethodCall):
        method = getattr(expr, "method", None)
        receiver_outcomes = []
        if expr.is_arrow:
            for pval, st, v in self.eval(via, state, frame, expr.receiver):
                st, v, sank = self.dispatch_use(v, st, frame, expr, pval, "deref")
                if sank:
                    continue
                region = pval.region if isinstance(pval, LocVal) else None
                receiver_outcomes.append((region, st, v))
        else:
            region = self.lvalue_region(state, frame, expr.receiver)
            receiver_outcomes.append((region, state, via))
        out = []
        for region, st, v in receiver_outcomes:
            for args, st1, v1 in self.eval_args(v, st, frame, expr.args,
                                                method.params if method else ()):
                st1, v1, sank = self.pre_call_checks(v1, st1, frame, expr, args)
                if sank:
                    continue
                ret = UNKNOWN
                if method is not None and method.returns.base != "void":
                    ret = self.conjure(method.returns.value_type(),
                                       f"{expr.method_name}{self._conjure_counter + 1}")
                st2 = st1
                if method is not None and method.invalidating and region is not None:
                    st2 = st2.bind(region, self.conjure(TypeRef("string")))
                for ptype, _, lregion in args:
                    if ptype is not None and ptype.is_reference \
                            and not ptype.is_const and lregion is not None:
                        st2 = st2.bind(lregion, self.conjure(ptype.value_type()))
                info = CallInfo(expr, expr.method_name, "method", region, ret,
                                args, method=method)
                st2, v2, sank = self.dispatch(
                    "check_post_call", v1, st2, frame,
                    lambda: PostStmtPoint(expr.node_id, -1, -1, frame.id, expr),
                    info, make_node=True)
                if sank:
                    continue
                out.append((ret, st2, v2))
        return out

    def eval_args(self, via, state, frame, arg_exprs, param_types):
        """Evaluate call arguments left to right. Yields
        (list[(param_type, value, lvalue_region)], state, via) outcomes."""
        outcomes = [([], state, via)]
        for i, arg in enumerate(arg_exprs):
            ptype = param_types[i] if i < len(param_types) else None
            if isinstance(ptype, ParamDecl):
                ptype = ptype.declared_type
            next_outcomes = []
            for collected, st, v in outcomes:
                if ptype is not None and ptype.is_reference:
                    region = self.lvalue_region(st, frame, arg)
                    val = st.lookup(region) if region is not None else None
                    next_outcomes.append((collected + [(ptype, val, region)], st, v))
                else:
                    for val, st1, v1 in self.eval(v, st, frame, arg):
                        next_outcomes.append((collected + [(ptype, val, None)], st1, v1))
            outcomes = next_outcomes
        return outcomes

    def pre_call_checks(self, via, state, frame, call: Node, args):
        for _, val, lregion in args:
            if val is None or lregion is not None:
                continue
            state, via, sank = self.dispatch_use(via, state, frame, call, val, "arg")
            if sank:
                return state, via, True
        return state, via, False

    def eval_call(self, via, state, frame, expr: Call):
        decl = expr.callee.decl
        out = []
        for args, st, v in self.eval_args(via, state, frame, expr.args, decl.params):
            st, v, sank = self.pre_call_checks(v, st, frame, expr, args)
            if sank:
                continue
            can_inline = (isinstance(decl, FunctionDecl)
                          and frame.depth + 1 < self.config.inline_depth)
            if can_inline:
                out.extend(self.inline_call(v, st, frame, expr, decl, args))
            else:
                out.extend(self.conservative_call(v, st, frame, expr, decl, args))
        return out

    def conservative_call(self, via, state, frame, expr: Call, decl, args):
        """Unknown body: conjure the result, invalidate what the callee could
        reach through non-const references and pointers."""
        for ptype, val, lregion in args:
            target = None
            if ptype is not None and ptype.is_reference and not ptype.is_const:
                target = lregion
            elif ptype is not None and ptype.is_pointer and not ptype.is_const \
                    and isinstance(val, LocVal):
                target = val.region
            if target is None:
                continue
            rebinds = {}
            for region in state.store:
                if region_within(region, target):
                    rt = (region.field_type if isinstance(region, FieldRegion)
                          else region_type_of(region))
                    rebinds[region] = self.conjure(
                        rt.value_type() if rt else TypeRef("int"))
            if target not in rebinds:
                rt = region_type_of(target)
                rebinds[target] = self.conjure(rt.value_type() if rt else TypeRef("int"))
            state = state.bind_many(rebinds)
        ret: SVal = UNKNOWN
        if decl.return_type.base != "void" or decl.return_type.indirections:
            ret = self.conjure(decl.return_type.value_type(),
                               f"{decl.name}{self._conjure_counter + 1}")
            state = self._constrain_fresh(state, ret, decl.return_type)
        info = CallInfo(expr, decl.name, "function", None, ret, args,
                        decl=decl, is_extern=isinstance(decl, ExternDecl))
        state, via, sank = self.dispatch(
            "check_post_call", via, state, frame,
            lambda: PostStmtPoint(expr.node_id, -1, -1, frame.id, expr),
            info, make_node=True)
        if sank:
            return []
        return [(ret, state, via)]

    def inline_call(self, via, state, frame, expr: Call, callee: FunctionDecl, args):
        self._inlined.add(callee.node_id)
        new_frame = self.new_frame(callee, frame.depth + 1)
        enter_state = state
        for (ptype, val, lregion), param in zip(args, callee.params):
            if param.declared_type.is_reference and lregion is not None:
                new_frame.aliases[param.node_id] = lregion
            else:
                bound = val if val is not None else UNKNOWN
                if isinstance(bound, UndefinedVal):
                    bound = UNKNOWN
                enter_state = enter_state.bind(VarRegion(param, new_frame.id), bound)
        enter_node, _ = self._graph.add(
            CallEnterPoint(expr.node_id, new_frame.id), enter_state, via)
        cfg = self.cfg_of(callee)
        root, _ = self._graph.add(
            BlockEdgePoint(-1, cfg.entry, new_frame.id), enter_state, enter_node)
        work = deque([root])
        exits = []
        while work:
            node = work.popleft()
            point = node.point
            if isinstance(point, BlockEdgePoint) and point.frame == new_frame.id \
                    and point.dst == cfg.exit:
                exits.append(node)
                continue
            work.extend(self.step(node))
        out = []
        for exit_node in exits:
            st = exit_node.state
            ret = st.ret(new_frame.id)
            if ret is None:
                ret = UNKNOWN if callee.return_type.base == "void" else UNDEFINED
            dead_regions = frozenset(
                r for r in st.store
                if isinstance(region_root_of(r), VarRegion)
                and region_root_of(r).frame == new_frame.id)
            st = st.unbind_where(lambda r: r in dead_regions)
            st = st.drop_frame(new_frame.id)
            st = self._reap_with(st, frame, dead_regions)
            exit_point = CallExitPoint(expr.node_id, frame.id)
            exit_n, _ = self._graph.add(exit_point, st, exit_node)
            info = CallInfo(expr, callee.name, "function", None, ret, args,
                            decl=callee, is_extern=False)
            st, v2, sank = self.dispatch(
                "check_post_call", exit_n, st, frame,
                lambda: PostStmtPoint(expr.node_id, -1, -1, frame.id, expr),
                info, make_node=True)
            if sank:
                continue
            out.append((ret, st, v2))
        return out


def _remap_region(region: MemRegion, src: MemRegion, dst: MemRegion) -> MemRegion:
    """Rebuild `region`, replacing its `src` ancestor with `dst`."""
    if region == src:
        return dst
    assert isinstance(region, FieldRegion)
    return FieldRegion(_remap_region(region.parent, src, dst),
                       region.field_name, region.field_type)


def region_type_of(region: MemRegion):
    from .values import region_type
    return region_type(region)


def region_root_of(region: MemRegion):
    from .values import region_root
    return region_root(region)


# --- graph dump ---------------------------------------------------------------

def dump_dot(graph: ExplodedGraph, title: str) -> str:
    """Graphviz rendering: every node shows its point, store bindings in the
    `name: value` style and the symbol range constraints."""
    lines = [f'digraph "{title}" {{', '  node [shape=box, fontname="monospace"];']
    for node in graph.nodes:
        label_parts = [node.point.describe()]
        if node.is_sink:
            label_parts[0] += " (sink)"
        store_bits = []
        for region, val in sorted(node.state.store.items(),
                                  key=lambda kv: _region_sort_key(kv[0])):
            store_bits.append(f"{region}: {val}")
        if store_bits:
            label_parts.append(", ".join(store_bits))
        for sym, rng in sorted(node.state.constraints.items(), key=lambda kv: kv[0].id):
            label_parts.append(f"{sym} : {rng}")
        label = "\\l".join(p.replace('"', '\\"') for p in label_parts) + "\\l"
        lines.append(f'  n{node.seq} [label="{label}"];')
    for node in graph.nodes:
        for succ in node.succs:
            lines.append(f"  n{node.seq} -> n{succ.seq};")
    lines.append("}")
    return "\n".join(lines)


def _region_sort_key(region: MemRegion):
    if isinstance(region, VarRegion):
        return (region.frame, 0, region.decl.node_id, "")
    if isinstance(region, FieldRegion):
        parent = _region_sort_key(region.parent)
        return (parent[0], 1, parent[2], region.field_name)
    return (region.frame, 2, region.site_id, "")
