"""Per-function control flow graphs.

Blocks hold statement elements plus implicit string-destructor elements on
every edge that leaves the variable's scope. `&&`/`||`/`!` in branch
conditions are lowered into the branch structure, so condition leaves are
simple expressions. Blocks are numbered in reverse post-order from entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .frontend.astnodes import (
    Block, BreakStmt, ContinueStmt, DeleteStmt, ExprStmt, FunctionDecl, IfStmt,
    Node, Paren, ReturnStmt, UnaryOp, BinaryOp, VarDecl, WhileStmt,
)
from .source import InternalError, SourceLocation


@dataclass(frozen=True)
class StmtElement:
    stmt: Node


@dataclass(frozen=True)
class ImplicitDtorElement:
    var: VarDecl  # a local of string type
    loc: SourceLocation  # where the scope is left


CfgElement = StmtElement | ImplicitDtorElement


@dataclass(frozen=True)
class Branch:
    cond: Node
    true_target: int
    false_target: int


@dataclass(frozen=True)
class Jump:
    target: int


@dataclass(frozen=True)
class Ret:
    stmt: ReturnStmt | None
    target: int  # always the exit block


Terminator = Branch | Jump | Ret


@dataclass
class BasicBlock:
    id: int
    elements: list[CfgElement] = field(default_factory=list)
    terminator: Terminator | None = None

    def successors(self) -> list[int]:
        t = self.terminator
        if isinstance(t, Branch):
            return [t.true_target, t.false_target]
        if isinstance(t, (Jump, Ret)):
            return [t.target]
        return []


@dataclass
class Cfg:
    fn: FunctionDecl
    blocks: list[BasicBlock]
    entry: int
    exit: int
    notes: list[str] = field(default_factory=list)

    def block(self, bid: int) -> BasicBlock:
        return self.blocks[bid]


class _Scope:
    def __init__(self):
        self.strings: list[VarDecl] = []


class _Builder:
    def __init__(self, fn: FunctionDecl):
        self.fn = fn
        self.blocks: list[BasicBlock] = []
        self.exit = self.new_block().id
        self.current: BasicBlock | None = None
        self.scopes: list[_Scope] = []
        self.loops: list[tuple[int, int, int]] = []  # (continue, break, scope depth)
        self.notes: list[str] = []

    def new_block(self) -> BasicBlock:
        block = BasicBlock(len(self.blocks))
        self.blocks.append(block)
        return block

    def emit(self, element: CfgElement):
        assert self.current is not None
        self.current.elements.append(element)

    def terminate(self, term: Terminator):
        assert self.current is not None and self.current.terminator is None
        self.current.terminator = term
        self.current = None

    # --- scopes and destructors ---

    def declare(self, decl: VarDecl):
        if decl.declared_type.base == "string" and decl.declared_type.indirections == 0:
            self.scopes[-1].strings.append(decl)

    def emit_dtors(self, down_to: int, loc: SourceLocation):
        """Destructor elements for every string in scopes deeper than `down_to`,
        innermost scope first, reverse declaration order within a scope."""
        for scope in reversed(self.scopes[down_to:]):
            for var in reversed(scope.strings):
                self.emit(ImplicitDtorElement(var, loc))

    # --- statements ---

    def build(self) -> Cfg:
        first = self.new_block()
        self.current = first
        self.scopes.append(_Scope())
        self.lower_stmts(self.fn.body.stmts)
        if self.current is not None:
            self.emit_dtors(0, self.fn.body.range.end)
            self.terminate(Ret(None, self.exit))
        self.scopes.pop()
        return self._finish(first.id)

    def lower_stmts(self, stmts: list[Node]):
        for i, stmt in enumerate(stmts):
            if self.current is None:
                loc = stmt.range.begin
                self.notes.append(f"{loc}: note: unreachable code dropped")
                return
            self.lower_stmt(stmt)

    def lower_stmt(self, stmt: Node):
        if isinstance(stmt, VarDecl):
            self.emit(StmtElement(stmt))
            self.declare(stmt)
        elif isinstance(stmt, (ExprStmt, DeleteStmt)):
            self.emit(StmtElement(stmt))
        elif isinstance(stmt, ReturnStmt):
            self.emit(StmtElement(stmt))
            self.emit_dtors(0, stmt.range.begin)
            self.terminate(Ret(stmt, self.exit))
        elif isinstance(stmt, BreakStmt):
            if not self.loops:
                raise InternalError("'break' outside of a loop reached the CFG")
            self.emit(StmtElement(stmt))
            _, break_target, depth = self.loops[-1]
            self.emit_dtors(depth, stmt.range.begin)
            self.terminate(Jump(break_target))
        elif isinstance(stmt, ContinueStmt):
            if not self.loops:
                raise InternalError("'continue' outside of a loop reached the CFG")
            self.emit(StmtElement(stmt))
            continue_target, _, depth = self.loops[-1]
            self.emit_dtors(depth, stmt.range.begin)
            self.terminate(Jump(continue_target))
        elif isinstance(stmt, Block):
            self.scopes.append(_Scope())
            self.lower_stmts(stmt.stmts)
            if self.current is not None:
                end = stmt.range.file.location(max(stmt.range.begin.offset,
                                                   stmt.range.end.offset - 1))
                self.emit_dtors(len(self.scopes) - 1, end)
            self.scopes.pop()
        elif isinstance(stmt, IfStmt):
            self.lower_if(stmt)
        elif isinstance(stmt, WhileStmt):
            self.lower_while(stmt)
        else:
            raise InternalError(f"statement kind {stmt.kind} in CFG lowering")

    def lower_if(self, stmt: IfStmt):
        self.scopes.append(_Scope())
        if stmt.init is not None:
            self.emit(StmtElement(stmt.init))
            self.declare(stmt.init)
        then_block = self.new_block()
        else_block = self.new_block() if stmt.else_branch is not None else None
        join = self.new_block()
        self.lower_cond(stmt.cond, then_block.id,
                        else_block.id if else_block else join.id)
        self.current = then_block
        self.lower_stmt(stmt.then_branch)
        if self.current is not None:
            self.terminate(Jump(join.id))
        if else_block is not None:
            self.current = else_block
            self.lower_stmt(stmt.else_branch)
            if self.current is not None:
                self.terminate(Jump(join.id))
        self.current = join
        self.emit_dtors(len(self.scopes) - 1, stmt.range.end)
        self.scopes.pop()

    def lower_while(self, stmt: WhileStmt):
        head = self.new_block()
        self.terminate(Jump(head.id))
        body = self.new_block()
        after = self.new_block()
        self.current = head
        self.lower_cond(stmt.cond, body.id, after.id)
        self.loops.append((head.id, after.id, len(self.scopes)))
        self.current = body
        self.lower_stmt(stmt.body)
        if self.current is not None:
            self.terminate(Jump(head.id))  # back edge
        self.loops.pop()
        self.current = after

    def lower_cond(self, cond: Node, true_target: int, false_target: int):
        if isinstance(cond, Paren):
            return self.lower_cond(cond.inner, true_target, false_target)
        if isinstance(cond, UnaryOp) and cond.op == "!":
            return self.lower_cond(cond.operand, false_target, true_target)
        if isinstance(cond, BinaryOp) and cond.op == "&&":
            mid = self.new_block()
            self.lower_cond(cond.lhs, mid.id, false_target)
            self.current = mid
            return self.lower_cond(cond.rhs, true_target, false_target)
        if isinstance(cond, BinaryOp) and cond.op == "||":
            mid = self.new_block()
            self.lower_cond(cond.lhs, true_target, mid.id)
            self.current = mid
            return self.lower_cond(cond.rhs, true_target, false_target)
        self.terminate(Branch(cond, true_target, false_target))

    # --- numbering and cleanup ---

    def _finish(self, first: int) -> Cfg:
        order: list[int] = []
        seen = set()

        def dfs(bid: int):
            if bid in seen:
                return
            seen.add(bid)
            for succ in self.blocks[bid].successors():
                dfs(succ)
            order.append(bid)

        dfs(first)
        order.reverse()
        if self.exit in seen:
            order.remove(self.exit)
        order.append(self.exit)  # exit numbered last, keeps dumps stable
        for bid in range(len(self.blocks)):
            if bid not in seen and bid != self.exit and self.blocks[bid].elements:
                self.notes.append(
                    f"{self.fn.name}: note: unreachable block dropped")
        renumber = {old: new for new, old in enumerate(order)}
        blocks = []
        for old in order:
            b = self.blocks[old]
            term = b.terminator
            if isinstance(term, Branch):
                term = Branch(term.cond, renumber[term.true_target],
                              renumber[term.false_target])
            elif isinstance(term, Jump):
                term = Jump(renumber[term.target])
            elif isinstance(term, Ret):
                term = Ret(term.stmt, renumber[term.target])
            blocks.append(BasicBlock(renumber[old], list(b.elements), term))
        return Cfg(self.fn, blocks, renumber[first], renumber[self.exit], self.notes)


def build_cfg(fn: FunctionDecl) -> Cfg:
    """CFG of a typechecked function."""
    return _Builder(fn).build()


def dump_cfg(cfg: Cfg) -> str:
    from .frontend import node_text

    lines = [f"fn {cfg.fn.name}: entry=B{cfg.entry} exit=B{cfg.exit}"]
    for block in cfg.blocks:
        tag = " (entry)" if block.id == cfg.entry else (
            " (exit)" if block.id == cfg.exit else "")
        lines.append(f"  B{block.id}{tag}:")
        for element in block.elements:
            if isinstance(element, StmtElement):
                loc = element.stmt.range.begin
                text = " ".join(node_text(element.stmt).split())
                lines.append(f"    <{loc.line}:{loc.column}> {text}")
            else:
                lines.append(f"    ~{element.var.name}() [string dtor]")
        t = block.terminator
        if isinstance(t, Branch):
            cond = " ".join(node_text(t.cond).split())
            lines.append(f"    T: branch ({cond}) -> B{t.true_target}, B{t.false_target}")
        elif isinstance(t, Jump):
            lines.append(f"    T: jump -> B{t.target}")
        elif isinstance(t, Ret):
            lines.append(f"    T: return -> B{t.target}")
    for note in cfg.notes:
        lines.append(f"  ! {note}")
    return "\n".join(lines)
