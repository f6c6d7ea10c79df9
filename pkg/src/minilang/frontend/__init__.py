"""MiniLang frontend: lexing, parsing and type checking.

`load_unit` is the one-call pipeline used by the tools: text in, typed
translation unit (or diagnostics) out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..diagnostics import Diagnostic
from ..source import SourceFile, get_source_text
from .astnodes import (  # noqa: F401  (re-exported surface)
    AddressOf, Assign, BinaryOp, Block, BOOL, BoolLit, BreakStmt, Call, CHAR,
    CHAR_PTR, ContinueStmt, DeclRef, DeleteStmt, dump_ast, Expr, ExprStmt,
    ExternDecl, FieldAccess, FieldDecl, FunctionDecl, IfStmt, INT, IntLit,
    MethodCall, NewExpr, Node, Paren, ParamDecl, ReturnStmt, STRING, StringLit,
    strip_parens, StructDecl, structure_signature, TranslationUnit, TypeRef,
    UnaryOp, VarDecl, VOID, walk, WhileStmt,
)
from .builtins import BUFFER_METHODS, INVALIDATING_METHODS, STRING_METHODS  # noqa: F401
from .lexer import Comment, LexError, Token, TokenKind, tokenize  # noqa: F401
from .parser import parse
from .typecheck import typecheck


@dataclass
class FrontendResult:
    file: SourceFile
    unit: TranslationUnit | None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.unit is not None and not self.diagnostics


def load_unit(name: str, text: str, std: int = 14) -> FrontendResult:
    """Lex, parse and typecheck one translation unit."""
    file = SourceFile(name, text)
    try:
        tokens = tokenize(file)
    except LexError as err:
        return FrontendResult(file, None, [err.diagnostic])
    unit, diags = parse(tokens, file, std)
    if diags:
        return FrontendResult(file, unit, diags)
    diags = typecheck(unit)
    return FrontendResult(file, unit, diags)


def node_text(node: Node) -> str:
    """Exact source spelling of a node."""
    return get_source_text(node.range)
