"""Recursive-descent parser for MiniLang.

`T * p;` parses as a declaration when T names a type, otherwise as a
multiplication statement; struct names must be declared before use, so the
parser keeps the set of names seen so far.
"""

from __future__ import annotations

from ..diagnostics import Diagnostic, Severity
from ..source import SourceFile, SourceRange
from .astnodes import (
    AddressOf, Assign, BinaryOp, Block, BoolLit, BreakStmt, BUILTIN_BASES, Call,
    ContinueStmt, DeclRef, DeleteStmt, ExprStmt, ExternDecl, FieldAccess,
    FieldDecl, FunctionDecl, IfStmt, IntLit, MethodCall, NewExpr, Node, Paren,
    ParamDecl, ReturnStmt, StringLit, StructDecl, TranslationUnit, TypeRef,
    UnaryOp, VarDecl, WhileStmt, number_tree,
)
from .lexer import Token, TokenKind

TYPE_KEYWORDS = frozenset(BUILTIN_BASES)

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"', "0": "\0"}


class _ParseBail(Exception):
    pass


class Parser:
    def __init__(self, tokens: list[Token], file: SourceFile, std: int = 14):
        self.toks = tokens
        self.pos = 0
        self.file = file
        self.std = std
        self.diags: list[Diagnostic] = []
        self.struct_names: set[str] = set()

    # --- token plumbing ---

    def peek(self, k: int = 0) -> Token:
        i = min(self.pos + k, len(self.toks) - 1)
        return self.toks[i]

    def advance(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    def at_end(self) -> bool:
        return self.peek().kind is TokenKind.EOF

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        self.diags.append(Diagnostic(tok.range.begin, message, Severity.ERROR,
                                     highlight=tok.range))
        raise _ParseBail()

    def expect_punct(self, text: str) -> Token:
        if not self.peek().is_punct(text):
            self.error(f"expected '{text}'")
        return self.advance()

    def expect_ident(self) -> Token:
        if self.peek().kind is not TokenKind.IDENT:
            self.error("expected identifier")
        return self.advance()

    def _recover(self):
        """Skip to just past the next ';' or to the next '}'."""
        while not self.at_end():
            tok = self.peek()
            if tok.is_punct(";"):
                self.advance()
                return
            if tok.is_punct("}"):
                return
            self.advance()

    def span(self, begin: Token, end_exclusive_of: Token | Node) -> SourceRange:
        end = end_exclusive_of.range.end if isinstance(end_exclusive_of, (Token, Node)) else end_exclusive_of
        return SourceRange(begin.range.begin, end)

    # --- types ---

    def at_type_start(self, k: int = 0) -> bool:
        tok = self.peek(k)
        if tok.is_kw("const"):
            return True
        if tok.kind is TokenKind.KEYWORD and tok.text in TYPE_KEYWORDS:
            return True
        return tok.kind is TokenKind.IDENT and tok.text in self.struct_names

    def parse_type(self, allow_reference: bool = False) -> TypeRef:
        is_const = False
        if self.peek().is_kw("const"):
            self.advance()
            is_const = True
        tok = self.peek()
        if tok.kind is TokenKind.KEYWORD and tok.text in TYPE_KEYWORDS:
            base = self.advance().text
        elif tok.kind is TokenKind.IDENT and tok.text in self.struct_names:
            base = self.advance().text
        else:
            self.error("expected type name")
        ind = 0
        while self.peek().is_punct("*"):
            self.advance()
            ind += 1
        is_ref = False
        if self.peek().is_punct("&"):
            if not allow_reference:
                self.error("reference type allowed only on parameters")
            self.advance()
            is_ref = True
        if base == "void" and ind > 1:
            self.error("void allows at most one level of indirection")
        return TypeRef(base, ind, is_const, is_ref)

    # --- top level ---

    def parse_translation_unit(self) -> TranslationUnit:
        decls: list[Node] = []
        first = self.peek()
        while not self.at_end():
            try:
                if self.peek().is_kw("struct"):
                    decls.append(self.parse_struct())
                elif self.peek().is_kw("extern"):
                    decls.append(self.parse_extern())
                else:
                    decls.append(self.parse_function())
            except _ParseBail:
                self._recover()
                if self.peek().is_punct("}"):
                    self.advance()
        last = self.peek()
        rng = SourceRange(first.range.begin, last.range.begin) if decls else \
            SourceRange(first.range.begin, first.range.begin)
        if decls:
            rng = SourceRange(decls[0].range.begin, decls[-1].range.end)
        return TranslationUnit(rng, decls)

    def parse_struct(self) -> StructDecl:
        kw = self.advance()
        name_tok = self.expect_ident()
        self.struct_names.add(name_tok.text)
        self.expect_punct("{")
        fields: list[FieldDecl] = []
        while not self.peek().is_punct("}") and not self.at_end():
            fbegin = self.peek()
            ftype = self.parse_type()
            fname = self.expect_ident()
            self.expect_punct(";")
            fields.append(FieldDecl(self.span(fbegin, fname), fname.text,
                                    ftype, fname.range.begin))
        self.expect_punct("}")
        semi = self.expect_punct(";")
        return StructDecl(self.span(kw, semi), name_tok.text, fields, name_tok.range.begin)

    def parse_param_list(self) -> list[ParamDecl]:
        self.expect_punct("(")
        params: list[ParamDecl] = []
        if not self.peek().is_punct(")"):
            while True:
                begin = self.peek()
                ptype = self.parse_type(allow_reference=True)
                name_tok = self.expect_ident()
                params.append(ParamDecl(self.span(begin, name_tok), name_tok.text,
                                        ptype, name_tok.range.begin))
                if not self.peek().is_punct(","):
                    break
                self.advance()
        self.expect_punct(")")
        return params

    def parse_extern(self) -> ExternDecl:
        kw = self.advance()
        noreturn = False
        if self.peek().is_kw("noreturn"):
            self.advance()
            noreturn = True
        rtype = self.parse_type()
        name_tok = self.expect_ident()
        params = self.parse_param_list()
        semi = self.expect_punct(";")
        return ExternDecl(self.span(kw, semi), name_tok.text, rtype, params,
                          noreturn, name_tok.range.begin)

    def parse_function(self) -> FunctionDecl:
        begin = self.peek()
        rtype = self.parse_type()
        name_tok = self.expect_ident()
        params = self.parse_param_list()
        body = self.parse_block()
        return FunctionDecl(self.span(begin, body), name_tok.text, rtype,
                            params, body, name_tok.range.begin)

    # --- statements ---

    def parse_block(self) -> Block:
        lbrace = self.expect_punct("{")
        stmts: list[Node] = []
        while not self.peek().is_punct("}") and not self.at_end():
            stmt = self.parse_stmt_recovering()
            if stmt is not None:
                stmts.append(stmt)
        rbrace = self.expect_punct("}")
        return Block(self.span(lbrace, rbrace), stmts)

    def parse_stmt_recovering(self) -> Node | None:
        try:
            return self.parse_stmt()
        except _ParseBail:
            self._recover()
            return None

    def parse_stmt(self) -> Node:
        tok = self.peek()
        if tok.is_punct("{"):
            return self.parse_block()
        if tok.is_kw("if"):
            return self.parse_if()
        if tok.is_kw("while"):
            return self.parse_while()
        if tok.is_kw("return"):
            self.advance()
            value = None
            if not self.peek().is_punct(";"):
                value = self.parse_expr()
            semi = self.expect_punct(";")
            return ReturnStmt(self.span(tok, semi), value)
        if tok.is_kw("break"):
            self.advance()
            semi = self.expect_punct(";")
            return BreakStmt(self.span(tok, semi))
        if tok.is_kw("continue"):
            self.advance()
            semi = self.expect_punct(";")
            return ContinueStmt(self.span(tok, semi))
        if tok.is_kw("delete"):
            self.advance()
            operand = self.parse_expr()
            semi = self.expect_punct(";")
            return DeleteStmt(self.span(tok, semi), operand)
        if self.at_type_start():
            decl = self.parse_var_decl()
            self.expect_punct(";")
            return decl
        expr = self.parse_expr()
        semi = self.expect_punct(";")
        return ExprStmt(self.span(tok, semi), expr)

    def parse_var_decl(self) -> VarDecl:
        """Declaration without its trailing ';' (the range excludes it too)."""
        begin = self.peek()
        dtype = self.parse_type()
        name_tok = self.expect_ident()
        init = None
        last: Token | Node = name_tok
        if self.peek().is_punct("="):
            self.advance()
            init = self.parse_assign()
            last = init
        return VarDecl(self.span(begin, last), name_tok.text, dtype, init,
                       name_tok.range.begin)

    def parse_if(self) -> IfStmt:
        kw = self.advance()
        self.expect_punct("(")
        init = None
        if self.at_type_start():
            if self.std < 17:
                self.error("if-statement initializer requires --std=17")
            init = self.parse_var_decl()
            self.expect_punct(";")
        cond = self.parse_expr()
        self.expect_punct(")")
        then_branch = self.parse_stmt()
        else_branch = None
        last: Node = then_branch
        if self.peek().is_kw("else"):
            self.advance()
            else_branch = self.parse_stmt()
            last = else_branch
        return IfStmt(self.span(kw, last), init, cond, then_branch, else_branch)

    def parse_while(self) -> WhileStmt:
        kw = self.advance()
        self.expect_punct("(")
        cond = self.parse_expr()
        self.expect_punct(")")
        body = self.parse_stmt()
        return WhileStmt(self.span(kw, body), cond, body)

    # --- expressions ---

    def parse_expr(self) -> Node:
        """Full expression: comma has the lowest precedence."""
        expr = self.parse_assign()
        while self.peek().is_punct(","):
            op_tok = self.advance()
            rhs = self.parse_assign()
            expr = BinaryOp(SourceRange(expr.range.begin, rhs.range.end), ",",
                            expr, rhs, op_tok.range.begin)
        return expr

    def parse_assign(self) -> Node:
        lhs = self.parse_binary(0)
        tok = self.peek()
        if tok.is_punct("=") or tok.is_punct("+="):
            op_tok = self.advance()
            rhs = self.parse_assign()
            return Assign(SourceRange(lhs.range.begin, rhs.range.end),
                          op_tok.text, lhs, rhs, op_tok.range.begin)
        return lhs

    _PRECEDENCE = [("||",), ("&&",), ("==", "!="), ("<", "<=", ">", ">="),
                   ("+", "-"), ("*", "/")]

    def parse_binary(self, level: int) -> Node:
        if level >= len(self._PRECEDENCE):
            return self.parse_unary()
        expr = self.parse_binary(level + 1)
        ops = self._PRECEDENCE[level]
        while self.peek().kind is TokenKind.PUNCT and self.peek().text in ops:
            op_tok = self.advance()
            rhs = self.parse_binary(level + 1)
            expr = BinaryOp(SourceRange(expr.range.begin, rhs.range.end),
                            op_tok.text, expr, rhs, op_tok.range.begin)
        return expr

    def parse_unary(self) -> Node:
        tok = self.peek()
        if tok.kind is TokenKind.PUNCT and tok.text in ("!", "-", "*", "&"):
            op_tok = self.advance()
            operand = self.parse_unary()
            rng = SourceRange(op_tok.range.begin, operand.range.end)
            if op_tok.text == "&":
                return AddressOf(rng, operand, op_tok.range.begin)
            return UnaryOp(rng, op_tok.text, operand, op_tok.range.begin)
        return self.parse_postfix()

    def parse_postfix(self) -> Node:
        expr = self.parse_primary()
        while True:
            tok = self.peek()
            if tok.is_punct(".") or tok.is_punct("->"):
                is_arrow = tok.text == "->"
                self.advance()
                name_tok = self.expect_ident()
                if self.peek().is_punct("("):
                    args, close = self.parse_args()
                    expr = MethodCall(SourceRange(expr.range.begin, close.range.end),
                                      expr, name_tok.text, args, is_arrow,
                                      name_tok.range.begin)
                else:
                    expr = FieldAccess(SourceRange(expr.range.begin, name_tok.range.end),
                                       expr, name_tok.text, is_arrow,
                                       name_tok.range.begin)
            elif tok.is_punct("("):
                if not isinstance(expr, DeclRef):
                    self.error("called object is not a function name", tok)
                args, close = self.parse_args()
                expr = Call(SourceRange(expr.range.begin, close.range.end), expr, args)
            else:
                return expr

    def parse_args(self) -> tuple[list[Node], Token]:
        self.expect_punct("(")
        args: list[Node] = []
        if not self.peek().is_punct(")"):
            while True:
                args.append(self.parse_assign())
                if not self.peek().is_punct(","):
                    break
                self.advance()
        close = self.expect_punct(")")
        return args, close

    def parse_primary(self) -> Node:
        tok = self.peek()
        if tok.kind is TokenKind.INT:
            self.advance()
            return IntLit(tok.range, int(tok.text))
        if tok.is_kw("true") or tok.is_kw("false"):
            self.advance()
            return BoolLit(tok.range, tok.text == "true")
        if tok.kind is TokenKind.STRING:
            self.advance()
            return StringLit(tok.range, _decode_string(tok.text))
        if tok.is_kw("new"):
            self.advance()
            name_tok = self.peek()
            if name_tok.kind is TokenKind.IDENT or (
                    name_tok.kind is TokenKind.KEYWORD and name_tok.text in TYPE_KEYWORDS):
                self.advance()
            else:
                self.error("expected type name after 'new'")
            self.expect_punct("(")
            close = self.expect_punct(")")
            return NewExpr(self.span(tok, close), name_tok.text)
        if tok.kind is TokenKind.IDENT:
            self.advance()
            return DeclRef(tok.range, tok.text)
        if tok.is_punct("("):
            self.advance()
            inner = self.parse_expr()
            close = self.expect_punct(")")
            return Paren(self.span(tok, close), inner)
        self.error("expected expression")


def _decode_string(spelling: str) -> str:
    body = spelling[1:-1]
    out = []
    i = 0
    while i < len(body):
        if body[i] == "\\" and i + 1 < len(body):
            out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(body[i])
            i += 1
    return "".join(out)


def parse(tokens: list[Token], file: SourceFile, std: int = 14
          ) -> tuple[TranslationUnit, list[Diagnostic]]:
    """Parse a token stream; on syntax errors, recovery resumes at ';' or '}'."""
    parser = Parser(tokens, file, std)
    unit = parser.parse_translation_unit()
    number_tree(unit)
    return unit, parser.diags
