"""Lexer, parser, typechecker and source-extraction behavior."""

import pytest
from hypothesis import given, settings, strategies as st

from minilang.frontend import (
    load_unit, node_text, structure_signature, tokenize, walk,
)
from minilang.frontend.astnodes import (
    Assign, BinaryOp, Call, DeclRef, IntLit, VarDecl,
)
from minilang.frontend.lexer import LexError, TokenKind
from minilang.frontend.parser import parse
from minilang.source import InternalError, SourceFile, SourceRange, get_source_text

from conftest import frontend
from proggen import generate_function


def toks(source: str):
    return tokenize(SourceFile("t.mc", source))


def kinds_and_texts(source: str):
    return [(t.kind.value, t.text) for t in toks(source) if t.kind is not TokenKind.EOF]


# --- tokenize ---------------------------------------------------------------

def test_tokenize_canonical_split():
    assert kinds_and_texts("int x = 5;") == [
        ("keyword", "int"), ("identifier", "x"), ("punctuator", "="),
        ("int-literal", "5"), ("punctuator", ";"),
    ]


def test_tokenize_assignment_expression_has_five_leaves():
    # the b = a + 1 expression of the canonical syntax-tree figure
    assert [t.text for t in toks("b = a + 1")[:-1]] == ["b", "=", "a", "+", "1"]


def test_tokenize_method_call_split():
    assert [t.text for t in toks("s.c_str()")[:-1]] == ["s", ".", "c_str", "(", ")"]


def test_tokens_cover_all_non_whitespace_bytes():
    source = "int x = 5; // trailing note\nbool f;\n"
    file = SourceFile("t.mc", source)
    tokens = tokenize(file)
    covered = set()
    for tok in tokens:
        covered.update(range(tok.range.begin.offset, tok.range.end.offset))
        for comment in tok.leading_comments:
            covered.update(range(comment.range.begin.offset, comment.range.end.offset))
    uncovered = [source[i] for i in range(len(source)) if i not in covered]
    assert all(ch in " \t\r\n" for ch in uncovered)


def test_comment_trivia_attaches_to_following_token():
    tokens = toks("// lead\nint x;")
    assert tokens[0].text == "int"
    assert [c.text for c in tokens[0].leading_comments] == ["// lead"]


def test_unterminated_string_literal_is_a_lex_error():
    with pytest.raises(LexError) as err:
        toks('string s = "oops;')
    assert "unterminated" in err.value.diagnostic.message


def test_illegal_character_is_a_lex_error():
    with pytest.raises(LexError) as err:
        toks("int x = 5 @ 3;")
    assert "illegal character" in err.value.diagnostic.message
    assert err.value.diagnostic.location.column == 11


# --- parse ------------------------------------------------------------------

def test_parse_assignment_shape_matches_figure():
    fe = frontend("void f(int a, int b) { b = a + 1; }")
    assigns = [n for n in walk(fe.unit) if isinstance(n, Assign)]
    assert len(assigns) == 1
    assign = assigns[0]
    assert isinstance(assign.lhs, DeclRef) and assign.lhs.name == "b"
    assert isinstance(assign.rhs, BinaryOp) and assign.rhs.op == "+"
    assert isinstance(assign.rhs.lhs, DeclRef) and assign.rhs.lhs.name == "a"
    assert isinstance(assign.rhs.rhs, IntLit) and assign.rhs.rhs.value == 1


def test_star_is_declaration_when_name_is_a_type():
    fe = frontend("struct T { int x; };\nextern T* f();\nvoid g() { T * p = f(); }")
    decls = [n for n in walk(fe.unit) if isinstance(n, VarDecl)]
    assert decls and decls[0].declared_type.base == "T"
    assert decls[0].declared_type.indirections == 1


def test_star_is_multiplication_when_name_is_a_variable():
    fe = frontend("void g() { int T = 2; int p = 3; T * p; }")
    mults = [n for n in walk(fe.unit)
             if isinstance(n, BinaryOp) and n.op == "*"]
    assert len(mults) == 1


def test_empty_input_parses_to_empty_unit():
    file = SourceFile("empty.mc", "")
    unit, diags = parse(tokenize(file), file)
    assert diags == []
    assert unit.decls == []


def test_syntax_error_recovers_at_semicolon():
    result = load_unit("bad.mc", "void f() { int x = ; int y = 1; }")
    assert result.diagnostics
    assert any("expected expression" in d.message for d in result.diagnostics)


def test_if_initializer_requires_std17():
    src = "struct T { int x; };\nextern T* f();\nvoid g() { if (T* p = f(); !p) return; }"
    bad = load_unit("i.mc", src, std=14)
    assert any("--std=17" in d.message for d in bad.diagnostics)
    good = load_unit("i.mc", src, std=17)
    assert good.ok, [d.message for d in good.diagnostics]


def test_comma_expression_parses_inside_parens():
    fe = frontend("void f() { int v = 0; bool b = ((v = 3), false); }")
    commas = [n for n in walk(fe.unit) if isinstance(n, BinaryOp) and n.op == ","]
    assert len(commas) == 1


# --- typecheck ----------------------------------------------------------------

def test_dereference_of_non_pointer_rejected():
    result = load_unit("t.mc", "void f() { *5; }")
    assert any("cannot dereference non-pointer" in d.message
               for d in result.diagnostics)


def test_c_str_result_is_char_pointer():
    fe = frontend("void f() { string s; char* c = s.c_str(); }")
    decl = next(n for n in walk(fe.unit)
                if isinstance(n, VarDecl) and n.name == "c")
    assert decl.init.type is not None
    assert str(decl.init.type) == "char*"


def test_assignment_to_const_rejected():
    result = load_unit("t.mc", "void f() { const int k = 1; k = 2; }")
    assert any("assignment to const" in d.message for d in result.diagnostics)


def test_unknown_identifier_and_unknown_method():
    assert any("unknown identifier" in d.message
               for d in load_unit("t.mc", "void f() { x = 1; }").diagnostics)
    assert any("unknown string method" in d.message
               for d in load_unit("t.mc", "void f() { string s; s.shrink(); }").diagnostics)


def test_condition_must_be_bool():
    result = load_unit("t.mc", "void f(int a) { if (a) a = 0; }")
    assert any("condition must be bool" in d.message for d in result.diagnostics)


def test_pointer_null_comparison_allowed():
    frontend("struct T { int x; };\nextern T* f();\n"
             "void g() { T* p = f(); if (p == 0) return; }")


def test_push_back_accepts_int_literal_only():
    frontend("void f() { string s; s.push_back(97); }")
    result = load_unit("t.mc", "void f(int c) { string s; s.push_back(c); }")
    assert result.diagnostics


def test_break_outside_loop_rejected():
    result = load_unit("t.mc", "void f() { break; }")
    assert any("'break' outside" in d.message for d in result.diagnostics)


def test_declrefs_resolve_after_typecheck():
    fe = frontend("void f(int a) { int b = a; b = b + a; }")
    for ref in (n for n in walk(fe.unit) if isinstance(n, DeclRef)):
        assert ref.decl is not None


# --- getSourceText --------------------------------------------------------------

def test_source_text_of_declaration_excludes_semicolon():
    src = "extern int f();\nvoid g() { int x = f(); }"
    fe = frontend(src)
    decl = next(n for n in walk(fe.unit)
                if isinstance(n, VarDecl) and n.name == "x")
    begin = src.index("int x")
    expected = src[begin:src.index("f()", begin) + len("f()")]
    assert node_text(decl) == expected == "int x = f()"


def test_source_text_empty_range():
    file = SourceFile("t.mc", "int x;")
    loc = file.location(3)
    assert get_source_text(SourceRange(loc, loc)) == ""


def test_source_text_of_method_call_subtree():
    src = "void f() { string s; char* c = s.c_str(); }"
    fe = frontend(src)
    call = next(n for n in walk(fe.unit) if n.kind == "MethodCall")
    assert node_text(call) == "s.c_str()"


def test_source_text_out_of_bounds_is_internal_error():
    small = SourceFile("s.mc", "int x;")
    big = SourceFile("b.mc", "int x = 123456;")
    rng = SourceRange(big.location(0), big.location(len(big.text)))
    with pytest.raises(InternalError):
        get_source_text(rng, small)


# --- invariants ------------------------------------------------------------------

CORPUS = [
    "void f() { }",
    "struct T { int x; bool b; };\nextern T* mk();\n"
    "int g() { T* p = mk(); if (!p) return 0; return p->x; }",
    "void h(int a, int& out) { while (a > 0) { a = a - 1; } out = a; }",
    "void s() { string t; char* c = t.c_str(); t.clear(); }",
]


@pytest.mark.parametrize("source", CORPUS)
def test_round_trip_every_node_relexes_to_its_tokens(source):
    fe = frontend(source)
    for node in walk(fe.unit):
        text = node_text(node)
        slice_file = SourceFile("slice.mc", text)
        slice_tokens = [t.text for t in tokenize(slice_file)
                        if t.kind is not TokenKind.EOF]
        original = [t.text for t in tokenize(fe.file)
                    if t.kind is not TokenKind.EOF
                    and node.range.begin.offset <= t.range.begin.offset
                    and t.range.end.offset <= node.range.end.offset]
        assert slice_tokens == original


@pytest.mark.parametrize("source", CORPUS)
def test_child_ranges_nested_in_parents(source):
    fe = frontend(source)
    for node in walk(fe.unit):
        for child in node.children():
            assert node.range.begin.offset <= child.range.begin.offset
            assert child.range.end.offset <= node.range.end.offset


@given(st.integers(min_value=0, max_value=300))
@settings(max_examples=40, deadline=None)
def test_parse_is_deterministic_on_random_programs(seed):
    source = generate_function(seed)
    first = load_unit("p.mc", source)
    second = load_unit("p.mc", source)
    assert first.ok and second.ok
    assert structure_signature(first.unit) == structure_signature(second.unit)


def test_location_offset_consistency():
    src = "int a;\nbool b;\n// note\nvoid f() { }\n"
    file = SourceFile("c.mc", src)
    for offset in range(len(src) + 1):
        loc = file.location(offset)
        assert loc.offset == offset
        line_start = src.rfind("\n", 0, offset) + 1
        assert loc.column == offset - line_start + 1
        assert src[:offset].count("\n") + 1 == loc.line


def test_reference_type_outside_parameters_rejected():
    result = load_unit("r.mc", "void f() { int& r = 0; }")
    assert any("reference type allowed only on parameters" in d.message
               for d in result.diagnostics)


def test_void_double_indirection_rejected():
    result = load_unit("v.mc", "void f() { void** p; }")
    assert any("void allows at most one level" in d.message
               for d in result.diagnostics)
