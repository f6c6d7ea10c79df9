"""Exit codes, flags and output plumbing of mini-analyze / mini-tidy."""

import io

from minilang.cli import (
    helpCheckers, main, parse_analyze_args, parse_tidy_args, run_analyze,
    run_tidy, RunConfig,
)

from conftest import (
    DEREF_AFTER_CLEAR_VERIFY, NULL_CHECK, REDUNDANT_PTR, USE_AFTER_CLEAR,
)


def analyze_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    config = parse_analyze_args(argv)
    if isinstance(config, int):
        return config, "", ""
    code = run_analyze(config, out, err)
    return code, out.getvalue(), err.getvalue()


def tidy_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    config = parse_tidy_args(argv)
    if isinstance(config, int):
        return config, "", ""
    code = run_tidy(config, out, err)
    return code, out.getvalue(), err.getvalue()


# --- exit codes -----------------------------------------------------------------

def test_analyze_reports_give_exit_one(mc):
    path = mc(USE_AFTER_CLEAR)
    code, out, _ = analyze_cli([path, "--checker=cplusplus.InnerPointer"])
    assert code == 1
    assert "Inner pointer of container used after re/deallocation" in out


def test_analyze_clean_file_exit_zero(mc):
    path = mc("void f() { }", "clean.mc")
    code, out, _ = analyze_cli([path])
    assert code == 0
    assert f"Found 0 defect(s) in {path}" in out


def test_missing_file_exit_two():
    code, _, err = analyze_cli(["/nonexistent/nowhere.mc"])
    assert code == 2
    assert "cannot read" in err


def test_minilang_parse_error_exit_two(mc):
    path = mc("void f( {", "broken.mc")
    code, _, err = analyze_cli([path])
    assert code == 2
    assert "error" in err


def test_unknown_checker_exit_two(mc):
    path = mc("void f() { }")
    code, _, err = analyze_cli([path, "--checker=core.Bogus"])
    assert code == 2
    assert "unknown checker" in err


def test_no_inputs_exit_two():
    code, _, err = analyze_cli([])
    assert code == 2


def test_unknown_flag_exit_two(mc):
    assert analyze_cli([mc("void f() { }"), "--frobnicate"])[0] == 2


# --- checker help ------------------------------------------------------------------

def test_checker_help_lists_builtins_and_usage():
    text = helpCheckers()
    assert "USAGE: --checker" in text
    for name in ("core.DivideZero", "cplusplus.InnerPointer", "unix.MallocLite"):
        assert name in text


def test_checker_help_stable_across_runs():
    assert helpCheckers() == helpCheckers()


def test_checker_help_flag_short_circuits(capsys):
    assert parse_analyze_args(["--analyzer-checker-help"]) == 0
    assert "CHECKERS:" in capsys.readouterr().out


# --- dumps -----------------------------------------------------------------------------

def test_dump_ast_prints_nodes(mc):
    path = mc("void f() { int x = 1; }")
    code, out, _ = analyze_cli([path, "--dump-ast"])
    assert code == 0
    assert "TranslationUnit <1:1" in out
    assert "VarDecl" in out


def test_dump_cfg_prints_blocks(mc):
    path = mc("void f(bool b) { if (b) { } }")
    code, out, _ = analyze_cli([path, "--dump-cfg"])
    assert "B0" in out and "branch" in out


def test_dump_egraph_writes_dot_file(mc, tmp_path):
    path = mc("void f() { int x = 1; }")
    dot = tmp_path / "graph.dot"
    code, _, _ = analyze_cli([path, f"--dump-egraph={dot}"])
    text = dot.read_text()
    assert text.startswith("digraph ")
    assert "PostStmt" in text


# --- analyze modes -----------------------------------------------------------------------

def test_html_output_writes_self_contained_file(mc, tmp_path):
    path = mc(USE_AFTER_CLEAR)
    html_path = tmp_path / "report.html"
    code, out, _ = analyze_cli([path, f"--analyzer-output=html:{html_path}"])
    assert code == 1
    page = html_path.read_text()
    assert page.startswith("<!DOCTYPE html>")
    assert "Inner pointer of container" in page


def test_html_unwritable_path_exit_two(mc):
    path = mc(USE_AFTER_CLEAR)
    code, _, err = analyze_cli(
        [path, "--analyzer-output=html:/nonexistent/dir/x.html"])
    assert code == 2


def test_verify_excludes_html(mc):
    path = mc(USE_AFTER_CLEAR)
    code, _, err = analyze_cli(
        [path, "--verify", "--analyzer-output=html:/tmp/x.html"])
    assert code == 2


def test_verify_pass_and_fail_exit_codes(mc):
    good = mc(DEREF_AFTER_CLEAR_VERIFY, "good.mc")
    code, out, _ = analyze_cli([good, "--verify"])
    assert code == 0 and "verify passed" in out
    mutated = DEREF_AFTER_CLEAR_VERIFY.replace("obtained here", "grabbed here")
    bad = mc(mutated, "bad.mc")
    code, out, _ = analyze_cli([bad, "--verify"])
    assert code == 1 and "verify failed" in out


def test_verify_consumes_the_same_text_as_plain_output(mc):
    # a file whose directives were generated from the plain rendering
    path = mc(USE_AFTER_CLEAR, "plain.mc")
    code, out, _ = analyze_cli([path])
    assert code == 1
    directives = []
    for line in out.splitlines():
        if ": warning: " in line or ": note: " in line:
            _, lineno, _, rest = line.split(":", 3)
            sev, msg = rest.strip().split(": ", 1)
            msg = msg.rsplit(" [", 1)[0]
            directives.append((int(lineno), sev, msg))
    source_lines = USE_AFTER_CLEAR.splitlines()
    for lineno, sev, msg in directives:
        source_lines[lineno - 1] += f" // expected-{sev}@-0 {{{{{msg}}}}}"
    annotated = mc("\n".join(source_lines) + "\n", "annotated.mc")
    code, out, _ = analyze_cli([annotated, "--verify"])
    assert code == 0, out


def test_multiple_files_interleaved_in_input_order(mc):
    first = mc("void a() { }", "a.mc")
    second = mc("void b() { }", "b.mc")
    code, out, _ = analyze_cli([first, second])
    assert out.index("a.mc") < out.index("b.mc")


def test_budget_flags_are_wired(mc):
    path = mc("""\
void f(int n) {
  int i = 0;
  while (i < n)
    i = i + 1;
}
""")
    code, _, err = analyze_cli([path, "--unroll=1", "--node-budget=40"])
    assert "unroll" in err or "budget" in err


def test_no_duplicate_warning_note_flag(mc):
    path = mc(USE_AFTER_CLEAR)
    _, with_dup, _ = analyze_cli([path, "--checker=cplusplus.InnerPointer"])
    _, without, _ = analyze_cli([path, "--checker=cplusplus.InnerPointer",
                                 "--no-duplicate-warning-note"])
    assert with_dup.count(": note: ") == without.count(": note: ") + 1


# --- tidy -------------------------------------------------------------------------------

def test_tidy_findings_exit_one_and_fix_rewrites(mc, tmp_path):
    path = mc(REDUNDANT_PTR, "g.mc")
    code, out, _ = tidy_cli(
        [path, "--checks=readability-redundant-pointer", "--fix"])
    assert code == 1
    fixed = open(path).read()
    assert "Something* p" not in fixed
    assert "(function_call())->value" in fixed


def test_tidy_clean_exit_zero(mc):
    path = mc("void f() { int x = 1; x = x + 1; }")
    code, out, _ = tidy_cli([path])
    assert code == 0 and out == ""


def test_tidy_fix_flag_rejected_on_analyze():
    config = RunConfig(command="analyze", inputs=["x.mc"], fix=True)
    assert config.validate() is not None


def test_tidy_unknown_check_exit_two(mc):
    path = mc("void f() { }")
    code, _, err = tidy_cli([path, "--checks=readability-bogus"])
    assert code == 2


def test_tidy_std17_guarded_rewrite_via_cli(mc):
    path = mc(NULL_CHECK, "null_check.mc")
    code, out, _ = tidy_cli([path, "--std=17", "--fix"])
    assert code == 1
    fixed = open(path).read()
    assert "if (Something* p = function_call_that_might_return_null(); (!p) ||" in fixed
    code, out, _ = tidy_cli([path, "--std=17"])
    assert code == 0  # fixed point: no findings on the rewritten file


def test_tidy_without_fix_leaves_file_untouched(mc):
    path = mc(REDUNDANT_PTR, "keep.mc")
    tidy_cli([path])
    assert open(path).read() == REDUNDANT_PTR


# --- dispatcher ----------------------------------------------------------------------------

def test_main_dispatcher_requires_command():
    assert main([]) == 2
    assert main(["frobnicate"]) == 2


def test_main_dispatcher_routes_to_tidy(mc, capsys):
    path = mc(REDUNDANT_PTR)
    assert main(["tidy", path]) == 1


def test_analyze_accepts_std17_sources(mc):
    source = """\
struct T { int v; };
extern T* mk();
void f() {
  if (T* p = mk(); p == 0)
    return;
}
"""
    path = mc(source, "std17.mc")
    assert analyze_cli([path])[0] == 2  # std 14 rejects the if-initializer
    code, out, _ = analyze_cli([path, "--std=17"])
    assert code == 0


def test_unknown_output_mode_exit_two(mc):
    path = mc("void f() { }")
    code, _, err = analyze_cli([path, "--analyzer-output=xml"])
    assert code == 2 and "output mode" in err
