"""Shared fixtures: frontend/analysis helpers and the ported example files."""

from __future__ import annotations

import pytest

from minilang.checkers import make_checkers
from minilang.frontend import load_unit
from minilang.symexec import AnalysisConfig, Engine


def frontend(source: str, name: str = "input.mc", std: int = 14):
    result = load_unit(name, source, std)
    assert result.ok, [f"{d.location}: {d.message}" for d in result.diagnostics]
    return result


def analyze(source: str, name: str = "input.mc", std: int = 14,
            checkers=None, config: AnalysisConfig | None = None):
    fe = frontend(source, name, std)
    engine = Engine(fe.unit, fe.file, config, make_checkers(checkers))
    return engine.run(), fe


@pytest.fixture
def mc(tmp_path):
    """Write a MiniLang source file into the test's temp dir."""

    def write(source: str, name: str = "input.mc") -> str:
        path = tmp_path / name
        path.write_text(source)
        return str(path)

    return write


# Ports of the canonical example programs, reused across the suite.

USE_AFTER_CLEAR = """\
extern void consume(char* c);

char* useAfterClear() {
  string s;
  char* c = s.c_str();
  s.clear();
  return c;
}
"""

USE_AFTER_FREE = """\
struct Chunk { int size; };

Chunk* useAfterFree() {
  Chunk* s = new Chunk();
  Chunk* c = s;
  delete s;
  return c;
}
"""

REDUNDANT_PTR = """\
struct Something { int value; };
extern Something* function_call();
extern void print(int v);

void usage() {
  Something* p = function_call();
  int value = p->value;
  print(value);
}
"""

NULL_CHECK = """\
struct Something { int value; };
extern Something* function_call_that_might_return_null();
extern void print(int v);

void guarded() {
  Something* p = function_call_that_might_return_null();
  if (!p)
    return;

  int value_to_print = p->value;
  print(value_to_print);
}
"""

DIV_ZERO_PATHS = """\
void paths(int a) {
  int i;
  int j;
  if (a != 0)
    i = 0;
  else
    i = 1;
  if (a == 0)
    j = 5 / i;
  else
    j = 3 / i;
  j = j + 2 / i;
}
"""

EXPLODED_G = """\
void g(int b, int& x) {
  if (b != 0)
    x = b + 1;
  else
    x = 42;
}
"""

DEREF_AFTER_CLEAR_VERIFY = """\
extern void consume(char* c);

void deref_after_clear() {
  char* c;
  string s;
  c = s.c_str(); // expected-note {{Pointer to inner buffer of 'string' obtained here}}
  s.clear();     // expected-note {{Inner buffer of 'string' reallocated by call to 'clear'}}
  consume(c);
  // expected-warning@-1 {{Inner pointer of container used after re/deallocation}}
  // expected-note@-2 {{Inner pointer of container used after re/deallocation}}
}
"""
