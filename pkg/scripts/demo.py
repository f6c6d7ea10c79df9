#!/usr/bin/env python3
"""Run both tools over the bundled example programs and show their output.

Usage: python scripts/demo.py [--std=17]
"""

from __future__ import annotations

import shutil
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from minilang.cli import parse_analyze_args, parse_tidy_args, run_analyze, run_tidy

EXAMPLES = Path(__file__).resolve().parent / "examples"

ANALYZE = ["use_after_clear.mc", "use_after_free.mc", "div_zero.mc"]
TIDY = [("redundant_ptr.mc", "14"), ("null_check.mc", "17")]


def banner(text: str):
    print(f"\n=== {text} " + "=" * max(0, 66 - len(text)))


def main() -> int:
    for name in ANALYZE:
        banner(f"mini-analyze {name}")
        config = parse_analyze_args([str(EXAMPLES / name)])
        run_analyze(config)
    banner("mini-analyze --verify deref_after_clear_verify.mc")
    config = parse_analyze_args([str(EXAMPLES / "deref_after_clear_verify.mc"),
                                 "--verify"])
    run_analyze(config)
    banner("mini-analyze --dump-egraph exploded_g.mc")
    with tempfile.TemporaryDirectory() as tmp:
        dot = Path(tmp) / "g.dot"
        config = parse_analyze_args([str(EXAMPLES / "exploded_g.mc"),
                                     f"--dump-egraph={dot}"])
        run_analyze(config)
        print(dot.read_text())
    for name, std in TIDY:
        banner(f"mini-tidy --std={std} --fix {name}")
        with tempfile.TemporaryDirectory() as tmp:
            work = Path(tmp) / name
            shutil.copy(EXAMPLES / name, work)
            config = parse_tidy_args([str(work), f"--std={std}", "--fix"])
            run_tidy(config)
            print("--- rewritten file ---")
            print(work.read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
