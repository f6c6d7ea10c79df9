"""Static analysis toolkit for MiniLang (.mc files).

Two user-facing tools are built on a shared frontend:

- ``mini-tidy``: AST-matcher driven lint with automatic fixes
  (redundant-pointer elimination).
- ``mini-analyze``: path-sensitive symbolic execution with checkers for
  dangling inner pointers, use-after-free and division by zero.
"""

__version__ = "0.1.0"
