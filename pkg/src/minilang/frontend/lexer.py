"""Lexer for MiniLang. `//` comments are kept as trivia on the next token."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from ..diagnostics import Diagnostic, Severity
from ..source import SourceFile, SourceRange


KEYWORDS = frozenset({
    "int", "bool", "char", "void", "string", "struct", "extern", "noreturn",
    "if", "else", "while", "return", "break", "continue", "delete", "new",
    "true", "false", "const",
})

# Longest first so max-munch falls out of the scan order.
PUNCTUATORS = (
    "==", "!=", "<=", ">=", "&&", "||", "->", "+=",
    "(", ")", "{", "}", ";", ",", "=", "<", ">", "+", "-", "*", "/",
    "!", "&", ".",
)


class TokenKind(enum.Enum):
    KEYWORD = "keyword"
    IDENT = "identifier"
    INT = "int-literal"
    STRING = "string-literal"
    PUNCT = "punctuator"
    EOF = "eof"


@dataclass(frozen=True)
class Comment:
    text: str
    range: SourceRange


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    range: SourceRange
    leading_comments: tuple[Comment, ...] = field(default=())

    def is_kw(self, word: str) -> bool:
        return self.kind is TokenKind.KEYWORD and self.text == word

    def is_punct(self, text: str) -> bool:
        return self.kind is TokenKind.PUNCT and self.text == text

    def __repr__(self):
        return f"Token({self.kind.value}, {self.text!r})"


class LexError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


def tokenize(file: SourceFile) -> list[Token]:
    """Token stream for `file`, final EOF token included.

    Raises LexError on an unterminated string literal or illegal character.
    """
    text = file.text
    n = len(text)
    pos = 0
    tokens: list[Token] = []
    pending: list[Comment] = []

    def rng(b: int, e: int) -> SourceRange:
        return SourceRange(file.location(b), file.location(e))

    while pos < n:
        ch = text[pos]
        if ch in " \t\r\n":
            pos += 1
            continue
        if text.startswith("//", pos):
            end = text.find("\n", pos)
            if end < 0:
                end = n
            pending.append(Comment(text[pos:end], rng(pos, end)))
            pos = end
            continue
        start = pos
        if ch.isalpha() or ch == "_":
            while pos < n and (text[pos].isalnum() or text[pos] == "_"):
                pos += 1
            word = text[start:pos]
            kind = TokenKind.KEYWORD if word in KEYWORDS else TokenKind.IDENT
            tokens.append(Token(kind, word, rng(start, pos), tuple(pending)))
            pending.clear()
            continue
        if ch.isdigit():
            while pos < n and text[pos].isdigit():
                pos += 1
            tokens.append(Token(TokenKind.INT, text[start:pos], rng(start, pos), tuple(pending)))
            pending.clear()
            continue
        if ch == '"':
            pos += 1
            while pos < n and text[pos] != '"':
                if text[pos] == "\n":
                    break
                pos += 2 if text[pos] == "\\" else 1
            if pos >= n or text[pos] != '"':
                raise LexError(Diagnostic(file.location(start),
                                          "unterminated string literal", Severity.ERROR))
            pos += 1
            tokens.append(Token(TokenKind.STRING, text[start:pos], rng(start, pos), tuple(pending)))
            pending.clear()
            continue
        for punct in PUNCTUATORS:
            if text.startswith(punct, pos):
                pos += len(punct)
                tokens.append(Token(TokenKind.PUNCT, punct, rng(start, pos), tuple(pending)))
                pending.clear()
                break
        else:
            raise LexError(Diagnostic(file.location(pos),
                                      f"illegal character {ch!r}", Severity.ERROR))
    tokens.append(Token(TokenKind.EOF, "", rng(n, n), tuple(pending)))
    return tokens
