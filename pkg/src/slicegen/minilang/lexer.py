"""Tokenizer for MiniLang source text."""

from __future__ import annotations

import re
from dataclasses import dataclass

KEYWORDS = frozenset(
    {
        "fn", "let", "if", "else", "while", "for", "return",
        "assert", "print", "true", "false",
        "int", "bool", "string", "void",
    }
)

class ParseError(Exception):
    """Syntax error with a 1-based source position."""

    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "keyword", "int", "string", "symbol", "eof"
    text: str
    line: int
    column: int
    offset: int
    value: object = None


def normalize_newlines(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


_TOKEN = re.compile(
    r"""
    (?P<nl>\n)
  | (?P<ws>[ \t]+)
  | (?P<comment>//[^\n]*)
  | (?P<num>[0-9]+)(?P<bad>[A-Za-z_])?
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>")
  | (?P<sym>->|&&|\|\||==|!=|<=|>=|[-+*/%<>!=(){}\[\],;:])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> tuple[list[Token], dict[int, str]]:
    """Split *text* into tokens.

    Returns the token list (terminated by an ``eof`` token) and a map from
    line number to the raw text of every ``///`` doc-comment line.
    """
    tokens: list[Token] = []
    docs: dict[int, str] = {}
    i = 0
    line = 1
    line_start = 0
    n = len(text)
    match = _TOKEN.match
    while i < n:
        m = match(text, i)
        col = i - line_start + 1
        if m is None:
            raise ParseError(line, col, f"unknown token {text[i]!r}")
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = i + 1
        elif kind == "comment":
            if text.startswith("///", i) and not text[line_start:i].strip():
                docs[line] = m.group().rstrip()
        elif kind == "bad":
            raise ParseError(line, col, f"malformed number {m.group()!r}")
        elif kind == "num":
            tokens.append(Token("int", m.group(), line, col, i, int(m.group())))
        elif kind == "word":
            word = m.group()
            tokens.append(Token("keyword" if word in KEYWORDS else "ident", word, line, col, i))
        elif kind == "str":
            i = _lex_string(text, i, line, col, tokens)
            continue
        elif kind == "sym":
            tokens.append(Token("symbol", m.group(), line, col, i))
        i = m.end()
    tokens.append(Token("eof", "", line, i - line_start + 1, n))
    return tokens, docs


_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def _lex_string(text: str, start: int, line: int, col: int, out: list[Token]) -> int:
    chars = []
    i = start + 1
    n = len(text)
    while True:
        if i >= n or text[i] == "\n":
            raise ParseError(line, col, "unterminated string literal")
        c = text[i]
        if c == '"':
            break
        if c == "\\":
            if i + 1 >= n or text[i + 1] not in _ESCAPES:
                raise ParseError(line, col + (i - start), "invalid escape sequence")
            chars.append(_ESCAPES[text[i + 1]])
            i += 2
            continue
        chars.append(c)
        i += 1
    out.append(Token("string", text[start:i + 1], line, col, start, "".join(chars)))
    return i + 1
