"""The MiniLang target language: parsing, printing and static measurements."""

from .analysis import (
    COMPLEX_THRESHOLD,
    ComplexityScore,
    branch_sites,
    called_names,
    cyclomatic_complexity,
    statement_lines,
)
from .ast import FunctionDecl, GlobalDecl, Program
from .lexer import ParseError
from .parser import parse_function, parse_program
from .printer import format_program

__all__ = [
    "COMPLEX_THRESHOLD",
    "ComplexityScore",
    "FunctionDecl",
    "GlobalDecl",
    "ParseError",
    "Program",
    "branch_sites",
    "called_names",
    "cyclomatic_complexity",
    "format_program",
    "parse_function",
    "parse_program",
    "statement_lines",
]
