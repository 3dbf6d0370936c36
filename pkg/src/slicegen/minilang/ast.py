"""Immutable AST for MiniLang.

Source positions are excluded from equality so that a pretty-printed and
re-parsed tree compares equal to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

INT = "int"
BOOL = "bool"
STRING = "string"
ARRAY = "[int]"
VOID = "void"
VALUE_TYPES = (INT, BOOL, STRING, ARRAY)


def pos():
    return field(default=0, compare=False, repr=False)


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int
    line: int = pos()
    column: int = pos()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    line: int = pos()
    column: int = pos()


@dataclass(frozen=True)
class StrLit:
    value: str
    line: int = pos()
    column: int = pos()


@dataclass(frozen=True)
class ArrayLit:
    elements: tuple
    line: int = pos()
    column: int = pos()


@dataclass(frozen=True)
class Name:
    id: str
    line: int = pos()
    column: int = pos()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    line: int = pos()
    column: int = pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    line: int = pos()
    column: int = pos()


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple
    line: int = pos()
    column: int = pos()


@dataclass(frozen=True)
class Index:
    base: "Expr"
    index: "Expr"
    line: int = pos()
    column: int = pos()


Expr = Union[IntLit, BoolLit, StrLit, ArrayLit, Name, Unary, Binary, Call, Index]


# -- statements --------------------------------------------------------------
#
# Every statement records the line it starts on (``line``), the line it ends on
# (``end_line``) and character offsets into the source text. ``offset`` points
# at the statement's first character; ``end_offset`` is one past its last.


@dataclass(frozen=True)
class Block:
    stmts: tuple
    line: int = pos()
    end_line: int = pos()


@dataclass(frozen=True)
class Let:
    name: str
    type: Optional[str]
    value: Expr
    line: int = pos()
    end_line: int = pos()
    offset: int = pos()
    end_offset: int = pos()
    kind = "local-decl"


@dataclass(frozen=True)
class Assign:
    target: Union[Name, Index]
    value: Expr
    line: int = pos()
    end_line: int = pos()
    offset: int = pos()
    end_offset: int = pos()
    kind = "assign"


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Block
    orelse: Union[Block, "If", None]
    line: int = pos()
    end_line: int = pos()
    offset: int = pos()
    end_offset: int = pos()
    kind = "if"


@dataclass(frozen=True)
class While:
    cond: Expr
    body: Block
    line: int = pos()
    end_line: int = pos()
    offset: int = pos()
    end_offset: int = pos()
    kind = "while"


@dataclass(frozen=True)
class For:
    init: Union[Let, Assign, None]
    cond: Expr
    step: Optional[Assign]
    body: Block
    line: int = pos()
    end_line: int = pos()
    offset: int = pos()
    end_offset: int = pos()
    kind = "for"


@dataclass(frozen=True)
class Return:
    value: Optional[Expr]
    line: int = pos()
    end_line: int = pos()
    offset: int = pos()
    end_offset: int = pos()
    kind = "return"


@dataclass(frozen=True)
class ExprCall:
    call: Call
    line: int = pos()
    end_line: int = pos()
    offset: int = pos()
    end_offset: int = pos()
    kind = "expr-call"


@dataclass(frozen=True)
class Assert:
    expr: Expr
    line: int = pos()
    end_line: int = pos()
    offset: int = pos()
    end_offset: int = pos()
    kind = "assert"


@dataclass(frozen=True)
class Print:
    expr: Expr
    line: int = pos()
    end_line: int = pos()
    offset: int = pos()
    end_offset: int = pos()
    kind = "print"


Stmt = Union[Let, Assign, If, While, For, Return, ExprCall, Assert, Print]
DECISION_STMTS = (If, While, For)


# -- declarations ------------------------------------------------------------


@dataclass(frozen=True)
class Param:
    name: str
    type: str


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    params: tuple
    return_type: str
    body: Block
    doc: Optional[str] = field(default=None, compare=False)
    span: tuple = field(default=(0, 0), compare=False)

    @property
    def first_line(self) -> int:
        return self.span[0]

    @property
    def last_line(self) -> int:
        return self.span[1]


@dataclass(frozen=True)
class GlobalDecl:
    name: str
    type: Optional[str]
    value: Expr
    doc: Optional[str] = field(default=None, compare=False)
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Program:
    functions: tuple
    globals: tuple
    source_path: str = field(default="", compare=False)
    source_text: str = field(default="", compare=False, repr=False)

    def function(self, name: str) -> Optional[FunctionDecl]:
        for f in self.functions:
            if f.name == name:
                return f
        return None

    def global_decl(self, name: str) -> Optional[GlobalDecl]:
        for g in self.globals:
            if g.name == name:
                return g
        return None

    def lines(self, first: int, last: int) -> list[str]:
        return self.source_text.split("\n")[first - 1:last]


def iter_stmts(block: Block):
    """Yield every statement in *block*, depth first, in source order."""
    for stmt in block.stmts:
        yield stmt
        yield from iter_stmts_of(stmt)


def iter_stmts_of(stmt):
    if isinstance(stmt, If):
        yield from iter_stmts(stmt.then)
        if isinstance(stmt.orelse, If):
            yield stmt.orelse
            yield from iter_stmts_of(stmt.orelse)
        elif stmt.orelse is not None:
            yield from iter_stmts(stmt.orelse)
    elif isinstance(stmt, (While, For)):
        yield from iter_stmts(stmt.body)


def stmt_exprs(stmt) -> list:
    """Expressions owned directly by *stmt* (not by nested statements)."""
    if isinstance(stmt, Let):
        return [stmt.value]
    if isinstance(stmt, Assign):
        return [stmt.target, stmt.value]
    if isinstance(stmt, (If, While)):
        return [stmt.cond]
    if isinstance(stmt, For):
        out = []
        if stmt.init is not None:
            out.extend(stmt_exprs(stmt.init))
        out.append(stmt.cond)
        if stmt.step is not None:
            out.extend(stmt_exprs(stmt.step))
        return out
    if isinstance(stmt, Return):
        return [] if stmt.value is None else [stmt.value]
    if isinstance(stmt, ExprCall):
        return [stmt.call]
    if isinstance(stmt, (Assert, Print)):
        return [stmt.expr]
    raise TypeError(f"not a statement: {stmt!r}")


def iter_exprs(expr):
    """Yield *expr* and all of its sub-expressions, pre-order."""
    yield expr
    if isinstance(expr, ArrayLit):
        for e in expr.elements:
            yield from iter_exprs(e)
    elif isinstance(expr, Unary):
        yield from iter_exprs(expr.operand)
    elif isinstance(expr, Binary):
        yield from iter_exprs(expr.left)
        yield from iter_exprs(expr.right)
    elif isinstance(expr, Call):
        for a in expr.args:
            yield from iter_exprs(a)
    elif isinstance(expr, Index):
        yield from iter_exprs(expr.base)
        yield from iter_exprs(expr.index)
