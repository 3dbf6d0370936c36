"""Canonical pretty-printer. ``parse(print(ast)) == ast`` for every valid tree."""

from __future__ import annotations

from . import ast as A
from .parser import BINARY_LEVEL

INDENT = "    "
_UNARY_LEVEL = len(BINARY_LEVEL)  # binds tighter than every binary operator


def format_program(prog: A.Program) -> str:
    parts = []
    for g in prog.globals:
        parts.append(_doc_lines(g.doc, "") + format_global(g))
    for f in prog.functions:
        parts.append(_doc_lines(f.doc, "") + format_function(f))
    return "\n\n".join(parts) + "\n"


def _doc_lines(doc, indent: str) -> str:
    if not doc:
        return ""
    return "".join(f"{indent}{line}\n" for line in doc.split("\n"))


def format_global(g: A.GlobalDecl) -> str:
    typ = f": {g.type}" if g.type else ""
    return f"let {g.name}{typ} = {format_expr(g.value)};"


def format_function(f: A.FunctionDecl) -> str:
    params = ", ".join(f"{p.name}: {p.type}" for p in f.params)
    ret = "" if f.return_type == A.VOID else f" -> {f.return_type}"
    return f"fn {f.name}({params}){ret} " + _block(f.body, 0)


def _block(block: A.Block, depth: int) -> str:
    lines = ["{"]
    for s in block.stmts:
        lines.append(INDENT * (depth + 1) + format_stmt(s, depth + 1))
    lines.append(INDENT * depth + "}")
    return "\n".join(lines)


def format_stmt(s, depth: int = 0) -> str:
    if isinstance(s, A.Let):
        typ = f": {s.type}" if s.type else ""
        return f"let {s.name}{typ} = {format_expr(s.value)};"
    if isinstance(s, A.Assign):
        return _simple(s) + ";"
    if isinstance(s, A.If):
        out = f"if ({format_expr(s.cond)}) " + _block(s.then, depth)
        if isinstance(s.orelse, A.If):
            out += " else " + format_stmt(s.orelse, depth)
        elif s.orelse is not None:
            out += " else " + _block(s.orelse, depth)
        return out
    if isinstance(s, A.While):
        return f"while ({format_expr(s.cond)}) " + _block(s.body, depth)
    if isinstance(s, A.For):
        init = "" if s.init is None else _simple(s.init)
        step = "" if s.step is None else _simple(s.step)
        return f"for ({init}; {format_expr(s.cond)}; {step}) " + _block(s.body, depth)
    if isinstance(s, A.Return):
        return "return;" if s.value is None else f"return {format_expr(s.value)};"
    if isinstance(s, A.ExprCall):
        return format_expr(s.call) + ";"
    if isinstance(s, A.Assert):
        return f"assert({format_expr(s.expr)});"
    if isinstance(s, A.Print):
        return f"print({format_expr(s.expr)});"
    raise TypeError(f"not a statement: {s!r}")


def _simple(s) -> str:
    if isinstance(s, A.Let):
        return format_stmt(s)[:-1]
    return f"{format_expr(s.target)} = {format_expr(s.value)}"


def format_expr(e, parent_level: int = -1, right: bool = False) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.StrLit):
        return quote_string(e.value)
    if isinstance(e, A.ArrayLit):
        return "[" + ", ".join(format_expr(x) for x in e.elements) + "]"
    if isinstance(e, A.Name):
        return e.id
    if isinstance(e, A.Call):
        return f"{e.func}(" + ", ".join(format_expr(x) for x in e.args) + ")"
    if isinstance(e, A.Index):
        return f"{format_expr(e.base, _UNARY_LEVEL + 1)}[{format_expr(e.index)}]"
    if isinstance(e, A.Unary):
        text = e.op + format_expr(e.operand, _UNARY_LEVEL)
        return f"({text})" if parent_level > _UNARY_LEVEL else text
    if isinstance(e, A.Binary):
        level = BINARY_LEVEL[e.op]
        text = (
            f"{format_expr(e.left, level)} {e.op} {format_expr(e.right, level, right=True)}"
        )
        if level < parent_level or (level == parent_level and right):
            return f"({text})"
        return text
    raise TypeError(f"not an expression: {e!r}")


def quote_string(value: str) -> str:
    out = value.replace("\\", "\\\\").replace('"', '\\"')
    return '"' + out.replace("\n", "\\n").replace("\t", "\\t") + '"'
