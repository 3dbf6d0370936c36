"""Reference implementations used to cross-check the package.

* ``count_decisions`` walks dataclass fields generically instead of using the
  analysis helpers.
* ``PyOracle`` translates a MiniLang program and test file into Python with
  explicit line and condition recording, then runs it. It supports the
  int/bool subset produced by ``minigen``.
* ``stack_balanced`` is a plain bracket scanner.
"""

from __future__ import annotations

import dataclasses
from collections import Counter

from slicegen.minilang import ast as A


def _children(node):
    if isinstance(node, (list, tuple)):
        for x in node:
            yield x
        return
    if dataclasses.is_dataclass(node):
        for f in dataclasses.fields(node):
            yield getattr(node, f.name)


def count_decisions(node) -> int:
    n = 0
    stack = [node]
    while stack:
        cur = stack.pop()
        if isinstance(cur, (A.If, A.While, A.For)):
            n += 1
        if isinstance(cur, A.Binary) and cur.op in ("&&", "||"):
            n += 1
        stack.extend(c for c in _children(cur) if isinstance(c, (list, tuple)) or dataclasses.is_dataclass(c))
    return n


def stack_balanced(text: str) -> bool:
    """Brackets outside ``"..."`` strings and ``//`` comments nest properly
    and every string is closed on its line."""
    pairs = {")": "(", "]": "[", "}": "{"}
    stack = []
    for line in text.split("\n"):
        i = 0
        while i < len(line):
            c = line[i]
            if line.startswith("//", i):
                break
            if c == '"':
                i += 1
                while i < len(line) and line[i] != '"':
                    i += 2 if line[i] == "\\" else 1
                if i >= len(line):
                    return False
            elif c in "([{":
                stack.append(c)
            elif c in ")]}":
                if not stack or stack.pop() != pairs[c]:
                    return False
            i += 1
    return not stack


class OracleAssertion(Exception):
    pass


def _tdiv(a, b):
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _text(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


class PyOracle:
    """Runs a program/test pair through generated Python.

    After ``run()``: ``lines`` is the set of executed (function, line) pairs of
    program functions, ``evals`` counts condition evaluations per site and
    ``arms`` counts outcomes per (function, line, bool).
    """

    def __init__(self, program: A.Program, test: A.Program):
        self.program = program
        self.test = test
        self.program_fns = {f.name for f in program.functions}
        self.lines: set = set()
        self.evals: Counter = Counter()
        self.arms: Counter = Counter()
        self.output: list = []
        self.globals = {}

    # -- translation ----------------------------------------------------------------

    def expr(self, e, local: set) -> str:
        if isinstance(e, A.IntLit):
            return repr(e.value)
        if isinstance(e, A.BoolLit):
            return "True" if e.value else "False"
        if isinstance(e, A.StrLit):
            return repr(e.value)
        if isinstance(e, A.Name):
            return f"L_{e.id}" if e.id in local else f"G[{e.id!r}]"
        if isinstance(e, A.Unary):
            inner = self.expr(e.operand, local)
            return f"(not {inner})" if e.op == "!" else f"(-{inner})"
        if isinstance(e, A.Binary):
            l, r = self.expr(e.left, local), self.expr(e.right, local)
            if e.op == "&&":
                return f"({l} and {r})"
            if e.op == "||":
                return f"({l} or {r})"
            if e.op == "/":
                return f"TDIV({l}, {r})"
            if e.op == "%":
                return f"(lambda a, b: a - b * TDIV(a, b))({l}, {r})"
            return f"({l} {e.op} {r})"
        if isinstance(e, A.Call):
            args = ", ".join(self.expr(a, local) for a in e.args)
            if e.func == "str":
                return f"TEXT({args})"
            if e.func == "len":
                return f"len({args})"
            return f"F_{e.func}({args})"
        raise NotImplementedError(type(e).__name__)

    def block(self, block: A.Block, fn: str, local: set, ind: int, out: list) -> None:
        if not block.stmts:
            out.append("    " * ind + "pass")
        for s in block.stmts:
            self.stmt(s, fn, local, ind, out)

    def hit(self, fn: str, line: int) -> str:
        return f"HIT({fn!r}, {line})" if fn in self.program_fns else "pass"

    def cond(self, fn: str, line: int, e, local: set) -> str:
        c = self.expr(e, local)
        return f"COND({fn!r}, {line}, {c})" if fn in self.program_fns else c

    def simple(self, s, fn: str, local: set) -> str:
        if isinstance(s, A.Let):
            return f"L_{s.name} = {self.expr(s.value, local)}"
        if isinstance(s, A.Assign):
            if not isinstance(s.target, A.Name):
                raise NotImplementedError("indexed assignment")
            return f"{self.expr(s.target, local)} = {self.expr(s.value, local)}"
        raise NotImplementedError(type(s).__name__)

    def stmt(self, s, fn: str, local: set, ind: int, out: list) -> None:
        pad = "    " * ind
        out.append(pad + self.hit(fn, s.line))
        if isinstance(s, (A.Let, A.Assign)):
            out.append(pad + self.simple(s, fn, local))
        elif isinstance(s, A.If):
            out.append(f"{pad}if {self.cond(fn, s.line, s.cond, local)}:")
            self.block(s.then, fn, local, ind + 1, out)
            if isinstance(s.orelse, A.If):
                out.append(f"{pad}else:")
                self.stmt(s.orelse, fn, local, ind + 1, out)
            elif s.orelse is not None:
                out.append(f"{pad}else:")
                self.block(s.orelse, fn, local, ind + 1, out)
        elif isinstance(s, A.While):
            out.append(f"{pad}while {self.cond(fn, s.line, s.cond, local)}:")
            self.block(s.body, fn, local, ind + 1, out)
        elif isinstance(s, A.For):
            if s.init is not None:
                out.append(pad + self.simple(s.init, fn, local))
            out.append(f"{pad}while {self.cond(fn, s.line, s.cond, local)}:")
            self.block(s.body, fn, local, ind + 1, out)
            if s.step is not None:
                out.append(pad + "    " + self.simple(s.step, fn, local))
        elif isinstance(s, A.Return):
            out.append(pad + ("return" if s.value is None else f"return {self.expr(s.value, local)}"))
        elif isinstance(s, A.ExprCall):
            out.append(pad + self.expr(s.call, local))
        elif isinstance(s, A.Assert):
            out.append(f"{pad}if not {self.expr(s.expr, local)}: raise ASSERT({s.line})")
        elif isinstance(s, A.Print):
            out.append(f"{pad}OUT.append(TEXT({self.expr(s.expr, local)}))")
        else:
            raise NotImplementedError(type(s).__name__)

    def function(self, f: A.FunctionDecl) -> str:
        local = {p.name for p in f.params}
        for s in A.iter_stmts(f.body):
            if isinstance(s, A.Let):
                local.add(s.name)
            if isinstance(s, A.For) and isinstance(s.init, A.Let):
                local.add(s.init.name)
        params = ", ".join(f"L_{p.name}" for p in f.params)
        out = [f"def F_{f.name}({params}):"]
        self.block(f.body, f.name, local, 1, out)
        return "\n".join(out)

    # -- execution ------------------------------------------------------------------------

    def run(self) -> list:
        """Run every test with fresh globals; returns the names of failed tests."""
        env = {
            "G": self.globals,
            "TDIV": _tdiv,
            "TEXT": _text,
            "OUT": self.output,
            "HIT": lambda fn, line: self.lines.add((fn, line)),
            "COND": self._cond,
            "ASSERT": OracleAssertion,
        }
        source = "\n\n".join(self.function(f) for f in self.program.functions + self.test.functions)
        exec(compile(source, "<oracle>", "exec"), env)
        failed = []
        for t in self.test.functions:
            if not t.name.startswith("test_") or t.params:
                continue
            self.globals.clear()
            for g in self.program.globals + self.test.globals:
                self.globals[g.name] = eval(self.expr(g.value, set()), env)
            try:
                env[f"F_{t.name}"]()
            except OracleAssertion:
                failed.append(t.name)
        return failed

    def _cond(self, fn: str, line: int, value: bool) -> bool:
        self.evals[(fn, line)] += 1
        self.arms[(fn, line, bool(value))] += 1
        return value
