"""Seeded random MiniLang generators for property and acceptance tests.

Generated code stays inside a small, always-terminating subset: int and bool
values, loops with literal bounds, values kept small with ``% 97`` and no
recursion. Every generator also reports what it emitted (decision count,
statement lines) so tests can compare against construction-time facts.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

CMP = ("<", "<=", ">", ">=", "==", "!=")


@dataclass
class GenFunction:
    name: str
    arity: int
    lines: list
    decisions: int  # if/while/for statements plus && and || operators


@dataclass
class _Scope:
    ints: list = field(default_factory=list)
    bools: list = field(default_factory=list)
    assignable: list = field(default_factory=list)


class MiniGen:
    def __init__(self, seed: int, max_depth: int = 3, max_stmts: int = 4):
        self.rng = random.Random(seed)
        self.max_depth = max_depth
        self.max_stmts = max_stmts
        self.counter = 0
        self.decisions = 0
        self.globals: list[str] = []
        self.callable: list[tuple[str, int]] = []

    def fresh(self, prefix: str) -> str:
        self.counter += 1
        return f"{prefix}{self.counter}"

    # -- expressions ------------------------------------------------------------

    def int_expr(self, scope: _Scope, depth: int = 0) -> str:
        r = self.rng.random()
        names = scope.ints + self.globals
        if depth >= 2 or r < 0.3:
            if names and self.rng.random() < 0.7:
                return self.rng.choice(names)
            return str(self.rng.randint(-5, 9))
        if r < 0.75:
            op = self.rng.choice(("+", "-", "+", "*"))
            right = str(self.rng.randint(0, 4)) if op == "*" else self.int_expr(scope, depth + 1)
            return f"{self.int_expr(scope, depth + 1)} {op} {right}"
        if r < 0.85:
            op = self.rng.choice(("/", "%"))
            return f"({self.int_expr(scope, depth + 1)}) {op} {self.rng.randint(1, 7)}"
        if r < 0.92 and self.callable:
            name, arity = self.rng.choice(self.callable)
            args = ", ".join(self.int_expr(scope, 2) for _ in range(arity))
            return f"{name}({args})"
        return f"-({self.int_expr(scope, depth + 1)})"

    def bool_expr(self, scope: _Scope, depth: int = 0) -> str:
        r = self.rng.random()
        if depth >= 2 or r < 0.45:
            if scope.bools and self.rng.random() < 0.2:
                return self.rng.choice(scope.bools)
            if self.rng.random() < 0.05:
                return self.rng.choice(("true", "false"))
            return f"{self.int_expr(scope, 1)} {self.rng.choice(CMP)} {self.int_expr(scope, 1)}"
        if r < 0.85:
            self.decisions += 1
            op = self.rng.choice(("&&", "||"))
            return f"({self.bool_expr(scope, depth + 1)}) {op} ({self.bool_expr(scope, depth + 1)})"
        return f"!({self.bool_expr(scope, depth + 1)})"

    def bounded(self, expr: str) -> str:
        return f"({expr}) % 97"

    # -- statements ---------------------------------------------------------------

    def block(self, scope: _Scope, depth: int, indent: int, out: list) -> None:
        inner = _Scope(list(scope.ints), list(scope.bools), list(scope.assignable))
        n = self.rng.randint(1 if depth else 2, self.max_stmts)
        for _ in range(n):
            self.stmt(inner, depth, indent, out)

    def stmt(self, scope: _Scope, depth: int, indent: int, out: list) -> None:
        pad = "    " * indent
        kinds = ["let", "let", "assign", "boolet", "print"]
        if depth < self.max_depth:
            kinds += ["if", "if", "for", "while"]
        if self.globals:
            kinds.append("global")
        if depth > 0:
            kinds.append("return")
        kind = self.rng.choice(kinds)
        if kind == "let":
            name = self.fresh("v")
            out.append(f"{pad}let {name} = {self.bounded(self.int_expr(scope))};")
            scope.ints.append(name)
            scope.assignable.append(name)
        elif kind == "boolet":
            name = self.fresh("b")
            out.append(f"{pad}let {name}: bool = {self.bool_expr(scope)};")
            scope.bools.append(name)
        elif kind == "assign" and scope.assignable:
            name = self.rng.choice(scope.assignable)
            out.append(f"{pad}{name} = {self.bounded(self.int_expr(scope))};")
        elif kind == "global":
            g = self.rng.choice(self.globals)
            out.append(f"{pad}{g} = {self.bounded(g + ' + ' + self.int_expr(scope))};")
        elif kind == "print":
            out.append(f"{pad}print({self.int_expr(scope)});")
        elif kind == "return":
            out.append(f"{pad}return {self.int_expr(scope)};")
        elif kind == "if":
            self.decisions += 1
            out.append(f"{pad}if ({self.bool_expr(scope)}) {{")
            self.block(scope, depth + 1, indent + 1, out)
            while self.rng.random() < 0.3:
                self.decisions += 1
                out.append(f"{pad}}} else if ({self.bool_expr(scope)}) {{")
                self.block(scope, depth + 1, indent + 1, out)
            if self.rng.random() < 0.4:
                out.append(f"{pad}}} else {{")
                self.block(scope, depth + 1, indent + 1, out)
            out.append(f"{pad}}}")
        elif kind == "for":
            self.decisions += 1
            i = self.fresh("i")
            bound = self.rng.randint(0, 3)
            out.append(f"{pad}for (let {i} = 0; {i} < {bound}; {i} = {i} + 1) {{")
            body = _Scope(scope.ints + [i], list(scope.bools), list(scope.assignable))
            self.block(body, depth + 1, indent + 1, out)
            out.append(f"{pad}}}")
        elif kind == "while":
            self.decisions += 1
            w = self.fresh("w")
            out.append(f"{pad}let {w} = 0;")
            cond = f"{w} < {self.rng.randint(0, 3)}"
            if self.rng.random() < 0.5:
                self.decisions += 1
                cond = f"{cond} && ({self.bool_expr(scope, 1)})"
            out.append(f"{pad}while ({cond}) {{")
            out.append(f"{pad}    {w} = {w} + 1;")
            body = _Scope(scope.ints + [w], list(scope.bools), list(scope.assignable))
            self.block(body, depth + 1, indent + 1, out)
            out.append(f"{pad}}}")
        else:
            name = self.fresh("v")
            out.append(f"{pad}let {name} = {self.rng.randint(0, 9)};")
            scope.ints.append(name)
            scope.assignable.append(name)

    # -- declarations ---------------------------------------------------------------

    def function(self, name: str | None = None, doc: bool = False) -> GenFunction:
        name = name or self.fresh("f")
        arity = self.rng.randint(0, 3)
        params = [self.fresh("p") for _ in range(arity)]
        self.decisions = 0
        scope = _Scope(list(params), [], list(params))
        lines = []
        if doc:
            lines.append(f"/// Generated function {name}.")
        lines.append(f"fn {name}({', '.join(p + ': int' for p in params)}) -> int {{")
        self.block(scope, 0, 1, lines)
        lines.append(f"    return {self.int_expr(scope)};")
        lines.append("}")
        return GenFunction(name, arity, lines, self.decisions)

    def program(self, n_functions: int = 3, n_globals: int = 1) -> tuple[str, list[GenFunction]]:
        lines, fns = [], []
        for _ in range(n_globals):
            g = self.fresh("g")
            lines.append(f"let {g}: int = {self.rng.randint(-3, 9)};")
            self.globals.append(g)
        for _ in range(n_functions):
            f = self.function(doc=self.rng.random() < 0.3)
            if lines:
                lines.append("")
            lines.extend(f.lines)
            fns.append(f)
            self.callable.append((f.name, f.arity))
        return "\n".join(lines) + "\n", fns

    def call(self, fns: list[GenFunction]) -> str:
        f = self.rng.choice(fns)
        return f"{f.name}({', '.join(str(self.rng.randint(-6, 9)) for _ in range(f.arity))})"

    def test_file(self, fns: list[GenFunction], n_tests: int = 3, helpers: bool = True,
                  asserts: bool = True) -> str:
        """Tests that call program functions; optional test-only helpers and globals."""
        out = []
        helper_names = []
        if helpers and self.rng.random() < 0.7:
            tg = self.fresh("tg")
            out.append(f"let {tg}: int = {self.rng.randint(0, 5)};")
            out.append("")
            h = self.fresh("helper")
            out.append("/// Shifts a value by the test global.")
            out.append(f"fn {h}(x: int) -> int {{")
            out.append(f"    {tg} = {tg} + 1;")
            out.append(f"    return x + {tg};")
            out.append("}")
            out.append("")
            helper_names.append(h)
        for _ in range(n_tests):
            t = self.fresh("test_case_")
            out.append(f"fn {t}() {{")
            for _ in range(self.rng.randint(1, 3)):
                r = self.fresh("r")
                call = self.call(fns)
                if helper_names and self.rng.random() < 0.4:
                    call = f"{self.rng.choice(helper_names)}({call})"
                out.append(f"    let {r} = {call};")
                if asserts and self.rng.random() < 0.6:
                    out.append(f"    assert({r} == {r});")
            out.append("}")
            out.append("")
        return "\n".join(out)


def gen_function(seed: int) -> tuple[str, GenFunction]:
    g = MiniGen(seed, max_depth=3, max_stmts=3)
    f = g.function("focal")
    return "\n".join(f.lines) + "\n", f


def gen_pair(seed: int, n_tests: int = 3, helpers: bool = False) -> tuple[str, str, list[GenFunction]]:
    g = MiniGen(seed, max_depth=3, max_stmts=3)
    program, fns = g.program(n_functions=g.rng.randint(1, 3), n_globals=g.rng.randint(0, 2))
    return program, g.test_file(fns, n_tests, helpers=helpers), fns


def mutate(source: str, rng: random.Random, n: int = 4) -> str:
    """Insert or delete brackets, quotes and comment markers at random spots."""
    chars = list(source)
    noise = ["(", ")", "{", "}", "[", "]", '"', "//", "\\", "\n"]
    for _ in range(n):
        if chars and rng.random() < 0.5:
            del chars[rng.randrange(len(chars))]
        else:
            chars.insert(rng.randint(0, len(chars)), rng.choice(noise))
    return "".join(chars)
