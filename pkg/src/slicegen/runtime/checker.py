"""Name resolution and type checking for a program plus a test file."""

from __future__ import annotations

from ..minilang import ast as A

BUILTINS = {"len": 1, "append": 2, "str": 1}


class CompileError(Exception):
    def __init__(self, line: int, message: str, origin: str = "test"):
        super().__init__(f"{origin} line {line}: {message}")
        self.line = line
        self.message = message
        self.origin = origin


def _type_name(t) -> str:
    return "void" if t == A.VOID else t


class Checker:
    """Checks a program and test file as one namespace.

    Locals are block-scoped and may not shadow a parameter, a global or another
    visible local, so a single flat frame per call suffices at runtime.
    """

    def __init__(self, program: A.Program, test: A.Program | None = None):
        self.units = [("program", program)] + ([("test", test)] if test is not None else [])
        self.functions: dict[str, A.FunctionDecl] = {}
        self.origin_of: dict[str, str] = {}
        self.global_types: dict[str, str] = {}
        self.global_origin: dict[str, str] = {}
        self.origin = "program"

    def visible(self, name: str, table: dict, origins: dict) -> bool:
        # program code cannot see declarations made by the test file
        return name in table and (self.origin == "test" or origins[name] == "program")

    def check(self) -> None:
        for origin, unit in self.units:
            self.origin = origin
            for f in unit.functions:
                if f.name in BUILTINS:
                    raise CompileError(f.span[0], f"function {f.name!r} shadows a builtin", origin)
                if f.name in self.functions:
                    raise CompileError(
                        f.span[0], f"function {f.name!r} is already declared by the program", origin
                    )
                self.functions[f.name] = f
                self.origin_of[f.name] = origin
        for origin, unit in self.units:
            self.origin = origin
            for g in unit.globals:
                if g.name in self.global_types:
                    raise CompileError(
                        g.span[0], f"global {g.name!r} is already declared by the program", origin
                    )
                t = self.value_expr(g.value, [])
                if g.type is not None and g.type != t:
                    raise CompileError(
                        g.span[0], f"global {g.name!r} declared {g.type} but initialized with {t}", origin
                    )
                self.global_types[g.name] = g.type or t
                self.global_origin[g.name] = origin
        for origin, unit in self.units:
            self.origin = origin
            for f in unit.functions:
                self.function(f)

    def fail(self, line: int, message: str):
        raise CompileError(line, message, self.origin)

    # -- functions and statements --------------------------------------------

    def function(self, f: A.FunctionDecl) -> None:
        self.ret = f.return_type
        scopes = [{p.name: p.type for p in f.params}]
        self.block(f.body, scopes)

    def block(self, block: A.Block, scopes: list) -> None:
        scopes.append({})
        for s in block.stmts:
            self.stmt(s, scopes)
        scopes.pop()

    def declare(self, name: str, typ: str, line: int, scopes: list) -> None:
        if self.visible(name, self.global_types, self.global_origin) or any(
            name in scope for scope in scopes
        ):
            self.fail(line, f"variable {name!r} is already declared")
        scopes[-1][name] = typ

    def stmt(self, s, scopes: list) -> None:
        if isinstance(s, A.Let):
            t = self.value_expr(s.value, scopes)
            if s.type is not None and s.type != t:
                self.fail(s.line, f"cannot initialize {s.type} variable {s.name!r} with {t}")
            self.declare(s.name, s.type or t, s.line, scopes)
        elif isinstance(s, A.Assign):
            target = self.expr(s.target, scopes)
            value = self.value_expr(s.value, scopes)
            if isinstance(s.target, A.Index) and self.expr(s.target.base, scopes) != A.ARRAY:
                self.fail(s.line, "only [int] elements are assignable")
            if target != value:
                self.fail(s.line, f"cannot assign {value} to {target}")
        elif isinstance(s, A.If):
            self.cond(s.cond, s.line, scopes)
            self.block(s.then, scopes)
            if isinstance(s.orelse, A.If):
                self.stmt(s.orelse, scopes)
            elif s.orelse is not None:
                self.block(s.orelse, scopes)
        elif isinstance(s, A.While):
            self.cond(s.cond, s.line, scopes)
            self.block(s.body, scopes)
        elif isinstance(s, A.For):
            scopes.append({})
            if s.init is not None:
                self.stmt(s.init, scopes)
            self.cond(s.cond, s.line, scopes)
            if s.step is not None:
                self.stmt(s.step, scopes)
            self.block(s.body, scopes)
            scopes.pop()
        elif isinstance(s, A.Return):
            if s.value is None:
                if self.ret != A.VOID:
                    self.fail(s.line, f"missing return value of type {self.ret}")
            else:
                t = self.value_expr(s.value, scopes)
                if self.ret == A.VOID:
                    self.fail(s.line, "void function cannot return a value")
                if t != self.ret:
                    self.fail(s.line, f"returns {t} but function is declared {self.ret}")
        elif isinstance(s, A.ExprCall):
            self.expr(s.call, scopes)
        elif isinstance(s, A.Assert):
            self.cond(s.expr, s.line, scopes, what="assert argument")
        elif isinstance(s, A.Print):
            self.value_expr(s.expr, scopes)
        else:
            raise TypeError(s)

    def cond(self, e, line: int, scopes: list, what: str = "condition") -> None:
        t = self.expr(e, scopes)
        if t != A.BOOL:
            self.fail(line, f"{what} must be bool, got {_type_name(t)}")

    def value_expr(self, e, scopes) -> str:
        t = self.expr(e, scopes)
        if t == A.VOID:
            self.fail(e.line, "void call used as a value")
        return t

    # -- expressions ----------------------------------------------------------

    def lookup(self, name: str, line: int, scopes: list) -> str:
        for scope in reversed(scopes):
            if name in scope:
                return scope[name]
        if self.visible(name, self.global_types, self.global_origin):
            return self.global_types[name]
        self.fail(line, f"unknown variable {name!r}")

    def expr(self, e, scopes: list) -> str:
        if isinstance(e, A.IntLit):
            return A.INT
        if isinstance(e, A.BoolLit):
            return A.BOOL
        if isinstance(e, A.StrLit):
            return A.STRING
        if isinstance(e, A.ArrayLit):
            for x in e.elements:
                if self.value_expr(x, scopes) != A.INT:
                    self.fail(x.line, "array elements must be int")
            return A.ARRAY
        if isinstance(e, A.Name):
            return self.lookup(e.id, e.line, scopes)
        if isinstance(e, A.Unary):
            t = self.value_expr(e.operand, scopes)
            want = A.INT if e.op == "-" else A.BOOL
            if t != want:
                self.fail(e.line, f"operator {e.op!r} expects {want}, got {t}")
            return want
        if isinstance(e, A.Binary):
            return self.binary(e, scopes)
        if isinstance(e, A.Index):
            base = self.value_expr(e.base, scopes)
            if base not in (A.ARRAY, A.STRING):
                self.fail(e.line, f"cannot index into {base}")
            if self.value_expr(e.index, scopes) != A.INT:
                self.fail(e.line, "index must be int")
            return A.INT if base == A.ARRAY else A.STRING
        if isinstance(e, A.Call):
            return self.call(e, scopes)
        raise TypeError(e)

    def binary(self, e: A.Binary, scopes: list) -> str:
        lt = self.value_expr(e.left, scopes)
        rt = self.value_expr(e.right, scopes)
        op = e.op
        if op == "+" and A.STRING in (lt, rt):
            if A.ARRAY in (lt, rt):
                self.fail(e.line, "cannot concatenate [int] with string")
            return A.STRING
        if op in ("+", "-", "*", "/", "%", "<", "<=", ">", ">="):
            if lt != A.INT or rt != A.INT:
                self.fail(e.line, f"operator {op!r} expects int operands, got {lt} and {rt}")
            return A.INT if op in "+-*/%" else A.BOOL
        if op in ("==", "!="):
            if lt != rt:
                self.fail(e.line, f"cannot compare {lt} with {rt}")
            return A.BOOL
        if lt != A.BOOL or rt != A.BOOL:
            self.fail(e.line, f"operator {op!r} expects bool operands, got {lt} and {rt}")
        return A.BOOL

    def call(self, e: A.Call, scopes: list) -> str:
        args = [self.value_expr(a, scopes) for a in e.args]
        if e.func in BUILTINS:
            if len(args) != BUILTINS[e.func]:
                self.fail(e.line, f"{e.func}() takes {BUILTINS[e.func]} argument(s), got {len(args)}")
            if e.func == "len":
                if args[0] not in (A.STRING, A.ARRAY):
                    self.fail(e.line, f"len() expects string or [int], got {args[0]}")
                return A.INT
            if e.func == "append":
                if args != [A.ARRAY, A.INT]:
                    self.fail(e.line, "append() expects ([int], int)")
                return A.ARRAY
            if args[0] == A.ARRAY:
                self.fail(e.line, "str() expects int, bool or string")
            return A.STRING
        f = self.functions.get(e.func)
        if f is None or not self.visible(e.func, self.functions, self.origin_of):
            self.fail(e.line, f"unknown function {e.func!r}")
        if len(args) != len(f.params):
            self.fail(
                e.line, f"{e.func}() takes {len(f.params)} argument(s), got {len(args)}"
            )
        for i, (a, p) in enumerate(zip(args, f.params), 1):
            if a != p.type:
                self.fail(e.line, f"argument {i} of {e.func}() must be {p.type}, got {a}")
        return f.return_type


def check(program: A.Program, test: A.Program | None = None) -> Checker:
    c = Checker(program, test)
    c.check()
    return c
