"""Recursive-descent parser for MiniLang. See docs/minilang.md for the grammar."""

from __future__ import annotations

from dataclasses import replace

from . import ast as A
from .lexer import ParseError, Token, normalize_newlines, tokenize

# Binary operator precedence, lowest first. All levels are left-associative.
PRECEDENCE = (
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
)
BINARY_LEVEL = {op: i for i, ops in enumerate(PRECEDENCE) for op in ops}


def parse_program(source_text: str, source_path: str = "<memory>") -> A.Program:
    text = normalize_newlines(source_text)
    tokens, docs = tokenize(text)
    return _Parser(tokens, docs).program(source_path, text)


def parse_function(source_text: str) -> A.FunctionDecl:
    """Parse text holding exactly one function declaration."""
    prog = parse_program(source_text)
    if len(prog.functions) != 1 or prog.globals:
        raise ParseError(1, 1, "expected exactly one function declaration")
    return prog.functions[0]


class _Parser:
    def __init__(self, tokens: list[Token], docs: dict[int, str]):
        self.toks = tokens
        self.docs = docs
        self.i = 0

    # -- token helpers --------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("symbol", "keyword") and t.text == text

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            self.fail(f"expected {what}")
        return self.advance()

    def fail(self, message: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(t.line, t.column, f"{message}, found {found}")

    # -- declarations ---------------------------------------------------------

    def program(self, source_path: str, text: str) -> A.Program:
        functions: list[A.FunctionDecl] = []
        globals_: list[A.GlobalDecl] = []
        seen_f: set[str] = set()
        seen_g: set[str] = set()
        while self.tok.kind != "eof":
            t = self.tok
            if self.at("fn"):
                f = self.function()
                if f.name in seen_f:
                    raise ParseError(t.line, t.column, f"duplicate function {f.name!r}")
                seen_f.add(f.name)
                functions.append(f)
            elif self.at("let"):
                g = self.global_decl()
                if g.name in seen_g:
                    raise ParseError(t.line, t.column, f"duplicate global {g.name!r}")
                seen_g.add(g.name)
                globals_.append(g)
            else:
                self.fail("expected 'fn' or 'let' declaration")
        return A.Program(tuple(functions), tuple(globals_), source_path, text)

    def doc_for(self, line: int):
        lines = []
        k = line - 1
        while k in self.docs:
            lines.append(self.docs[k])
            k -= 1
        return "\n".join(reversed(lines)) if lines else None

    def global_decl(self) -> A.GlobalDecl:
        start = self.expect("let")
        name = self.expect_ident("global name").text
        typ = None
        if self.at(":"):
            self.advance()
            typ = self.type_()
        self.expect("=")
        value = self.expr()
        end = self.expect(";")
        return A.GlobalDecl(name, typ, value, self.doc_for(start.line), (start.line, end.line))

    def function(self) -> A.FunctionDecl:
        start = self.expect("fn")
        name = self.expect_ident("function name").text
        self.expect("(")
        params: list[A.Param] = []
        names: set[str] = set()
        while not self.at(")"):
            if params:
                self.expect(",")
            pt = self.tok
            pname = self.expect_ident("parameter name").text
            if pname in names:
                raise ParseError(pt.line, pt.column, f"duplicate parameter {pname!r}")
            names.add(pname)
            self.expect(":")
            params.append(A.Param(pname, self.type_()))
        self.expect(")")
        ret = A.VOID
        if self.at("->"):
            self.advance()
            if self.at("void"):
                self.advance()
            else:
                ret = self.type_()
        body, close = self.block()
        return A.FunctionDecl(
            name, tuple(params), ret, body, self.doc_for(start.line), (start.line, close.line)
        )

    def type_(self) -> str:
        t = self.tok
        if t.kind == "keyword" and t.text in (A.INT, A.BOOL, A.STRING):
            self.advance()
            return t.text
        if self.at("["):
            self.advance()
            self.expect("int")
            self.expect("]")
            return A.ARRAY
        self.fail("expected a type")

    # -- statements -----------------------------------------------------------

    def block(self) -> tuple[A.Block, Token]:
        open_ = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("expected '}' to close block opened at line %d" % open_.line)
            stmts.append(self.statement())
        close = self.advance()
        return A.Block(tuple(stmts), open_.line, close.line), close

    def statement(self):
        t = self.tok
        if self.at("let"):
            node = self.let()
        elif self.at("if"):
            return self.if_()
        elif self.at("while"):
            self.advance()
            cond = self.paren_cond()
            body, close = self.block()
            return A.While(cond, body, t.line, close.line, t.offset, close.offset + 1)
        elif self.at("for"):
            return self.for_()
        elif self.at("return"):
            self.advance()
            value = None if self.at(";") else self.expr()
            node = A.Return(value, t.line)
        elif self.at("assert") or self.at("print"):
            kw = self.advance().text
            self.expect("(")
            e = self.expr()
            self.expect(")")
            node = (A.Assert if kw == "assert" else A.Print)(e, t.line)
        elif t.kind == "ident":
            node = self.simple()
        else:
            self.fail("expected a statement")
        end = self.expect(";")
        return _with_extent(node, t, end)

    def let(self) -> A.Let:
        t = self.expect("let")
        name = self.expect_ident("variable name").text
        typ = None
        if self.at(":"):
            self.advance()
            typ = self.type_()
        self.expect("=")
        return A.Let(name, typ, self.expr(), t.line)

    def simple(self):
        """Assignment or call statement (without the trailing ';')."""
        t = self.tok
        target = self.postfix()
        if self.at("="):
            if not isinstance(target, (A.Name, A.Index)):
                self.fail("invalid assignment target")
            self.advance()
            return A.Assign(target, self.expr(), t.line)
        if isinstance(target, A.Call):
            return A.ExprCall(target, t.line)
        raise ParseError(t.line, t.column, "expression statement must be a call or assignment")

    def paren_cond(self):
        self.expect("(")
        e = self.expr()
        self.expect(")")
        return e

    def if_(self) -> A.If:
        t = self.expect("if")
        cond = self.paren_cond()
        then, close = self.block()
        orelse = None
        if self.at("else"):
            self.advance()
            if self.at("if"):
                orelse = self.if_()
                return A.If(cond, then, orelse, t.line, orelse.end_line, t.offset, orelse.end_offset)
            orelse, close = self.block()
        return A.If(cond, then, orelse, t.line, close.line, t.offset, close.offset + 1)

    def for_(self) -> A.For:
        t = self.expect("for")
        self.expect("(")
        init = None
        if not self.at(";"):
            it = self.tok
            init = self.let() if self.at("let") else self.simple()
            if not isinstance(init, (A.Let, A.Assign)):
                raise ParseError(it.line, it.column, "for-loop init must be 'let' or assignment")
            init = _with_extent(init, it, self.tok)
        self.expect(";")
        cond = self.expr()
        self.expect(";")
        step = None
        if not self.at(")"):
            st = self.tok
            step = self.simple()
            if not isinstance(step, A.Assign):
                raise ParseError(st.line, st.column, "for-loop step must be an assignment")
            step = _with_extent(step, st, self.tok)
        self.expect(")")
        body, close = self.block()
        return A.For(init, cond, step, body, t.line, close.line, t.offset, close.offset + 1)

    # -- expressions ----------------------------------------------------------

    def expr(self, level: int = 0):
        if level == len(PRECEDENCE):
            return self.unary()
        left = self.expr(level + 1)
        ops = PRECEDENCE[level]
        while self.tok.kind == "symbol" and self.tok.text in ops:
            op = self.advance()
            right = self.expr(level + 1)
            left = A.Binary(op.text, left, right, op.line, op.column)
        return left

    def unary(self):
        t = self.tok
        if self.at("-") or self.at("!"):
            self.advance()
            return A.Unary(t.text, self.unary(), t.line, t.column)
        return self.postfix()

    def postfix(self):
        e = self.primary()
        while self.at("["):
            t = self.advance()
            idx = self.expr()
            self.expect("]")
            e = A.Index(e, idx, t.line, t.column)
        return e

    def primary(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return A.IntLit(t.value, t.line, t.column)
        if t.kind == "string":
            self.advance()
            return A.StrLit(t.value, t.line, t.column)
        if self.at("true") or self.at("false"):
            self.advance()
            return A.BoolLit(t.text == "true", t.line, t.column)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("["):
            self.advance()
            elems = []
            while not self.at("]"):
                if elems:
                    self.expect(",")
                elems.append(self.expr())
            self.expect("]")
            return A.ArrayLit(tuple(elems), t.line, t.column)
        if t.kind == "ident":
            self.advance()
            if self.at("("):
                self.advance()
                args = []
                while not self.at(")"):
                    if args:
                        self.expect(",")
                    args.append(self.expr())
                self.expect(")")
                return A.Call(t.text, tuple(args), t.line, t.column)
            return A.Name(t.text, t.line, t.column)
        self.fail("expected an expression")


def _with_extent(node, first: Token, last: Token):
    """Return *node* with line/offset extent spanning first..last tokens."""
    return replace(
        node,
        line=first.line,
        end_line=last.line,
        offset=first.offset,
        end_offset=last.offset + len(last.text),
    )
