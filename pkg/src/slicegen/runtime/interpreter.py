"""Coverage-instrumented tree-walking interpreter for MiniLang test files."""

from __future__ import annotations

import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

from ..minilang import ast as A
from ..minilang.analysis import branch_sites, statement_lines
from ..minilang.lexer import ParseError
from ..minilang.parser import parse_program
from .checker import CompileError, check

PASSED = "passed"
COMPILE_ERROR = "compile_error"
RUNTIME_ERROR = "runtime_error"

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1
MAX_SEQUENCE_LEN = 100_000


@dataclass(frozen=True)
class ExecutionLimits:
    max_steps: int = 1_000_000
    max_call_depth: int = 256


@dataclass
class RawCoverage:
    """Line and branch hits inside the program's functions.

    ``covered_lines`` holds ``(function, line)`` pairs; ``branch_hits`` maps
    ``(function, line, arm)`` to a hit count, with both arms of every site
    present (zero when never taken).
    """

    covered_lines: set = field(default_factory=set)
    branch_hits: dict = field(default_factory=dict)

    @classmethod
    def for_program(cls, program: A.Program) -> "RawCoverage":
        hits = {}
        for f in program.functions:
            for line in branch_sites(f):
                hits[(f.name, line, True)] = 0
                hits[(f.name, line, False)] = 0
        return cls(set(), hits)

    def merge(self, other: "RawCoverage") -> "RawCoverage":
        hits = dict(self.branch_hits)
        for key, n in other.branch_hits.items():
            hits[key] = hits.get(key, 0) + n
        return RawCoverage(self.covered_lines | other.covered_lines, hits)

    def covered_arms(self) -> set:
        return {k for k, n in self.branch_hits.items() if n > 0}

    def lines_of(self, function: str) -> set:
        return {line for fn, line in self.covered_lines if fn == function}

    def to_json(self) -> dict:
        return {
            "covered_lines": sorted([fn, line] for fn, line in self.covered_lines),
            "branch_hits": [
                [fn, line, arm, n] for (fn, line, arm), n in sorted(self.branch_hits.items())
            ],
        }


@dataclass
class ExecutionOutcome:
    status: str
    message: str = ""
    failing_line: Optional[int] = None
    coverage: RawCoverage = field(default_factory=RawCoverage)
    output: tuple = ()

    @property
    def passed(self) -> bool:
        return self.status == PASSED

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "message": self.message,
            "failing_line": self.failing_line,
            "output": list(self.output),
        }


class MiniRuntimeError(Exception):
    def __init__(self, message: str, line: int, function: str):
        super().__init__(message)
        self.message = message
        self.line = line
        self.function = function
        self.test_line: Optional[int] = None  # innermost test-file statement


class _Return(Exception):
    def __init__(self, value):
        self.value = value


def discover_tests(test: A.Program) -> list[A.FunctionDecl]:
    """Test functions: name starts with ``test_`` and takes no parameters."""
    return [f for f in test.functions if f.name.startswith("test_") and not f.params]


@contextmanager
def _recursion_headroom(depth: int):
    old = sys.getrecursionlimit()
    # ~10 Python frames per MiniLang call, plus deep expressions
    need = max(old, depth * 12 + 2000)
    sys.setrecursionlimit(need)
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


def run_test(
    program: A.Program,
    test_source: str,
    limits: ExecutionLimits = ExecutionLimits(),
    trace: Optional[list] = None,
) -> ExecutionOutcome:
    """Check and execute every test function of *test_source* against *program*.

    Each test function runs with freshly initialised globals. All tests are
    executed even after a failure so coverage reflects the whole file; the
    outcome reports the first failure in declaration order. If *trace* is a
    list, line and branch events are appended to it.
    """
    try:
        test = parse_program(test_source, "<test>")
    except ParseError as e:
        return ExecutionOutcome(COMPILE_ERROR, f"parse error: {e.message}", e.line)
    try:
        checker = check(program, test)
    except CompileError as e:
        return ExecutionOutcome(
            COMPILE_ERROR, f"{e.origin} line {e.line}: {e.message}",
            e.line if e.origin == "test" else None,
        )
    tests = discover_tests(test)
    if not tests:
        return ExecutionOutcome(COMPILE_ERROR, "no test_ functions found", None)
    interp = Interpreter(program, test, checker.functions, limits, trace)
    failures = []
    with _recursion_headroom(limits.max_call_depth):
        for t in tests:
            err = interp.run_one(t)
            if err is not None:
                failures.append((t.name, err))
                if err.message == "step limit exceeded":
                    break
    if not failures:
        return ExecutionOutcome(PASSED, "", None, interp.coverage, tuple(interp.output))
    name, err = failures[0]
    where = "" if err.function == name else f" (in {err.function} at line {err.line})"
    message = f"{name}: {err.message}{where}"
    if len(failures) > 1:
        message += f" [+{len(failures) - 1} more failing test(s)]"
    return ExecutionOutcome(
        RUNTIME_ERROR, message, interp.failing_line(err), interp.coverage, tuple(interp.output)
    )


class Interpreter:
    def __init__(self, program, test, functions, limits: ExecutionLimits, trace=None):
        self.program = program
        self.test = test
        self.functions = functions
        self.limits = limits
        self.trace = trace
        self.program_fns = {f.name for f in program.functions}
        self.coverage = RawCoverage.for_program(program)
        self.output: list[str] = []
        self.steps = 0
        self.depth = 0

    def failing_line(self, err: MiniRuntimeError) -> Optional[int]:
        return err.test_line

    def run_one(self, t: A.FunctionDecl) -> Optional[MiniRuntimeError]:
        self.globals = {}
        self.depth = 0
        try:
            for unit, fname in ((self.program, "<program>"), (self.test, "<test>")):
                for g in unit.globals:
                    try:
                        self.globals[g.name] = self.eval(g.value, {}, fname, g.span[0])
                    except MiniRuntimeError as e:
                        if unit is self.test:
                            e.test_line = g.span[0]
                        raise
            self.call(t, [], t.span[0])
        except MiniRuntimeError as e:
            return e
        except RecursionError:
            return MiniRuntimeError("nesting too deep", t.span[0], t.name)
        return None

    # -- calls and statements --------------------------------------------------

    def call(self, f: A.FunctionDecl, args: list, line: int):
        self.depth += 1
        if self.depth > self.limits.max_call_depth:
            raise MiniRuntimeError("call depth exceeded", line, f.name)
        frame = {p.name: a for p, a in zip(f.params, args)}
        try:
            self.block(f.body, frame, f.name)
        except _Return as r:
            return r.value
        finally:
            self.depth -= 1
        if f.return_type != A.VOID:
            raise MiniRuntimeError(f"{f.name} ended without returning a value", f.span[1], f.name)
        return None

    def block(self, block: A.Block, frame: dict, fname: str) -> None:
        for s in block.stmts:
            self.stmt(s, frame, fname)

    def tick(self, line: int, fname: str) -> None:
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise MiniRuntimeError("step limit exceeded", line, fname)

    def stmt(self, s, frame: dict, fname: str) -> None:
        in_program = fname in self.program_fns
        try:
            self.tick(s.line, fname)
            if in_program:
                self.coverage.covered_lines.add((fname, s.line))
            if self.trace is not None:
                self.trace.append(("line", fname, s.line))
            self._exec(s, frame, fname)
        except MiniRuntimeError as e:
            if not in_program and e.test_line is None:
                e.test_line = s.line
            raise

    def branch(self, s, frame: dict, fname: str) -> bool:
        value = self.eval(s.cond, frame, fname, s.line)
        key = (fname, s.line, value)
        if key in self.coverage.branch_hits:
            self.coverage.branch_hits[key] += 1
        if self.trace is not None:
            self.trace.append(("branch", fname, s.line, value))
        return value

    def _exec(self, s, frame: dict, fname: str) -> None:
        if isinstance(s, A.Let):
            frame[s.name] = self.eval(s.value, frame, fname, s.line)
        elif isinstance(s, A.Assign):
            self.assign(s, frame, fname)
        elif isinstance(s, A.If):
            while True:
                if self.branch(s, frame, fname):
                    self.block(s.then, frame, fname)
                    return
                if isinstance(s.orelse, A.If):
                    # the else-if is its own statement on its own line
                    s = s.orelse
                    self.tick(s.line, fname)
                    if fname in self.program_fns:
                        self.coverage.covered_lines.add((fname, s.line))
                    if self.trace is not None:
                        self.trace.append(("line", fname, s.line))
                    continue
                if s.orelse is not None:
                    self.block(s.orelse, frame, fname)
                return
        elif isinstance(s, A.While):
            while self.branch(s, frame, fname):
                self.block(s.body, frame, fname)
                self.tick(s.line, fname)
        elif isinstance(s, A.For):
            if s.init is not None:
                self._exec(s.init, frame, fname)
            while self.branch(s, frame, fname):
                self.block(s.body, frame, fname)
                if s.step is not None:
                    self.assign(s.step, frame, fname)
                self.tick(s.line, fname)
        elif isinstance(s, A.Return):
            value = None if s.value is None else self.eval(s.value, frame, fname, s.line)
            raise _Return(value)
        elif isinstance(s, A.ExprCall):
            self.eval(s.call, frame, fname, s.line)
        elif isinstance(s, A.Assert):
            if not self.eval(s.expr, frame, fname, s.line):
                raise MiniRuntimeError("assertion failed", s.line, fname)
        elif isinstance(s, A.Print):
            self.output.append(to_text(self.eval(s.expr, frame, fname, s.line)))
        else:
            raise TypeError(s)

    def assign(self, s: A.Assign, frame: dict, fname: str) -> None:
        value = self.eval(s.value, frame, fname, s.line)
        target = s.target
        if isinstance(target, A.Name):
            if target.id in frame:
                frame[target.id] = value
            else:
                self.globals[target.id] = value
            return
        arr = self.eval(target.base, frame, fname, s.line)
        idx = self.eval(target.index, frame, fname, s.line)
        self.check_index(arr, idx, s.line, fname)
        arr[idx] = value

    # -- expressions -------------------------------------------------------------

    def check_index(self, seq, idx: int, line: int, fname: str) -> None:
        if not 0 <= idx < len(seq):
            raise MiniRuntimeError(
                f"index {idx} out of bounds for length {len(seq)}", line, fname
            )

    def eval(self, e, frame: dict, fname: str, line: int):
        if isinstance(e, (A.IntLit, A.BoolLit, A.StrLit)):
            return e.value
        if isinstance(e, A.Name):
            if e.id in frame:
                return frame[e.id]
            return self.globals[e.id]
        if isinstance(e, A.Binary):
            return self.binary(e, frame, fname, line)
        if isinstance(e, A.Call):
            args = [self.eval(a, frame, fname, line) for a in e.args]
            if e.func == "len":
                return len(args[0])
            if e.func == "append":
                if len(args[0]) >= MAX_SEQUENCE_LEN:
                    raise MiniRuntimeError("array too long", line, fname)
                return args[0] + [args[1]]
            if e.func == "str":
                return to_text(args[0])
            return self.call(self.functions[e.func], args, line)
        if isinstance(e, A.Unary):
            v = self.eval(e.operand, frame, fname, line)
            return (not v) if e.op == "!" else self.int_result(-v, line, fname)
        if isinstance(e, A.Index):
            seq = self.eval(e.base, frame, fname, line)
            idx = self.eval(e.index, frame, fname, line)
            self.check_index(seq, idx, line, fname)
            return seq[idx]
        if isinstance(e, A.ArrayLit):
            return [self.eval(x, frame, fname, line) for x in e.elements]
        raise TypeError(e)

    def int_result(self, v: int, line: int, fname: str) -> int:
        if not INT_MIN <= v <= INT_MAX:
            raise MiniRuntimeError("integer overflow", line, fname)
        return v

    def binary(self, e: A.Binary, frame: dict, fname: str, line: int):
        op = e.op
        left = self.eval(e.left, frame, fname, line)
        if op == "&&":
            return left and self.eval(e.right, frame, fname, line)
        if op == "||":
            return left or self.eval(e.right, frame, fname, line)
        right = self.eval(e.right, frame, fname, line)
        if op == "+":
            if isinstance(left, str) or isinstance(right, str):
                out = to_text(left) + to_text(right)
                if len(out) > MAX_SEQUENCE_LEN:
                    raise MiniRuntimeError("string too long", line, fname)
                return out
            return self.int_result(left + right, line, fname)
        if op == "-":
            return self.int_result(left - right, line, fname)
        if op == "*":
            return self.int_result(left * right, line, fname)
        if op in ("/", "%"):
            if right == 0:
                raise MiniRuntimeError("division by zero", line, fname)
            q = trunc_div(left, right)
            return self.int_result(q, line, fname) if op == "/" else left - right * q
        if op == "==":
            return left == right
        if op == "!=":
            return left != right
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        if op == ">=":
            return left >= right
        raise TypeError(op)


def trunc_div(a: int, b: int) -> int:
    """Integer division rounding toward zero."""
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def to_text(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return "[" + ", ".join(str(x) for x in v) + "]"
    return str(v)


def statement_line_set(program: A.Program) -> set:
    """All ``(function, line)`` pairs that can appear in RawCoverage.covered_lines."""
    return {(f.name, line) for f in program.functions for line in statement_lines(f)}


@dataclass(frozen=True)
class ErrorDistribution:
    """Shares of compile and runtime errors among non-passing outcomes."""

    compile_errors: int
    runtime_errors: int

    @property
    def failed(self) -> int:
        return self.compile_errors + self.runtime_errors

    @property
    def compile_fraction(self) -> float:
        return self.compile_errors / self.failed if self.failed else 0.0

    @property
    def runtime_fraction(self) -> float:
        return self.runtime_errors / self.failed if self.failed else 0.0


def classify_outcomes(outcomes) -> ErrorDistribution:
    statuses = [o.status for o in outcomes]
    return ErrorDistribution(statuses.count(COMPILE_ERROR), statuses.count(RUNTIME_ERROR))
