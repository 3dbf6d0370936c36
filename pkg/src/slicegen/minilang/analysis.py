"""Static measurements over parsed functions."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from . import ast as A

COMPLEX_THRESHOLD = 10
SHORT_CIRCUIT_OPS = ("&&", "||")


@dataclass(frozen=True)
class ComplexityScore:
    decisions: int

    @property
    def cyclomatic(self) -> int:
        return self.decisions + 1

    def is_complex(self, threshold: int = COMPLEX_THRESHOLD) -> bool:
        return self.cyclomatic > threshold


def cyclomatic_complexity(f: A.FunctionDecl) -> ComplexityScore:
    """McCabe complexity: if/while/for statements plus short-circuit operators, plus one."""
    return ComplexityScore(sum(decisions_by_line(f.body).values()))


def decisions_by_line(block: A.Block) -> Counter:
    """Decision points in *block*, keyed by the line they occur on."""
    counts: Counter = Counter()
    for stmt in A.iter_stmts(block):
        if isinstance(stmt, A.DECISION_STMTS):
            counts[stmt.line] += 1
        for expr in A.stmt_exprs(stmt):
            for e in A.iter_exprs(expr):
                if isinstance(e, A.Binary) and e.op in SHORT_CIRCUIT_OPS:
                    counts[e.line] += 1
    return counts


def stmt_decisions(stmt) -> int:
    """Decision points inside *stmt*, nested statements included."""
    return sum(decisions_by_line(A.Block((stmt,))).values())


def statement_lines(f: A.FunctionDecl) -> list[int]:
    """Sorted lines on which an executable statement starts."""
    return sorted({s.line for s in A.iter_stmts(f.body)})


def branch_sites(f: A.FunctionDecl) -> list[int]:
    """Sorted lines carrying an if/while/for condition (one two-armed site per line)."""
    return sorted({s.line for s in A.iter_stmts(f.body) if isinstance(s, A.DECISION_STMTS)})


def called_names(f: A.FunctionDecl) -> list[str]:
    """Callee names in call-site order, first occurrence only."""
    seen: dict[str, None] = {}
    for stmt in A.iter_stmts(f.body):
        for expr in A.stmt_exprs(stmt):
            for e in A.iter_exprs(expr):
                if isinstance(e, A.Call):
                    seen.setdefault(e.func, None)
    return list(seen)


def referenced_names(f: A.FunctionDecl) -> list[str]:
    """Variable names read or written in *f*, in source order, first occurrence only."""
    seen: dict[str, None] = {}
    for stmt in A.iter_stmts(f.body):
        for expr in A.stmt_exprs(stmt):
            for e in A.iter_exprs(expr):
                if isinstance(e, A.Name):
                    seen.setdefault(e.id, None)
    return list(seen)
