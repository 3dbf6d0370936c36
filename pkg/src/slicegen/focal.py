"""Focal-method selection and dependency context."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .minilang import ast as A
from .minilang.analysis import (
    COMPLEX_THRESHOLD,
    ComplexityScore,
    called_names,
    cyclomatic_complexity,
    referenced_names,
)
from .minilang.lexer import ParseError
from .minilang.parser import parse_program
from .runtime.checker import BUILTINS

log = logging.getLogger(__name__)


class EmptyProjectError(Exception):
    pass


@dataclass(frozen=True)
class FocalMethod:
    function: A.FunctionDecl
    complexity: ComplexityScore
    qualified_name: str
    source_text: str
    program: A.Program = field(compare=False, repr=False)

    @property
    def name(self) -> str:
        return self.function.name

    @property
    def span(self) -> tuple:
        return self.function.span

    @property
    def file(self) -> str:
        return self.qualified_name.split("::")[0]


@dataclass(frozen=True)
class ContextBundle:
    global_decls: tuple = ()
    callee_bodies: tuple = ()  # (name, verbatim source); empty source if unknown
    callee_docs: tuple = ()  # (name, doc text)
    focal_doc: Optional[str] = None


@dataclass
class Project:
    root: Path
    programs: list  # Program, sorted by relative path
    skipped: list  # (relative path, ParseError)


def load_project(root) -> Project:
    root = Path(root)
    paths = sorted(root.rglob("*.mini"), key=lambda p: p.relative_to(root).as_posix())
    if not paths:
        raise EmptyProjectError(f"no .mini files under {root}")
    programs, skipped = [], []
    for path in paths:
        rel = path.relative_to(root).as_posix()
        text = path.read_text(encoding="utf-8")
        try:
            programs.append(parse_program(text, rel))
        except ParseError as e:
            log.warning("skipping %s: %s", rel, e)
            skipped.append((rel, e))
    return Project(root, programs, skipped)


def function_source(program: A.Program, f: A.FunctionDecl) -> str:
    return "\n".join(program.lines(*f.span))


def focal_methods(project: Project, threshold: int = COMPLEX_THRESHOLD) -> list[FocalMethod]:
    out = []
    for prog in project.programs:
        for f in prog.functions:
            cc = cyclomatic_complexity(f)
            if cc.cyclomatic > threshold:
                out.append(
                    FocalMethod(f, cc, f"{prog.source_path}::{f.name}", function_source(prog, f), prog)
                )
    out.sort(key=lambda m: (m.file, m.span[0]))
    return out


def scan_project(root, threshold: int = COMPLEX_THRESHOLD) -> list[FocalMethod]:
    """All functions under *root* whose cyclomatic complexity exceeds *threshold*."""
    return focal_methods(load_project(root), threshold)


def format_scan_line(m: FocalMethod) -> str:
    return f"{m.qualified_name}\t{m.complexity.cyclomatic}\t{m.span[0]}-{m.span[1]}"


def _resolve(name: str, home: A.Program, programs) -> tuple:
    """Find *name*, preferring the focal method's own file."""
    for prog in [home] + [p for p in programs if p is not home]:
        f = prog.function(name)
        if f is not None:
            return prog, f
    return None, None


def build_context(programs, focal: FocalMethod, depth: int = 1) -> ContextBundle:
    """Callee bodies and docs (up to *depth* call levels) plus referenced globals."""
    home = focal.program
    programs = list(programs)
    bodies: dict[str, str] = {}
    docs: dict[str, str] = {}
    frontier = [focal.function]
    seen = {focal.name}
    for _ in range(depth):
        nxt = []
        for caller in frontier:
            for name in called_names(caller):
                if name in seen or name in BUILTINS:
                    continue
                seen.add(name)
                prog, f = _resolve(name, home, programs)
                if f is None:
                    bodies[name] = ""
                    continue
                bodies[name] = function_source(prog, f)
                if f.doc:
                    docs[name] = f.doc
                nxt.append(f)
        frontier = nxt
    globals_ = []
    for name in referenced_names(focal.function):
        g = home.global_decl(name)
        if g is not None:
            globals_.append("\n".join(home.lines(*g.span)))
    return ContextBundle(
        tuple(globals_), tuple(bodies.items()), tuple(docs.items()), focal.function.doc
    )
