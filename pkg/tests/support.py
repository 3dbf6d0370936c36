"""Small builders shared by the test modules."""

from __future__ import annotations

from pathlib import Path

from slicegen.focal import FocalMethod, function_source
from slicegen.minilang.analysis import cyclomatic_complexity
from slicegen.minilang.parser import parse_program

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
PROJ_A = FIXTURES / "proj-a"
TRANSCRIPTS = FIXTURES / "proj-a-transcripts" / "transcripts.jsonl"


def make_focal(source: str, name: str = "focal", path: str = "gen.mini") -> FocalMethod:
    prog = parse_program(source, path)
    f = prog.function(name)
    return FocalMethod(f, cyclomatic_complexity(f), f"{path}::{name}", function_source(prog, f), prog)


def fixture_focal(rel: str, name: str) -> FocalMethod:
    return make_focal((PROJ_A / rel).read_text(encoding="utf-8"), name, rel)
