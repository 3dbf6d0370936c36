"""Slice plans: validation of recited decompositions, a fallback slicer, and
condition-count estimates."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .extraction import InvalidResponse
from .focal import FocalMethod
from .minilang.analysis import decisions_by_line, statement_lines, stmt_decisions

LLM = "llm"
FALLBACK = "fallback"
DEFAULT_TARGET_DECISIONS = 3
MAX_EXPONENT = 20

_WS = re.compile(r"[ \t]+")


def normalize_line(line: str) -> str:
    return _WS.sub(" ", line).strip()


@dataclass(frozen=True)
class Slice:
    index: int
    description: str
    recited_code: str
    resolved_span: tuple  # (first_line, last_line), file line numbers


@dataclass(frozen=True)
class SlicePlan:
    focal: str
    slices: tuple
    origin: str

    def to_json(self) -> dict:
        return {
            "focal": self.focal,
            "origin": self.origin,
            "slices": [
                {
                    "index": s.index,
                    "description": s.description,
                    "code": s.recited_code,
                    "span": list(s.resolved_span),
                }
                for s in self.slices
            ],
        }


class SliceValidationError(InvalidResponse):
    """Raised with ``kind`` in {unlocatable_segment, overlap, gap, empty_plan}."""

    def __init__(self, kind: str, slice_index: int | None = None, detail: str = ""):
        where = f"({slice_index})" if slice_index is not None else ""
        super().__init__(f"{kind}{where}" + (f": {detail}" if detail else ""))
        self.kind = kind
        self.slice_index = slice_index


def _focal_lines(focal: FocalMethod) -> list[tuple[int, str]]:
    """(line number, normalized text) of the focal method's non-blank lines."""
    first, _ = focal.span
    out = []
    for k, text in enumerate(focal.source_text.split("\n")):
        norm = normalize_line(text)
        if norm:
            out.append((first + k, norm))
    return out


def _locate(segment: list[str], lines: list[tuple[int, str]], after: int):
    """Span of the first exact match of *segment*, preferring matches past *after*."""
    n = len(segment)
    starts = [
        i for i in range(len(lines) - n + 1)
        if all(lines[i + k][1] == segment[k] for k in range(n))
    ]
    if not starts:
        return None
    later = [i for i in starts if lines[i][0] > after]
    i = later[0] if later else starts[0]
    return lines[i][0], lines[i + n - 1][0]


def validate_slice_plan(raw: dict, focal: FocalMethod) -> SlicePlan:
    """Locate every recited segment in the focal method and check the plan's shape.

    *raw* is a decoded slice-plan payload. Segments are matched line by line
    after whitespace normalization; spans must be ordered, non-overlapping and
    leave no executable line of the focal method uncovered.
    """
    items = raw.get("slices") or []
    if not items:
        raise SliceValidationError("empty_plan")
    lines = _focal_lines(focal)
    executable = statement_lines(focal.function)
    slices = []
    prev_end = focal.span[0] - 1
    for pos, item in enumerate(items, 1):
        code = item.get("code") if isinstance(item, dict) else None
        code = code if isinstance(code, str) else ""
        segment = [normalize_line(x) for x in code.split("\n")]
        segment = [x for x in segment if x]
        span = _locate(segment, lines, prev_end) if segment else None
        if span is None:
            raise SliceValidationError("unlocatable_segment", pos)
        if span[0] <= prev_end:
            raise SliceValidationError("overlap", pos, f"starts at line {span[0]}")
        skipped = [ln for ln in executable if prev_end < ln < span[0]]
        if skipped:
            raise SliceValidationError("gap", pos, f"line {skipped[0]} is not covered")
        slices.append(Slice(pos, str(item.get("description", "")), code, span))
        prev_end = span[1]
    trailing = [ln for ln in executable if ln > prev_end]
    if trailing:
        raise SliceValidationError("gap", len(items), f"line {trailing[0]} is not covered")
    return SlicePlan(focal.qualified_name, tuple(slices), LLM)


def fallback_slice(focal: FocalMethod, target_decisions_per_slice: int = DEFAULT_TARGET_DECISIONS) -> SlicePlan:
    """Group top-level statements greedily, closing a group once it holds
    *target_decisions_per_slice* decision points."""
    if target_decisions_per_slice < 1:
        raise ValueError("target_decisions_per_slice must be >= 1")
    stmts = focal.function.body.stmts
    if not stmts:
        return SlicePlan(
            focal.qualified_name,
            (Slice(1, "Empty body.", focal.source_text, focal.span),),
            FALLBACK,
        )
    groups, current, acc = [], [], 0
    for s in stmts:
        current.append(s)
        acc += stmt_decisions(s)
        if acc >= target_decisions_per_slice:
            groups.append(current)
            current, acc = [], 0
    if current:
        groups.append(current)
    # statements sharing a line cannot be split across slices
    merged = [groups[0]]
    for group in groups[1:]:
        if group[0].line <= merged[-1][-1].end_line:
            merged[-1] = merged[-1] + group
        else:
            merged.append(group)
    groups = merged
    slices = []
    for k, group in enumerate(groups, 1):
        first, last = group[0].line, group[-1].end_line
        decisions = sum(stmt_decisions(s) for s in group)
        code = "\n".join(focal.program.lines(first, last))
        desc = f"Statements on lines {first}-{last} ({decisions} decision point(s))."
        slices.append(Slice(k, desc, code, (first, last)))
    return SlicePlan(focal.qualified_name, tuple(slices), FALLBACK)


@dataclass(frozen=True)
class SliceComplexityEstimate:
    per_slice_conditions: tuple

    @property
    def sum(self) -> int:
        return sum(self.per_slice_conditions)

    @property
    def product(self) -> int:
        return math.prod(self.per_slice_conditions)


def estimate_conditions(plan: SlicePlan, focal: FocalMethod) -> SliceComplexityEstimate:
    """Per-slice condition combinations, estimated as 2**(decision points in slice)."""
    by_line = decisions_by_line(focal.function.body)
    counts = []
    for s in plan.slices:
        first, last = s.resolved_span
        d = sum(n for line, n in by_line.items() if first <= line <= last)
        counts.append(max(1, 2 ** min(d, MAX_EXPONENT)))
    return SliceComplexityEstimate(tuple(counts))
