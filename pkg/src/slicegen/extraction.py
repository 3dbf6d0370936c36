"""Pulling JSON payloads out of LLM responses and splitting test files into
single-test candidates."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from typing import Any

SLICE_PLAN = "slice_plan"
TEST_FILE = "test_file"
FIXED_TEST = "fixed_test"
KINDS = (SLICE_PLAN, TEST_FILE, FIXED_TEST)

# candidate states
FRESH = "fresh"
RULE_FIXED = "rule_fixed"
LLM_FIXED = "llm_fixed"
PASSED = "passed"
ABANDONED = "abandoned"

_FENCE = re.compile(r"```[ \t]*json[ \t]*\r?\n(.*?)```", re.DOTALL | re.IGNORECASE)
_MAX_BRACE_CANDIDATES = 64


class InvalidResponse(Exception):
    """An LLM response that does not meet the requested output contract."""


class FormatError(InvalidResponse):
    """Kinds: no_json_block, parse_failure, schema_violation (with ``field``)."""

    def __init__(self, kind: str, field: str = "", detail: str = ""):
        text = kind + (f"({field!r})" if field else "") + (f": {detail}" if detail else "")
        super().__init__(text)
        self.kind = kind
        self.field = field


class ZeroTestsError(InvalidResponse):
    pass


@dataclass(frozen=True)
class Payload:
    kind: str
    json_text: str
    decoded: Any


def _brace_regions(text: str) -> list[tuple[int, int]]:
    """(start, end) of every balanced ``{...}`` region, skipping JSON strings."""
    regions = []
    stack = []
    in_str = esc = False
    for j, c in enumerate(text):
        if in_str:
            if esc:
                esc = False
            elif c == "\\":
                esc = True
            elif c == '"':
                in_str = False
        elif c == '"':
            in_str = True
        elif c == "{":
            stack.append(j)
        elif c == "}" and stack:
            regions.append((stack.pop(), j + 1))
    return regions


def _locate_json(raw: str) -> tuple[str, Any]:
    fenced = [m.group(1).strip() for m in _FENCE.finditer(raw)]
    if fenced:
        for block in fenced:
            try:
                return block, json.loads(block)
            except ValueError:
                continue
        raise FormatError("parse_failure", detail="no ```json block decodes")
    regions = sorted(_brace_regions(raw), key=lambda r: (r[0] - r[1], r[0]))
    if not regions:
        raise FormatError("no_json_block")
    for start, end in regions[:_MAX_BRACE_CANDIDATES]:
        text = raw[start:end]
        try:
            return text, json.loads(text)
        except ValueError:
            continue
    raise FormatError("parse_failure", detail="no brace-delimited region decodes")


def _require_str(obj: dict, key: str, path: str) -> None:
    if not isinstance(obj.get(key), str):
        raise FormatError("schema_violation", path)


def check_schema(kind: str, decoded: Any) -> None:
    if not isinstance(decoded, dict):
        raise FormatError("schema_violation", "$")
    if kind == SLICE_PLAN:
        if "summary" in decoded and not isinstance(decoded["summary"], str):
            raise FormatError("schema_violation", "summary")
        slices = decoded.get("slices")
        if not isinstance(slices, list):
            raise FormatError("schema_violation", "slices")
        for i, item in enumerate(slices):
            path = f"slices[{i}]"
            if not isinstance(item, dict):
                raise FormatError("schema_violation", path)
            idx = item.get("index")
            if not isinstance(idx, int) or isinstance(idx, bool):
                raise FormatError("schema_violation", f"{path}.index")
            _require_str(item, "description", f"{path}.description")
            _require_str(item, "code", f"{path}.code")
    elif kind in (TEST_FILE, FIXED_TEST):
        _require_str(decoded, "test_file", "test_file")
    else:
        raise ValueError(f"unknown payload kind {kind!r}")


def extract_payload(raw: str, kind: str) -> Payload:
    """Find, decode and schema-check the JSON payload of an LLM response.

    Fenced ```json blocks are preferred; otherwise the longest balanced
    ``{...}`` region that decodes is used.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown payload kind {kind!r}")
    json_text, decoded = _locate_json(raw)
    check_schema(kind, decoded)
    return Payload(kind, json_text, decoded)


# -- test isolation ------------------------------------------------------------


@dataclass(frozen=True)
class TestCandidate:
    focal: str
    slice_index: int
    name: str
    source: str
    state: str = FRESH
    fix_round: int = 0
    original_source: str = ""
    history: tuple = field(default=(FRESH,))

    __test__ = False  # not a pytest class

    @property
    def id(self) -> str:
        return f"{self.focal}#slice-{self.slice_index}#{self.name}#r{self.fix_round}"

    def advance(self, state: str, **changes) -> "TestCandidate":
        return replace(self, state=state, history=self.history + (state,), **changes)


_TEST_FN = re.compile(r"^\s*fn\s+(test_\w*)\s*\(\s*\)")
_ITEM_START = re.compile(r"^\s*(fn|let)\b")


def _line_depths(text: str) -> list[int]:
    """Brace depth at the start of each line (strings and // comments skipped)."""
    depths = []
    depth = 0
    for line in text.split("\n"):
        depths.append(depth)
        in_str = esc = False
        for i, c in enumerate(line):
            if in_str:
                if esc:
                    esc = False
                elif c == "\\":
                    esc = True
                elif c == '"':
                    in_str = False
            elif c == '"':
                in_str = True
            elif c == "/" and line.startswith("//", i):
                break
            elif c == "{":
                depth += 1
            elif c == "}":
                depth = max(0, depth - 1)
    return depths


def split_items(text: str) -> list[tuple[str, list[str]]]:
    """Split a MiniLang file into top-level items by pattern matching.

    Returns ``(kind, lines)`` pairs where kind is ``header``, ``test:<name>``,
    ``fn`` or ``let``. Preceding ``///`` lines stay with their declaration.
    Works on unbalanced text: a line starting with ``fn`` in column 0 always
    opens a new item.
    """
    lines = text.split("\n")
    depths = _line_depths(text)
    starts = []
    for k, line in enumerate(lines):
        at_top = depths[k] == 0 and _ITEM_START.match(line)
        if at_top or line.startswith("fn "):
            begin = k
            while begin > 0 and lines[begin - 1].lstrip().startswith("///") and (
                not starts or begin - 1 > starts[-1]
            ):
                begin -= 1
            starts.append(begin)
    items = []
    if not starts or starts[0] > 0:
        items.append(("header", lines[: starts[0] if starts else len(lines)]))
    for n, begin in enumerate(starts):
        end = starts[n + 1] if n + 1 < len(starts) else len(lines)
        chunk = lines[begin:end]
        decl = next(x for x in chunk if not x.lstrip().startswith("///"))
        m = _TEST_FN.match(decl)
        if m:
            kind = f"test:{m.group(1)}"
        else:
            kind = "let" if decl.lstrip().startswith("let") else "fn"
        items.append((kind, chunk))
    return items


def isolate_tests(test_file, focal: str = "", slice_index: int = 0) -> list[TestCandidate]:
    """One standalone candidate per test function; helpers and globals are
    copied into every candidate.

    *test_file* is a ``test_file``/``fixed_test`` Payload or the raw file text.
    """
    text = test_file.decoded["test_file"] if isinstance(test_file, Payload) else test_file
    items = split_items(text)
    tests = [k for k, (kind, _) in enumerate(items) if kind.startswith("test:")]
    if not tests:
        raise ZeroTestsError("no test_ functions found")
    out = []
    used: dict[str, int] = {}
    for k in tests:
        name = items[k][0][len("test:"):]
        used[name] = used.get(name, 0) + 1
        label = name if used[name] == 1 else f"{name}~{used[name]}"
        kept = [
            line
            for j, (kind, chunk) in enumerate(items)
            if j == k or not kind.startswith("test:")
            for line in chunk
        ]
        source = "\n".join(kept)
        out.append(TestCandidate(focal, slice_index, label, source, original_source=source))
    return out
