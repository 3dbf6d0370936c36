"""Rule-based fixes for broken test candidates and the capped LLM repair loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

from .extraction import (
    ABANDONED,
    FIXED_TEST,
    LLM_FIXED,
    PASSED,
    RULE_FIXED,
    TestCandidate,
    ZeroTestsError,
    extract_payload,
    split_items,
)
from .llm import LLMError
from .minilang import ast as A
from .minilang.lexer import KEYWORDS, ParseError, tokenize
from .minilang.parser import parse_program
from .runtime.checker import BUILTINS
from .runtime.interpreter import ExecutionLimits, ExecutionOutcome, run_test

log = logging.getLogger(__name__)

BALANCE = "balance_brackets"
PREAMBLE = "inject_preamble"
STRIP = "strip_assertions"

NOW_PASSING = "now_passing"
STILL_FAILING = "still_failing"
# ABANDONED is shared with the candidate states

DEFAULT_MAX_ROUNDS = 10

_OPENER_OF = {")": "(", "]": "[", "}": "{"}
_CLOSER_OF = {v: k for k, v in _OPENER_OF.items()}


def balance_brackets(source: str) -> str:
    """Make ``()[]{}`` balanced, ignoring brackets inside strings and comments.

    Closers without a matching opener are blanked out (replaced by a space so
    columns and neighbouring tokens stay put). Strings left open at a line end
    are closed there. Missing closers are appended in nesting order.
    """
    out = []
    stack = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c == "/" and source.startswith("//", i):
            j = i
            while j < n and source[j] not in "\r\n":
                j += 1
            out.append(source[i:j])
            i = j
            continue
        if c == '"':
            j = i + 1
            esc = False
            while j < n and source[j] not in "\r\n":
                if esc:
                    esc = False
                elif source[j] == "\\":
                    esc = True
                elif source[j] == '"':
                    break
                j += 1
            if j < n and source[j] == '"':
                out.append(source[i : j + 1])
                i = j + 1
            else:
                out.append(source[i:j] + ('\\"' if esc else '"'))
                i = j
            continue
        if c in _CLOSER_OF:
            stack.append(c)
        elif c in _OPENER_OF:
            if stack and stack[-1] == _OPENER_OF[c]:
                stack.pop()
            else:
                c = " "
        out.append(c)
        i += 1
    text = "".join(out)
    if stack:
        last_line = text.rsplit("\n", 1)[-1]
        if _ends_in_comment(last_line):
            text += "\n"
        text += "".join(_CLOSER_OF[o] for o in reversed(stack))
    return text


def _ends_in_comment(line: str) -> bool:
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
        elif line.startswith("//", i):
            return True
    return False


def _assert_stmts(program: A.Program):
    for f in program.functions:
        for s in A.iter_stmts(f.body):
            if isinstance(s, A.Assert):
                yield s


def strip_assertions(source: str, warn: bool = True) -> str:
    """Turn each ``assert(e);`` into ``let __chk_N = (e);``.

    The expression is still evaluated, so calls and runtime errors inside it
    behave as before, and every other statement keeps its line. ``assert(true)``
    is left alone. Unparsable input is returned unchanged and logged, as a
    warning unless *warn* is false.
    """
    try:
        program = parse_program(source, "<test>")
    except ParseError as e:
        log.log(logging.WARNING if warn else logging.DEBUG,
                "strip_assertions: source does not parse (%s); left unchanged", e)
        return source
    targets = [
        s for s in _assert_stmts(program)
        if not (isinstance(s.expr, A.BoolLit) and s.expr.value is True)
    ]
    if not targets:
        return source
    targets.sort(key=lambda s: s.offset)
    pieces, pos, k = [], 0, 0
    for s in targets:
        k += 1
        while f"__chk_{k}" in source:
            k += 1
        pieces.append(source[pos : s.offset])
        pieces.append(f"let __chk_{k} = ")
        pos = s.offset + len("assert")
    pieces.append(source[pos:])
    return "".join(pieces)


def _arg_type(tokens, start: int) -> str:
    tok = tokens[start]
    if tok.kind == "string":
        return A.STRING
    if tok.text in ("true", "false"):
        return A.BOOL
    if tok.text == "[":
        return A.ARRAY
    return A.INT


def unresolved_calls(source: str, programs) -> list[tuple[str, list[str]]]:
    """Called names defined nowhere, with argument types guessed from the
    first call site. Empty when *source* does not tokenize."""
    try:
        tokens, _ = tokenize(source)
    except ParseError:
        return []
    known = set(BUILTINS)
    for prog in programs:
        known.update(f.name for f in prog.functions)
    # functions declared by the test itself
    for a, b in zip(tokens, tokens[1:]):
        if a.text == "fn" and b.kind == "ident":
            known.add(b.text)
    found: dict[str, list[str]] = {}
    for k in range(len(tokens) - 1):
        tok = tokens[k]
        if tok.kind != "ident" or tok.text in KEYWORDS or tokens[k + 1].text != "(":
            continue
        if tok.text in known or tok.text in found or (k > 0 and tokens[k - 1].text == "fn"):
            continue
        types, depth, j = [], 0, k + 2
        if j < len(tokens) and tokens[j].text != ")":
            types.append(_arg_type(tokens, j))
        while j < len(tokens):
            t = tokens[j].text
            if t in ("(", "[", "{") and tokens[j].kind == "symbol":
                depth += 1
            elif t in (")", "]", "}") and tokens[j].kind == "symbol":
                if depth == 0:
                    break
                depth -= 1
            elif t == "," and depth == 0 and tokens[j + 1].kind != "eof":
                types.append(_arg_type(tokens, j + 1))
            j += 1
        found[tok.text] = types
    return list(found.items())


def inject_preamble(source: str, programs) -> str:
    """Prepend a stub ``fn name(a:int,...)->int{return 0;}`` for every called
    name that neither the project nor the test declares."""
    missing = unresolved_calls(source, programs)
    if not missing:
        return source
    stubs = []
    for name, types in missing:
        params = ",".join(f"{_param_name(i)}:{t}" for i, t in enumerate(types))
        stubs.append(f"fn {name}({params})->int{{return 0;}}")
    return "\n".join(stubs) + "\n" + source


def _param_name(i: int) -> str:
    letters = "abcdefghijklmnopqrstuvwxyz"
    return letters[i] if i < len(letters) else f"p{i}"


def apply_rule_fixes(source: str, programs) -> tuple[str, tuple]:
    """balance -> preamble -> strip; returns the text and the fixes that changed it."""
    applied = []
    text = source
    for name, fix in (
        (BALANCE, balance_brackets),
        (PREAMBLE, lambda s: inject_preamble(s, programs)),
        (STRIP, lambda s: strip_assertions(s, warn=False)),
    ):
        new = fix(text)
        if new != text:
            applied.append(name)
            text = new
    return text, tuple(applied)


# -- self-debug loop ----------------------------------------------------------------


@dataclass
class FixAttempt:
    candidate_id: str
    round: int
    trigger: ExecutionOutcome
    rule_fixes_applied: tuple = ()
    llm_called: bool = False
    result: str = STILL_FAILING
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "candidate": self.candidate_id,
            "round": self.round,
            "trigger": self.trigger.to_json(),
            "rule_fixes_applied": list(self.rule_fixes_applied),
            "llm_called": self.llm_called,
            "result": self.result,
            "reason": self.reason,
        }


def fixed_test_validator(text: str) -> None:
    payload = extract_payload(text, FIXED_TEST)
    if not any(kind.startswith("test:") for kind, _ in split_items(payload.decoded["test_file"])):
        raise ZeroTestsError("fixed test file contains no test_ function")


@dataclass
class RepairContext:
    """What the fix prompt and the rule fixes need besides the candidate."""

    focal: object
    ctx: object
    programs: list = field(default_factory=list)
    limits: ExecutionLimits = field(default_factory=ExecutionLimits)
    assets: object = None


def self_debug_loop(
    candidate: TestCandidate,
    program: A.Program,
    gateway,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    *,
    repair: RepairContext,
    outcome: Optional[ExecutionOutcome] = None,
    runner: Optional[Callable[[str], ExecutionOutcome]] = None,
) -> tuple[TestCandidate, list[FixAttempt], ExecutionOutcome]:
    """Repair *candidate* for at most *max_rounds* rounds.

    Each round first applies the rule fixes and re-runs the candidate if that
    produced unseen text. Only when it still fails is the LLM asked for a fix,
    whose answer gets the same rule fixes before it is run. Text that was
    already executed is never run again; such a round ends still_failing.
    Returns the final candidate, the attempt log and the last outcome.
    """
    from .prompting import render_fix

    programs = repair.programs or [program]
    run = runner or (lambda src: run_test(program, src, repair.limits))
    if outcome is None:
        outcome = run(candidate.source)
    attempts: list[FixAttempt] = []
    if outcome.passed:
        return candidate.advance(PASSED), attempts, outcome
    seen = {candidate.source}
    cur = candidate
    for rnd in range(1, max_rounds + 1):
        attempt = FixAttempt(cur.id, rnd, outcome)
        attempts.append(attempt)
        fixed, applied = apply_rule_fixes(cur.source, programs)
        attempt.rule_fixes_applied = applied
        if fixed not in seen:
            seen.add(fixed)
            outcome = run(fixed)
            cur = cur.advance(RULE_FIXED, source=fixed, fix_round=rnd)
            if outcome.passed:
                attempt.result = NOW_PASSING
                return cur.advance(PASSED), attempts, outcome
        attempt.llm_called = True
        bundle = render_fix(cur, outcome, repair.focal, repair.ctx, repair.assets)
        try:
            text, _ = gateway.complete_with_escalation(bundle, fixed_test_validator)
        except LLMError as e:
            attempt.result = ABANDONED
            attempt.reason = f"gateway error: {e}"
            return cur.advance(ABANDONED, fix_round=rnd), attempts, outcome
        raw = extract_payload(text, FIXED_TEST).decoded["test_file"]
        new, _ = apply_rule_fixes(raw, programs)
        if new in seen:
            attempt.reason = "duplicate source"
        else:
            seen.add(new)
            outcome = run(new)
            cur = cur.advance(LLM_FIXED, source=new, fix_round=rnd, original_source=raw)
            if outcome.passed:
                attempt.result = NOW_PASSING
                return cur.advance(PASSED), attempts, outcome
        if rnd == max_rounds:
            attempt.result = ABANDONED
            attempt.reason = attempt.reason or "round limit reached"
    return cur.advance(ABANDONED, fix_round=max(cur.fix_round, max_rounds)), attempts, outcome
