import json
import random

from hypothesis import given, settings, strategies as st

from minigen import gen_pair, mutate
from oracles import stack_balanced
from slicegen.extraction import TestCandidate
from slicegen.focal import build_context, load_project
from slicegen.llm import ReplayMiss
from slicegen.minilang import ast as A
from slicegen.minilang.parser import parse_program
from slicegen.repair import (
    ABANDONED,
    BALANCE,
    NOW_PASSING,
    PREAMBLE,
    STRIP,
    RepairContext,
    apply_rule_fixes,
    balance_brackets,
    inject_preamble,
    self_debug_loop,
    strip_assertions,
    unresolved_calls,
)
from support import PROJ_A, fixture_focal

FOCAL = fixture_focal("lib/render_options.mini", "render_options")
PROGRAMS = load_project(PROJ_A).programs
CTX = build_context(PROGRAMS, FOCAL)
REPAIR = RepairContext(FOCAL, CTX, [FOCAL.program])


def fenced(test_file: str) -> str:
    return "Cause and remedy.\n\n```json\n" + json.dumps({"test_file": test_file}) + "\n```\n"


class FakeGateway:
    def __init__(self, replies):
        self.replies = list(replies)
        self.calls = 0
        self.prompts = []

    def complete_with_escalation(self, bundle, validator):
        self.calls += 1
        self.prompts.append(bundle)
        reply = self.replies.pop(0) if len(self.replies) > 1 else self.replies[0]
        if isinstance(reply, Exception):
            raise reply
        validator(reply)
        return reply, 1


def candidate(source, name="test_case"):
    return TestCandidate(FOCAL.qualified_name, 1, name, source, original_source=source)


# -- rule fixes -------------------------------------------------------------------


def test_balance_identity_and_missing_brace():
    ok = 'fn t() {\n    let s = "({[";\n    // )\n}\n'
    assert balance_brackets(ok) == ok
    assert balance_brackets("fn t() {\n    let a = 1;\n") == "fn t() {\n    let a = 1;\n}"


def test_balance_completes_in_nesting_order():
    assert balance_brackets("fn t(){ if (x { y(); }") == "fn t(){ if (x { y(); })}"


def test_balance_drops_stray_closers():
    out = balance_brackets("fn t() {\n    let a = (1));\n}\n")
    assert stack_balanced(out)
    assert out == "fn t() {\n    let a = (1) ;\n}\n"


def test_balance_closes_open_string():
    out = balance_brackets('fn t() {\n    let s = "abc;\n}\n')
    assert stack_balanced(out)


@settings(max_examples=300, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_balance_is_balanced_and_idempotent(seed):
    rng = random.Random(seed)
    _, test_src, _ = gen_pair(seed)
    broken = mutate(test_src, rng, rng.randint(1, 8))
    once = balance_brackets(broken)
    assert stack_balanced(once)
    assert balance_brackets(once) == once


def test_strip_two_asserts_keeps_lines():
    src = "fn test_a() {\n    let r = 1;\n    assert(r == 2);\n    print(r);\n    assert(r > 5);\n}\n"
    out = strip_assertions(src)
    assert "assert" not in out
    assert out.count("\n") == src.count("\n")
    before = parse_program(src).functions[0].body.stmts
    after = parse_program(out).functions[0].body.stmts
    assert [s.line for s in before] == [s.line for s in after]


def test_strip_without_asserts_and_assert_true():
    src = "fn test_a() {\n    assert(true);\n    let r = 1;\n}\n"
    assert strip_assertions(src) == src


def test_strip_unparsable_is_unchanged():
    src = "fn test_a() {\n    assert(1 == 2)\n"
    assert strip_assertions(src) == src


def test_stripped_test_covers_at_least_as_much():
    from slicegen.runtime import run_test

    src = (
        'fn test_a() {\n    assert(render_options([], 10, "") == "wrong");\n'
        '    let r = render_options([1, 2], 20, "t");\n    assert(len(r) == 1);\n}\n'
    )
    orig = run_test(FOCAL.program, src)
    stripped = run_test(FOCAL.program, strip_assertions(src))
    assert not orig.passed and stripped.passed
    assert orig.coverage.covered_lines < stripped.coverage.covered_lines


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_strip_preserves_non_assert_lines(seed):
    _, test_src, _ = gen_pair(seed, helpers=True)
    out = strip_assertions(test_src)

    def lines(src):
        prog = parse_program(src)
        return {
            (f.name, s.line, type(s).__name__)
            for f in prog.functions
            for s in A.iter_stmts(f.body)
            if not isinstance(s, A.Assert)
        }

    non_assert = lines(test_src)
    assert non_assert <= lines(out)
    assert {(n, ln) for n, ln, kind in lines(out) if kind != "Let"} == {
        (n, ln) for n, ln, kind in non_assert if kind != "Let"
    }


def test_preamble_identity_when_resolved():
    src = 'fn test_a() {\n    let r = render_options([], 10, "x");\n}\n'
    assert inject_preamble(src, PROGRAMS) == src


def test_preamble_stub_with_inferred_arity():
    src = "fn test_a() {\n    let r = make_input(1, 2);\n    let q = make_input(3, 4);\n}\n"
    out = inject_preamble(src, PROGRAMS)
    assert out == "fn make_input(a:int,b:int)->int{return 0;}\n" + src
    assert unresolved_calls(src, PROGRAMS) == [("make_input", ["int", "int"])]


def test_preamble_leaves_resolvable_programs_byte_identical():
    for seed in range(50):
        program_src, test_src, _ = gen_pair(seed, helpers=True)
        programs = [parse_program(program_src)]
        assert inject_preamble(test_src, programs) == test_src


def test_rule_fix_order():
    src = "fn test_a() {\n    assert(make_input(1) == 3);\n"
    out, applied = apply_rule_fixes(src, PROGRAMS)
    assert applied == (BALANCE, PREAMBLE, STRIP)
    assert out.startswith("fn make_input(a:int)->int{return 0;}\n")
    assert "assert" not in out


# -- self-debug loop -------------------------------------------------------------------


def test_rule_fix_alone_passes_without_llm():
    src = 'fn test_a() {\n    let r = render_options([], 10, "");\n    assert(r == "[options   ]");\n'
    gw = FakeGateway([fenced("unused")])
    final, attempts, outcome = self_debug_loop(candidate(src), FOCAL.program, gw, repair=REPAIR)
    assert outcome.passed
    assert gw.calls == 0
    assert len(attempts) == 1
    assert attempts[0].result == NOW_PASSING and attempts[0].rule_fixes_applied == (BALANCE, STRIP)
    assert final.history == ("fresh", "rule_fixed", "passed")


def test_second_llm_fix_passes():
    broken = 'fn test_a() {\n    let xs = [1];\n    let r = render_options(xs, 10, str(xs[1]));\n}\n'
    bad = 'fn test_a() {\n    let xs = [1];\n    let r = render_options(xs, 10, str(xs[2]));\n}\n'
    good = 'fn test_a() {\n    let xs = [1];\n    let r = render_options(xs, 10, str(xs[0]));\n}\n'
    gw = FakeGateway([fenced(bad), fenced(good)])
    final, attempts, outcome = self_debug_loop(candidate(broken), FOCAL.program, gw, repair=REPAIR)
    assert outcome.passed
    assert [a.round for a in attempts] == [1, 2]
    assert gw.calls == 2
    assert final.history[-2:] == ("llm_fixed", "passed")
    assert final.fix_round == 2


def test_never_passing_runs_exactly_ten_rounds():
    broken = 'fn test_a() {\n    let xs = [1];\n    let r = xs[5];\n}\n'
    replies = [fenced(f'fn test_a() {{\n    let xs = [1];\n    let r = xs[{k}];\n}}\n') for k in range(6, 40)]
    gw = FakeGateway(replies)
    final, attempts, _ = self_debug_loop(candidate(broken), FOCAL.program, gw, repair=REPAIR)
    assert final.state == ABANDONED
    assert [a.round for a in attempts] == list(range(1, 11))
    assert [a.result for a in attempts][-1] == ABANDONED
    assert all(a.result != ABANDONED for a in attempts[:-1])
    assert gw.calls == 10


def test_duplicate_source_is_not_rerun():
    broken = 'fn test_a() {\n    let xs = [1];\n    let r = xs[5];\n}\n'
    runs = []

    def runner(src):
        from slicegen.runtime import run_test

        runs.append(src)
        return run_test(FOCAL.program, src)

    gw = FakeGateway([fenced(broken)])
    final, attempts, _ = self_debug_loop(candidate(broken), FOCAL.program, gw, 3, repair=REPAIR, runner=runner)
    assert final.state == ABANDONED
    assert len(attempts) == 3
    assert [a.reason for a in attempts] == ["duplicate source"] * 3
    assert runs == [broken]


def test_gateway_error_abandons_with_reason():
    broken = 'fn test_a() {\n    let xs = [1];\n    let r = xs[5];\n}\n'
    gw = FakeGateway([ReplayMiss("ab" * 32)])
    final, attempts, _ = self_debug_loop(candidate(broken), FOCAL.program, gw, repair=REPAIR)
    assert final.state == ABANDONED
    assert len(attempts) == 1
    assert attempts[0].reason.startswith("gateway error")


def test_fix_prompt_carries_outcome():
    broken = 'fn test_a() {\n    let xs = [1];\n    let r = xs[5];\n}\n'
    gw = FakeGateway([fenced(broken)])
    self_debug_loop(candidate(broken), FOCAL.program, gw, 1, repair=REPAIR)
    user = gw.prompts[0].messages[-1][1]
    assert "out of bounds" in user
    assert "let r = xs[5];" in user
