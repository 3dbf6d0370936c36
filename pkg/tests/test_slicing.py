import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from minigen import gen_function
from slicegen.minilang.analysis import statement_lines
from slicegen.slicing import (
    FALLBACK,
    LLM,
    SliceComplexityEstimate,
    SliceValidationError,
    estimate_conditions,
    fallback_slice,
    validate_slice_plan,
)
from support import fixture_focal, make_focal

FIVE_GROUPS = """fn focal(a: int, b: int) {
    if (a > 0) {
        a = a - 1;
    }
    let c = a + b;
    if (a > 1 && b > 1) {
        c = c + 1;
    }
    while (c > 100) {
        c = c - 1;
    }
    if (a == 1 || b == 2 || c == 3) {
        c = 0;
    }
}
"""


def body_lines(focal, first, last):
    return "\n".join(focal.program.lines(first, last))


def test_whole_body_single_slice():
    focal = make_focal(FIVE_GROUPS)
    plan = validate_slice_plan({"slices": [{"index": 1, "description": "all", "code": body_lines(focal, 2, 14)}]}, focal)
    assert plan.origin == LLM
    assert [s.resolved_span for s in plan.slices] == [(2, 14)]


def test_three_step_plan_on_render_options():
    focal = fixture_focal("lib/render_options.mini", "render_options")
    raw = {"slices": [
        {"index": 1, "description": "names", "code": body_lines(focal, 37, 45)},
        {"index": 2, "description": "flags", "code": body_lines(focal, 46, 54)},
        {"index": 3, "description": "frame", "code": body_lines(focal, 55, 68)},
    ]}
    plan = validate_slice_plan(raw, focal)
    assert [s.resolved_span for s in plan.slices] == [(37, 45), (46, 54), (55, 68)]
    est = estimate_conditions(plan, focal)
    assert est.per_slice_conditions == (4, 8, 64)


def test_whitespace_is_normalized():
    focal = make_focal(FIVE_GROUPS)
    code = "\n".join("\t" + "  ".join(line.split()) for line in body_lines(focal, 2, 14).split("\n"))
    assert validate_slice_plan({"slices": [{"code": code}]}, focal).slices[0].resolved_span == (2, 14)


def test_unlocatable_segment_names_slice():
    focal = make_focal(FIVE_GROUPS)
    raw = {"slices": [
        {"code": body_lines(focal, 2, 5)},
        {"code": "let nowhere = 42;"},
    ]}
    with pytest.raises(SliceValidationError) as exc:
        validate_slice_plan(raw, focal)
    assert (exc.value.kind, exc.value.slice_index) == ("unlocatable_segment", 2)


def test_overlap():
    focal = make_focal(FIVE_GROUPS)
    raw = {"slices": [{"code": body_lines(focal, 2, 8)}, {"code": body_lines(focal, 6, 14)}]}
    with pytest.raises(SliceValidationError) as exc:
        validate_slice_plan(raw, focal)
    assert (exc.value.kind, exc.value.slice_index) == ("overlap", 2)


def test_gap_inside_and_at_end():
    focal = make_focal(FIVE_GROUPS)
    with pytest.raises(SliceValidationError) as exc:
        validate_slice_plan({"slices": [{"code": body_lines(focal, 2, 4)}, {"code": body_lines(focal, 6, 14)}]}, focal)
    assert (exc.value.kind, exc.value.slice_index) == ("gap", 2)
    with pytest.raises(SliceValidationError) as exc:
        validate_slice_plan({"slices": [{"code": body_lines(focal, 2, 12)}]}, focal)
    assert (exc.value.kind, exc.value.slice_index) == ("gap", 1)


def test_empty_plan():
    focal = make_focal(FIVE_GROUPS)
    with pytest.raises(SliceValidationError) as exc:
        validate_slice_plan({"slices": []}, focal)
    assert exc.value.kind == "empty_plan"


def test_fallback_straight_line():
    focal = make_focal("fn focal() -> int {\n    let a = 1;\n    let b = 2;\n    return a + b;\n}\n")
    plan = fallback_slice(focal, 3)
    assert plan.origin == FALLBACK
    assert [s.resolved_span for s in plan.slices] == [(2, 4)]


def test_fallback_greedy_groups():
    focal = make_focal(FIVE_GROUPS)
    plan = fallback_slice(focal, 3)
    # top-level decision counts are [1, 0, 2, 1, 3]
    assert [s.resolved_span for s in plan.slices] == [(2, 8), (9, 14)]
    validate_slice_plan({"slices": [{"code": s.recited_code} for s in plan.slices]}, focal)


def test_fallback_target_one_splits_every_if():
    src = "fn focal(x: int) -> int {\n" + "".join(
        f"    if (x == {k}) {{\n        x = x + 1;\n    }}\n" for k in range(4)
    ) + "}\n"
    focal = make_focal(src)
    plan = fallback_slice(focal, 1)
    assert len(plan.slices) == 4


def test_fallback_rejects_bad_target():
    with pytest.raises(ValueError):
        fallback_slice(make_focal(FIVE_GROUPS), 0)


def test_estimate_examples():
    focal = make_focal(FIVE_GROUPS)
    one = fallback_slice(make_focal("fn focal() -> int {\n    return 1;\n}\n"))
    est = estimate_conditions(one, make_focal("fn focal() -> int {\n    return 1;\n}\n"))
    assert (est.per_slice_conditions, est.sum, est.product) == ((1,), 1, 1)
    est = SliceComplexityEstimate((2, 3, 4))
    assert (est.sum, est.product) == (9, 24)
    raw = {"slices": [
        {"code": body_lines(focal, 2, 8)},   # 1 + 0 + 2 = 3 decisions
        {"code": body_lines(focal, 9, 11)},  # 1
        {"code": body_lines(focal, 12, 14)},  # 3
    ]}
    est = estimate_conditions(validate_slice_plan(raw, focal), focal)
    assert est.per_slice_conditions == (8, 2, 8)
    assert (est.sum, est.product) == (18, 128)


def test_estimate_decisions_two_one_three():
    src = """fn focal(a: int) -> int {
    if (a > 0 && a < 9) {
        a = 1;
    }
    if (a > 2) {
        a = 2;
    }
    if (a > 3 || a < 0 || a == 7) {
        a = 3;
    }
    return a;
}
"""
    focal = make_focal(src)
    raw = {"slices": [{"code": body_lines(focal, 2, 4)}, {"code": body_lines(focal, 5, 7)},
                      {"code": body_lines(focal, 8, 11)}]}
    est = estimate_conditions(validate_slice_plan(raw, focal), focal)
    assert est.per_slice_conditions == (4, 2, 8)
    assert (est.sum, est.product) == (14, 64)


def test_sum_product_exhaustive():
    for k in range(2, 6):
        for ns in itertools.product(range(2, 9), repeat=k):
            s, p = sum(ns), math.prod(ns)
            assert s <= p
            assert (s == p) == (k == 2 and ns == (2, 2))


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=1, max_value=6))
def test_fallback_is_always_valid_and_round_trips(seed, target):
    src, _ = gen_function(seed)
    focal = make_focal(src)
    plan = fallback_slice(focal, target)
    again = validate_slice_plan({"slices": [{"code": s.recited_code} for s in plan.slices]}, focal)
    assert [s.resolved_span for s in again.slices] == [s.resolved_span for s in plan.slices]
    covered = [ln for s in plan.slices for ln in statement_lines(focal.function)
               if s.resolved_span[0] <= ln <= s.resolved_span[1]]
    assert covered == statement_lines(focal.function)
