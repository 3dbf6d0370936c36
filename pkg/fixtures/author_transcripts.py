"""Regenerate fixtures/proj-a-transcripts/ by running the pipeline in record
mode against a scripted transport.

Run from the repository root after any change to the prompt assets:

    python3 fixtures/author_transcripts.py

Each scripted answer is chosen from the prompt text (family, focal method,
slice, broken test) and the sampling parameters, so the recorded store holds
exactly the requests the pipeline makes.
"""

from __future__ import annotations

import json
import re
import shutil
import sys
import tempfile
from pathlib import Path

from slicegen.llm import Gateway, LiveBackend, RecordBackend, TranscriptStore
from slicegen.pipeline import RunConfig, run_pipeline

ROOT = Path(__file__).resolve().parent
PROJECT = ROOT / "proj-a"
OUT = ROOT / "proj-a-transcripts"


def answer(analysis: str, payload: dict, fenced: bool = True) -> str:
    body = json.dumps(payload, indent=1)
    block = f"```json\n{body}\n```" if fenced else body
    return f"{analysis.strip()}\n\n{block}\n"


def test_file(*tests: str) -> dict:
    return {"test_file": "\n\n".join(t.strip("\n") for t in tests) + "\n"}


def lines(path: str, first: int, last: int) -> str:
    text = (PROJECT / path).read_text(encoding="utf-8").split("\n")
    return "\n".join(text[first - 1 : last])


RENDER = "lib/render_options.mini"
STATS = "stats.mini"

RENDER_PLAN = {
    "summary": "Normalizes the title and width, counts the style flags, then renders the framed label.",
    "slices": [
        {"index": 1, "description": "Choose the display name and clamp the width.", "code": lines(RENDER, 37, 45)},
        {"index": 2, "description": "Count bold and italic flags.", "code": lines(RENDER, 46, 54)},
        {"index": 3, "description": "Compose the body text and frame it.", "code": lines(RENDER, 55, 68)},
    ],
}

STATS_PLAN = {
    "summary": "Rejects bad input, tallies readings outside the band, then picks a verdict.",
    "slices": [
        {"index": 1, "description": "Reject an inverted band and an empty series.", "code": lines(STATS, 18, 23)},
        {"index": 2, "description": "Count readings below, above and far above the band.", "code": lines(STATS, 24, 39)},
        {"index": 3, "description": "Derive the verdict from the counters and the mean.", "code": lines(STATS, 40, 54)},
    ],
}

# greedy answer for classify_readings recites slice 2 starting inside slice 1
STATS_PLAN_OVERLAP = {
    "summary": STATS_PLAN["summary"],
    "slices": [
        {"index": 1, "description": "Guards.", "code": lines(STATS, 18, 23)},
        {"index": 2, "description": "Tally.", "code": lines(STATS, 21, 39)},
        {"index": 3, "description": "Verdict.", "code": lines(STATS, 40, 54)},
    ],
}

DECOMPOSE_NOTES = """## Step 1: Summarize the focal method

The method combines its inputs into one result in three stages.

## Step 2: Recite the non-local elements

Each helper and global is used as its documentation describes.

## Step 3: Decompose the method into slices

The slices follow the three stages."""

GENERATE_NOTES = """## Step 1: Recite the inputs of the target slice

The slice reads the parameters and the locals set by earlier slices.

## Step 2: List all possible scenarios of the target slice

One scenario per outcome of each condition.

## Step 3: Infer the execution environment for each scenario

Arguments are chosen so that earlier slices fall through.

## Step 4: Write the test file"""

FIX_NOTES = """## 1. Cause

The report points at the test itself.

## 2. Remedy

Adjust the test input.

## 3. Fixed test file"""

RENDER_TESTS = {
    1: test_file(
        """
fn test_empty_title_uses_default_name() {
    let r = render_options([], 10, "");
    assert(r == "[options   ]");
}""",
        """
fn test_non_positive_width_uses_default() {
    let r = render_options([], 0, "menu");
    assert(len(r) == 22);
}""",
    ),
    2: test_file(
        """
fn test_counts_bold_and_italic() {
    let r = render_options([1, 2, 1], 20, "style");
    assert(r == "[style: mixed        ]");
}""",
        """
fn test_unknown_flags_are_ignored() {
    let r = render_options(make_flags(3), 20, "style");
    assert(r == "[style               ]");
}""",
    ),
    # the last test lacks its closing brace
    3: test_file(
        """
fn test_bold_only() {
    let r = render_options([1], 8, "b");
    assert(r == "[b: bold ]");
}""",
        """
fn test_italic_only_long_title() {
    let r = render_options([2], 5, "a very long title");
    assert(r == "[a very long title: italic]");
}""",
        """
fn test_wide_width_is_clamped() {
    let r = render_options([2, 2], 100, "x");
    assert(len(r) == 60);""",
    ),
}

MAKE_FLAGS_FIXED = test_file(
    """
fn make_flags(n: int) -> [int] {
    let out = [];
    for (let i = 0; i < n; i = i + 1) {
        out = append(out, 7);
    }
    return out;
}""",
    """
fn test_unknown_flags_are_ignored() {
    let r = render_options(make_flags(3), 20, "style");
    assert(r == "[style               ]");
}""",
)

FAR_ABOVE_BROKEN = """
fn test_far_above_band() {
    let r = classify_readings([45], 10, 20)
    assert(r == "alarm (45)");
}"""

STATS_TESTS = {
    1: test_file(
        """
fn test_inverted_band() {
    assert(classify_readings([50], 10, 5) == "invalid band");
}""",
        """
fn test_empty_series() {
    assert(classify_readings([], 10, 20) == "no data");
}""",
    ),
    2: test_file(
        """
fn test_values_below_and_above() {
    let r = classify_readings([5, 15, 25], 10, 20);
    assert(r == "erratic (15)");
}""",
        """
fn test_alarm_by_level() {
    let r = classify_readings([95], 10, 20);
    assert(r == "alarm (95)");
}""",
        FAR_ABOVE_BROKEN,
    ),
    3: test_file(
        """
fn test_low_verdict() {
    assert(classify_readings([1, 2, 15], 10, 20) == "low (6)");
}""",
        """
fn test_high_verdict() {
    assert(classify_readings([30], 10, 20) == "high (30)");
}""",
        """
fn test_stable_verdict() {
    assert(classify_readings([12, 14], 10, 20) == "stable (13)");
}""",
        """
fn test_single_reading_is_stable() {
    let data = [12];
    assert(classify_readings(data, 10, 20) == "stable (" + str(data[1]) + ")");
}""",
    ),
}


def single_reading(index: int) -> dict:
    return test_file(
        f"""
fn test_single_reading_is_stable() {{
    let data = [12];
    assert(classify_readings(data, 10, 20) == "stable (" + str(data[{index}]) + ")");
}}"""
    )


def respond(user: str, top_p: float) -> str:
    focal = re.search(r"^Function `(\w+)` from file", user, re.M).group(1)
    if "# Task: decompose" in user:
        if focal == "render_options":
            return answer(DECOMPOSE_NOTES, RENDER_PLAN)
        if top_p == 0.1:
            return answer(DECOMPOSE_NOTES, STATS_PLAN_OVERLAP)
        # second attempt answers without a fence
        return answer(DECOMPOSE_NOTES, STATS_PLAN, fenced=False)
    m = re.search(r"^# Task: write a test file covering slice (\d+)", user, re.M)
    if m:
        table = RENDER_TESTS if focal == "render_options" else STATS_TESTS
        return answer(GENERATE_NOTES, table[int(m.group(1))])
    if "# Task: fix a broken test" in user:
        if "make_flags" in user:
            return answer(FIX_NOTES, MAKE_FLAGS_FIXED)
        if "test_far_above_band" in user:
            # keeps returning the same broken file
            return answer(FIX_NOTES, test_file(FAR_ABOVE_BROKEN))
        if "str(data[1])" in user:
            return answer(FIX_NOTES, single_reading(2))
        if "str(data[2])" in user:
            return answer(FIX_NOTES, single_reading(0))
    raise AssertionError(f"no scripted answer for a prompt about {focal}")


def scripted_transport(url: str, headers: dict, body: dict) -> dict:
    user = body["messages"][-1]["content"]
    text = respond(user, body["top_p"])
    return {"choices": [{"message": {"role": "assistant", "content": text}}]}


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        store_path = Path(tmp) / "transcripts.jsonl"
        live = LiveBackend(api_base="https://scripted.invalid/v1", api_key="scripted",
                           transport=scripted_transport)
        gateway = Gateway(RecordBackend(live, TranscriptStore(store_path), stable=True))
        config = RunConfig(project=PROJECT, out=Path(tmp) / "out", stable_output=True)
        result = run_pipeline(config, gateway)
        if OUT.exists():
            shutil.rmtree(OUT)
        OUT.mkdir()
        shutil.copy(store_path, OUT / "transcripts.jsonl")
        sys.stdout.write((result.run_dir / "report.txt").read_text(encoding="utf-8"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
