"""Prompt rendering for the decompose, generate and fix families.

All text lives in ``assets/prompts``; this module only fills placeholders.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from string import Template
from typing import Optional

from .extraction import FIXED_TEST, SLICE_PLAN, TEST_FILE, TestCandidate
from .focal import ContextBundle, FocalMethod
from .runtime.interpreter import COMPILE_ERROR, PASSED, ExecutionOutcome
from .slicing import SlicePlan

DECOMPOSE = "decompose"
GENERATE = "generate"
FIX = "fix"

ASSET_FILES = (
    "system.md",
    "context.md",
    "decompose.md",
    "decompose_example.md",
    "output_slice_plan.md",
    "generate.md",
    "scenario_example.md",
    "instructions.md",
    "test_skeleton.mini",
    "output_test_file.md",
    "fix.md",
    "causes_compile.md",
    "causes_runtime.md",
)

# the four instruction categories, in the order they appear in instructions.md
REGISTRY_CATEGORIES = (
    "Test-file structure",
    "Accessing non-public elements",
    "Nested-construct handling",
    "Stub and double usage",
)


class MissingAssetError(RuntimeError):
    pass


@dataclass(frozen=True)
class PromptAssets:
    texts: dict

    def __getitem__(self, name: str) -> str:
        return self.texts[name]

    def template(self, name: str) -> Template:
        return Template(self.texts[name])


def load_assets(directory: Optional[Path] = None) -> PromptAssets:
    """Read every prompt asset; raises MissingAssetError naming the absent files."""
    if directory is None:
        return _default_assets()
    return _read_assets(Path(directory))


def _read_assets(directory) -> PromptAssets:
    missing = [name for name in ASSET_FILES if not (directory / name).is_file()]
    if missing:
        raise MissingAssetError(f"missing prompt asset(s) in {directory}: {', '.join(missing)}")
    return PromptAssets(
        {name: (directory / name).read_text(encoding="utf-8").rstrip("\n") for name in ASSET_FILES}
    )


@functools.lru_cache(maxsize=1)
def _default_assets() -> PromptAssets:
    return _read_assets(resources.files("slicegen") / "assets" / "prompts")


@dataclass(frozen=True)
class PromptBundle:
    family: str
    messages: tuple  # (role, text) pairs, system first
    expected_payload_kind: str

    @property
    def rendered_length(self) -> int:
        return sum(len(text) for _, text in self.messages)

    def length_report(self) -> str:
        parts = ", ".join(f"{role}={len(text)}" for role, text in self.messages)
        return f"{self.family}: {self.rendered_length} chars ({parts})"


def _fence(code: str, lang: str = "mini") -> str:
    return f"```{lang}\n{code}\n```"


def render_context(focal: FocalMethod, ctx: ContextBundle, assets: Optional[PromptAssets] = None) -> str:
    """The prefix shared by every prompt family."""
    assets = assets or load_assets()
    source = focal.source_text
    if ctx.focal_doc:
        source = ctx.focal_doc + "\n" + source
    globals_ = "\n\n".join(_fence(g) for g in ctx.global_decls) or "None."
    docs = dict(ctx.callee_docs)
    callees = []
    for name, body in ctx.callee_bodies:
        if not body:
            callees.append(f"### `{name}`\n\nNot defined in the project; only its name is known.")
            continue
        text = docs[name] + "\n" + body if name in docs else body
        callees.append(f"### `{name}`\n\n{_fence(text)}")
    first, last = focal.span
    return assets.template("context.md").substitute(
        name=focal.name,
        file=focal.file,
        cc=focal.complexity.cyclomatic,
        first=first,
        last=last,
        source=source,
        globals=globals_,
        callees="\n\n".join(callees) or "None.",
    )


def _bundle(family: str, kind: str, user: str, assets: PromptAssets) -> PromptBundle:
    return PromptBundle(family, (("system", assets["system.md"]), ("user", user)), kind)


def _global_names(ctx: ContextBundle) -> list[str]:
    names = []
    for text in ctx.global_decls:
        for line in text.split("\n"):
            words = line.split()
            if len(words) > 1 and words[0] == "let":
                names.append(words[1].split(":")[0].split("=")[0])
                break
    return names


def render_decompose(focal: FocalMethod, ctx: ContextBundle, assets: Optional[PromptAssets] = None) -> PromptBundle:
    assets = assets or load_assets()
    recite = [f"- `{name}` (function)" for name, _ in ctx.callee_bodies]
    recite += [f"- `{name}` (global)" for name in _global_names(ctx)]
    if not recite:
        recite = ["- None: `" + focal.name + "` uses only its parameters and locals."]
    task = assets.template("decompose.md").substitute(
        name=focal.name, recite="\n".join(recite), example=assets["decompose_example.md"]
    )
    user = "\n\n".join([render_context(focal, ctx, assets), task, assets["output_slice_plan.md"]])
    return _bundle(DECOMPOSE, SLICE_PLAN, user, assets)


def render_generate(
    focal: FocalMethod,
    ctx: ContextBundle,
    plan: SlicePlan,
    slice_index: int,
    assets: Optional[PromptAssets] = None,
    variant: int = 1,
) -> PromptBundle:
    """Prompt for one test file covering slice *slice_index* (1-based).

    Every slice's code appears once, in the plan section; the target is
    marked there and the other slices are labelled as analyzed context.
    """
    if not 1 <= slice_index <= len(plan.slices):
        raise IndexError(f"slice index {slice_index} out of range 1..{len(plan.slices)}")
    assets = assets or load_assets()
    blocks = []
    for s in plan.slices:
        if s.index != slice_index:
            label = "context, already analyzed"
        elif len(plan.slices) == 1:
            label = "TARGET, the whole body"
        else:
            label = "TARGET"
        blocks.append(f"## Slice {s.index} ({label})\n\n{s.description}\n\n{_fence(s.recited_code)}")
    target = plan.slices[slice_index - 1]
    task = assets.template("generate.md").substitute(
        name=focal.name,
        count=len(plan.slices),
        plan="\n\n".join(blocks),
        index=slice_index,
        description=target.description,
        example=assets["scenario_example.md"],
        tips=assets["instructions.md"],
        skeleton=assets["test_skeleton.mini"],
    )
    if variant > 1:
        task += (
            f"\n\nThis is test file {variant} for slice {slice_index}. Prefer scenarios and "
            "inputs that differ from an obvious first choice."
        )
    user = "\n\n".join([render_context(focal, ctx, assets), task, assets["output_test_file.md"]])
    return _bundle(GENERATE, TEST_FILE, user, assets)


def render_fix(
    broken: TestCandidate,
    outcome: ExecutionOutcome,
    focal: FocalMethod,
    ctx: ContextBundle,
    assets: Optional[PromptAssets] = None,
) -> PromptBundle:
    if outcome.status == PASSED:
        raise ValueError("render_fix needs a failing outcome")
    assets = assets or load_assets()
    compile_first = outcome.status == COMPILE_ERROR
    causes = [assets["causes_compile.md"], assets["causes_runtime.md"]]
    if not compile_first:
        causes.reverse()
    lines = broken.source.split("\n")
    n = outcome.failing_line
    if n is not None and 1 <= n <= len(lines):
        failing = f"Failing line {n} of the test file:\n\n{_fence(lines[n - 1])}"
    else:
        failing = "The report does not point at a line of the test file."
    task = assets.template("fix.md").substitute(
        name=focal.name,
        status_text="compile error" if compile_first else "runtime error",
        source=broken.source,
        message=outcome.message,
        failing=failing,
        causes="\n\n".join(causes),
    )
    user = "\n\n".join([render_context(focal, ctx, assets), task, assets["output_test_file.md"]])
    return _bundle(FIX, FIXED_TEST, user, assets)
