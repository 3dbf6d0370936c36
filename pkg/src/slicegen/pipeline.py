"""End-to-end orchestration: scan, decompose, generate per slice, isolate,
repair, execute and measure."""

from __future__ import annotations

import configparser
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .extraction import (
    PASSED,
    SLICE_PLAN,
    TEST_FILE,
    extract_payload,
    isolate_tests,
)
from .focal import (
    ContextBundle,
    FocalMethod,
    build_context,
    focal_methods,
    load_project,
)
from .llm import (
    DEFAULT_MODEL,
    FormatFailureExhausted,
    Gateway,
    LiveBackend,
    LLMError,
    RecordBackend,
    ReplayBackend,
    TranscriptStore,
)
from .minilang.analysis import COMPLEX_THRESHOLD, branch_sites, statement_lines
from .prompting import PromptAssets, load_assets, render_context, render_decompose, render_generate
from .repair import DEFAULT_MAX_ROUNDS, RepairContext, self_debug_loop
from .report import CoverageReport, MethodReport, ProjectReport, render_report
from .runtime.interpreter import ExecutionLimits, ExecutionOutcome, RawCoverage, run_test
from .slicing import SlicePlan, estimate_conditions, fallback_slice, validate_slice_plan

log = logging.getLogger(__name__)

BACKENDS = ("replay", "record", "live")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    project: Path = Path(".")
    threshold: int = COMPLEX_THRESHOLD
    backend: str = "replay"
    transcripts: Optional[Path] = None
    model: str = DEFAULT_MODEL
    max_fix_rounds: int = DEFAULT_MAX_ROUNDS
    tests_per_slice: int = 1
    context_depth: int = 1
    max_steps: int = ExecutionLimits.max_steps
    max_call_depth: int = ExecutionLimits.max_call_depth
    max_output_tokens: int = 2048
    out: Path = Path("out")
    run_id: Optional[str] = None
    stable_output: bool = False
    workers: int = 1

    @property
    def limits(self) -> ExecutionLimits:
        return ExecutionLimits(self.max_steps, self.max_call_depth)

    def validate(self) -> None:
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {', '.join(BACKENDS)}")
        for name in ("threshold", "max_fix_rounds", "tests_per_slice", "context_depth",
                     "max_steps", "max_call_depth", "workers"):
            if getattr(self, name) < (0 if name in ("threshold", "max_fix_rounds") else 1):
                raise ConfigError(f"{name} is out of range: {getattr(self, name)}")


def _coerce(kind, raw: str):
    if kind in (int, "int"):
        return int(raw)
    if kind in (bool, "bool"):
        low = raw.strip().lower()
        if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
            raise ConfigError(f"not a boolean: {raw!r}")
        return low in ("1", "true", "yes", "on")
    if kind in (Path, "Path", "Optional[Path]"):
        return Path(raw)
    return raw


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",))
    try:
        parser.read_string("[run]\n" + Path(path).read_text(encoding="utf-8"))
    except (OSError, configparser.Error) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    types = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    for key, raw in parser["run"].items():
        key = key.replace("-", "_")
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            values[key] = _coerce(types[key], raw)
        except ValueError as e:
            raise ConfigError(f"bad value for {key}: {raw!r}") from e
    return values


def make_gateway(config: RunConfig) -> Gateway:
    if config.backend == "replay":
        if config.transcripts is None or not Path(config.transcripts).exists():
            raise ConfigError("replay backend needs an existing --transcripts file or directory")
        backend = ReplayBackend(TranscriptStore(config.transcripts))
    elif config.backend == "record":
        if config.transcripts is None or Path(config.transcripts).is_dir():
            raise ConfigError("record backend needs a --transcripts .jsonl file path")
        backend = RecordBackend(LiveBackend(), TranscriptStore(config.transcripts), config.stable_output)
    else:
        backend = LiveBackend()
    if config.backend != "replay" and not backend_key_present(backend):
        raise ConfigError("live access needs an API key in SLICEGEN_API_KEY")
    return Gateway(backend, config.model, config.max_output_tokens)


def backend_key_present(backend) -> bool:
    live = backend.live if isinstance(backend, RecordBackend) else backend
    return bool(live.api_key)


# -- per-method work -------------------------------------------------------------------


@dataclass
class CandidateRecord:
    candidate: object  # TestCandidate, final state
    outcome: ExecutionOutcome
    attempts: list = field(default_factory=list)

    def to_json(self) -> dict:
        c = self.candidate
        return {
            "id": c.id,
            "slice": c.slice_index,
            "name": c.name,
            "state": c.state,
            "history": list(c.history),
            "fix_round": c.fix_round,
            "outcome": self.outcome.to_json(),
        }


@dataclass
class MethodResult:
    focal: FocalMethod
    context: str = ""
    plan: Optional[SlicePlan] = None
    decompose_note: str = ""
    slice_notes: dict = field(default_factory=dict)  # slice index -> note
    records: list = field(default_factory=list)
    prompt_lengths: list = field(default_factory=list)
    report: Optional[MethodReport] = None
    error: Optional[str] = None


def measure(focal: FocalMethod, coverage: RawCoverage, programs) -> tuple:
    """(line_covered, line_total, arm_covered, arm_total, callee_lines) for *focal*."""
    name = focal.name
    lines = statement_lines(focal.function)
    covered = coverage.lines_of(name) & set(lines)
    sites = branch_sites(focal.function)
    arms = sum(
        1 for line in sites for arm in (True, False)
        if coverage.branch_hits.get((name, line, arm), 0) > 0
    )
    callees = {}
    for f in focal.program.functions:
        if f.name != name and coverage.lines_of(f.name):
            total = statement_lines(f)
            callees[f.name] = [len(coverage.lines_of(f.name) & set(total)), len(total)]
    return len(covered), len(lines), arms, 2 * len(sites), callees


def _plan_validator(focal: FocalMethod):
    def check(text: str) -> None:
        validate_slice_plan(extract_payload(text, SLICE_PLAN).decoded, focal)
    return check


def _test_file_validator(text: str) -> None:
    isolate_tests(extract_payload(text, TEST_FILE))


def process_method(
    focal: FocalMethod,
    programs,
    gateway: Gateway,
    config: RunConfig,
    assets: PromptAssets,
) -> MethodResult:
    """Run the whole per-method flow; gateway failures other than repeated
    malformed answers mark the method errored and stop its processing."""
    result = MethodResult(focal)
    ctx = build_context(programs, focal, config.context_depth)
    result.context = render_context(focal, ctx, assets)
    try:
        _generate_and_repair(result, focal, ctx, programs, gateway, config, assets)
    except LLMError as e:
        log.warning("%s: %s", focal.qualified_name, e)
        result.error = f"{type(e).__name__}: {e}"
    result.report = _method_report(result, programs, config)
    return result


def _generate_and_repair(result, focal, ctx: ContextBundle, programs, gateway, config, assets):
    bundle = render_decompose(focal, ctx, assets)
    result.prompt_lengths.append(bundle.length_report())
    try:
        text, n = gateway.complete_with_escalation(bundle, _plan_validator(focal))
        result.plan = validate_slice_plan(extract_payload(text, SLICE_PLAN).decoded, focal)
        result.decompose_note = f"accepted on attempt {n}"
    except FormatFailureExhausted as e:
        result.plan = fallback_slice(focal)
        result.decompose_note = f"fallback after {len(e.attempts)} rejected attempts: {e.errors[-1]}"
    repair = RepairContext(focal, ctx, list(programs), config.limits, assets)
    for s in result.plan.slices:
        for variant in range(1, config.tests_per_slice + 1):
            bundle = render_generate(focal, ctx, result.plan, s.index, assets, variant)
            result.prompt_lengths.append(bundle.length_report())
            try:
                text, n = gateway.complete_with_escalation(bundle, _test_file_validator)
            except FormatFailureExhausted as e:
                result.slice_notes[s.index] = f"no test file after {len(e.attempts)} attempts"
                continue
            candidates = isolate_tests(extract_payload(text, TEST_FILE), focal.qualified_name, s.index)
            for cand in candidates:
                if variant > 1:
                    cand = replace(cand, name=f"{cand.name}@{variant}")
                result.records.append(_execute(cand, focal, gateway, config, repair))


def _execute(cand, focal, gateway, config, repair) -> CandidateRecord:
    outcome = run_test(focal.program, cand.source, config.limits)
    if outcome.passed:
        return CandidateRecord(cand.advance(PASSED), outcome)
    final, attempts, outcome = self_debug_loop(
        cand, focal.program, gateway, config.max_fix_rounds, repair=repair, outcome=outcome
    )
    return CandidateRecord(final, outcome, attempts)


def _method_report(result: MethodResult, programs, config: RunConfig) -> MethodReport:
    focal = result.focal
    coverage = RawCoverage.for_program(focal.program)
    for rec in result.records:
        if rec.candidate.state != PASSED:
            continue
        rerun = run_test(focal.program, rec.candidate.source, config.limits)
        if not rerun.passed:  # the interpreter is deterministic; this would be a bug
            raise RuntimeError(f"accepted candidate {rec.candidate.id} failed on re-run")
        coverage = coverage.merge(rerun.coverage)
    lc, lt, bc, bt, callees = measure(focal, coverage, programs)
    failed = [r.outcome for r in result.records if r.candidate.state != PASSED]
    return MethodReport(
        qualified_name=focal.qualified_name,
        complexity=focal.complexity.cyclomatic,
        line_covered=lc,
        line_total=lt,
        branch_covered=bc,
        branch_total=bt,
        candidates=len(result.records),
        passed=sum(1 for r in result.records if r.candidate.state == PASSED),
        compile_errors=sum(1 for o in failed if o.status == "compile_error"),
        runtime_errors=sum(1 for o in failed if o.status == "runtime_error"),
        slices=len(result.plan.slices) if result.plan else 0,
        slice_origin=result.plan.origin if result.plan else "",
        error=result.error,
        callee_lines=callees,
    )


# -- artifacts --------------------------------------------------------------------------

_UNSAFE = re.compile(r"[^A-Za-z0-9._@~-]+")


def focal_dir_name(qualified_name: str) -> str:
    path, _, name = qualified_name.partition("::")
    return _UNSAFE.sub("_", path.replace("/", "__")) + "--" + _UNSAFE.sub("_", name)


def _jsonl(items) -> str:
    return "".join(json.dumps(x, sort_keys=True, ensure_ascii=False) + "\n" for x in items)


def write_method_artifacts(run_dir: Path, result: MethodResult) -> None:
    d = run_dir / focal_dir_name(result.focal.qualified_name)
    d.mkdir(parents=True, exist_ok=True)
    context = result.context + "\n\n## Prompt sizes\n\n" + "\n".join(
        f"- {x}" for x in result.prompt_lengths
    ) + "\n"
    (d / "context.md").write_text(context, encoding="utf-8")
    slices = {"decomposition": result.decompose_note, "error": result.error}
    if result.plan is not None:
        est = estimate_conditions(result.plan, result.focal)
        slices.update(result.plan.to_json())
        slices["conditions"] = {
            "per_slice": list(est.per_slice_conditions), "sum": est.sum, "product": est.product,
        }
        slices["notes"] = {str(k): v for k, v in sorted(result.slice_notes.items())}
    (d / "slices.json").write_text(
        json.dumps(slices, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    for rec in result.records:
        c = rec.candidate
        sd = d / f"slice-{c.slice_index}"
        sd.mkdir(exist_ok=True)
        stem = _UNSAFE.sub("_", c.name)
        (sd / f"test-{stem}.mini").write_text(c.source + "\n", encoding="utf-8")
        if c.original_source and c.original_source != c.source:
            (sd / f"test-{stem}.orig.mini").write_text(c.original_source + "\n", encoding="utf-8")
    (d / "fixlog.jsonl").write_text(
        _jsonl(a.to_json() for r in result.records for a in r.attempts), encoding="utf-8"
    )
    (d / "outcomes.jsonl").write_text(_jsonl(r.to_json() for r in result.records), encoding="utf-8")


def write_reports(run_dir: Path, report: CoverageReport) -> None:
    for fmt, ext in (("text", "txt"), ("csv", "csv"), ("json", "json")):
        (run_dir / f"report.{ext}").write_text(render_report(report, fmt), encoding="utf-8")


@dataclass
class RunResult:
    report: CoverageReport
    run_dir: Path
    methods: list

    @property
    def errored(self) -> bool:
        return self.report.errored


def run_pipeline(
    config: RunConfig,
    gateway: Optional[Gateway] = None,
    assets: Optional[PromptAssets] = None,
) -> RunResult:
    """Process every complex method of the project and write all artifacts.

    Raises ConfigError or OSError-derived errors only for problems with the
    configuration, the project or the backend; per-method failures end up in
    the report.
    """
    config.validate()
    assets = assets or load_assets()
    project = load_project(config.project)
    gateway = gateway or make_gateway(config)
    focals = focal_methods(project, config.threshold)
    run_id = config.run_id or (
        "stable" if config.stable_output else datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    )
    run_dir = Path(config.out) / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    programs = project.programs

    def work(focal):
        return process_method(focal, programs, gateway, config, assets)

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            results = list(pool.map(work, focals))
    else:
        results = [work(f) for f in focals]
    # single collector writes everything, in scan order
    for r in results:
        write_method_artifacts(run_dir, r)
    name = Path(config.project).resolve().name
    report = CoverageReport([ProjectReport(name, [r.report for r in results])])
    write_reports(run_dir, report)
    return RunResult(report, run_dir, results)
