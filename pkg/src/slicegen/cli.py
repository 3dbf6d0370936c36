"""Command-line entry point: ``slicegen scan|generate|report|exec``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .focal import EmptyProjectError, format_scan_line, scan_project
from .minilang.analysis import COMPLEX_THRESHOLD
from .minilang.lexer import ParseError
from .minilang.parser import parse_program
from .pipeline import ConfigError, RunConfig, read_config_file, run_pipeline
from .prompting import MissingAssetError, load_assets
from .report import CoverageReport, render_report
from .runtime.interpreter import ExecutionLimits, run_test

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_METHOD_ERRORS = 2

log = logging.getLogger("slicegen")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slicegen", description="Slice-based test generation for MiniLang.")
    p.add_argument("--trace", action="store_true", help="verbose logging (and line traces for exec)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scan", help="list complex focal methods")
    s.add_argument("--project", required=True, type=Path)
    s.add_argument("--threshold", type=int, default=COMPLEX_THRESHOLD)

    g = sub.add_parser("generate", help="run the generation pipeline")
    g.add_argument("--config", type=Path, help="flat key = value file; flags override it")
    g.add_argument("--project", type=Path)
    g.add_argument("--backend", choices=("replay", "record", "live"))
    g.add_argument("--transcripts", type=Path)
    g.add_argument("--model")
    g.add_argument("--threshold", type=int)
    g.add_argument("--max-fix-rounds", type=int)
    g.add_argument("--tests-per-slice", type=int)
    g.add_argument("--context-depth", type=int)
    g.add_argument("--workers", type=int)
    g.add_argument("--out", type=Path)
    g.add_argument("--run-id")
    g.add_argument("--stable-output", action="store_true", default=None,
                   help="fixed run id and no timestamps, for byte-identical reruns")
    g.add_argument("--trace", action="store_true", dest="trace_sub")

    r = sub.add_parser("report", help="re-render or merge report.json files")
    r.add_argument("reports", nargs="+", type=Path)
    r.add_argument("--format", choices=("text", "csv", "json"), default="text")

    e = sub.add_parser("exec", help="run a test file against a program")
    e.add_argument("--program", required=True, type=Path)
    e.add_argument("--test", required=True, type=Path)
    e.add_argument("--max-steps", type=int, default=ExecutionLimits.max_steps)
    e.add_argument("--trace", action="store_true", dest="trace_sub")
    return p


def cmd_scan(args) -> int:
    for m in scan_project(args.project, args.threshold):
        print(format_scan_line(m))
    return EXIT_OK


def config_from_args(args) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for key in ("project", "backend", "transcripts", "model", "threshold", "max_fix_rounds",
                "tests_per_slice", "context_depth", "workers", "out", "run_id", "stable_output"):
        value = getattr(args, key)
        if value is not None:
            values[key] = value
    if "project" not in values:
        raise ConfigError("no project given (--project or 'project' in --config)")
    return RunConfig(**values)


def cmd_generate(args) -> int:
    config = config_from_args(args)
    load_assets()  # fail before any work if an asset is missing
    result = run_pipeline(config)
    sys.stdout.write(render_report(result.report, "text"))
    print(f"artifacts: {result.run_dir}")
    return EXIT_METHOD_ERRORS if result.errored else EXIT_OK


def cmd_report(args) -> int:
    merged = CoverageReport()
    for path in args.reports:
        merged = merged.merge(CoverageReport.from_json(json.loads(path.read_text(encoding="utf-8"))))
    sys.stdout.write(render_report(merged, args.format))
    return EXIT_OK


def cmd_exec(args) -> int:
    program = parse_program(args.program.read_text(encoding="utf-8"), args.program.name)
    trace = [] if args.trace else None
    outcome = run_test(program, args.test.read_text(encoding="utf-8"),
                       ExecutionLimits(max_steps=args.max_steps), trace)
    for event in trace or ():
        print("\t".join(str(x) for x in event))
    for line in outcome.output:
        print(f"output: {line}")
    print(json.dumps({**outcome.to_json(), "coverage": outcome.coverage.to_json()}, sort_keys=True))
    return EXIT_OK if outcome.passed else EXIT_METHOD_ERRORS


COMMANDS = {"scan": cmd_scan, "generate": cmd_generate, "report": cmd_report, "exec": cmd_exec}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.trace = args.trace or getattr(args, "trace_sub", False)
    logging.basicConfig(
        level=logging.DEBUG if args.trace else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, MissingAssetError, EmptyProjectError, ParseError, OSError, ValueError) as e:
        print(f"slicegen: error: {e}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
