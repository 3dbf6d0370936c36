"""Coverage, pass-rate and error-distribution reports in text, CSV and JSON."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Optional

SCHEMA_VERSION = 1
NA = "N/A"


def percent(fr: Optional[Fraction]) -> Optional[str]:
    """A fraction as a percentage string rounded half-up to 2 decimals."""
    if fr is None:
        return None
    hundredths = math.floor(Fraction(fr) * 10000 + Fraction(1, 2))
    return str(Decimal(hundredths).scaleb(-2).quantize(Decimal("0.01")))


def _ratio(num: int, den: int) -> Optional[Fraction]:
    return Fraction(num, den) if den else None


def pass_rate(candidates) -> Optional[Fraction]:
    """Share of passing candidates (TestCandidate objects or state strings);
    None when there are none."""
    states = [getattr(c, "state", c) for c in candidates]
    return _ratio(states.count("passed"), len(states))


def _mean(values) -> Optional[Fraction]:
    values = [v for v in values if v is not None]
    return sum(values, Fraction(0)) / len(values) if values else None


@dataclass
class MethodReport:
    qualified_name: str
    complexity: int
    line_covered: int = 0
    line_total: int = 0
    branch_covered: int = 0
    branch_total: int = 0
    candidates: int = 0
    passed: int = 0
    compile_errors: int = 0
    runtime_errors: int = 0
    slices: int = 0
    slice_origin: str = ""
    error: Optional[str] = None
    callee_lines: dict = field(default_factory=dict)  # name -> [covered, total]

    @property
    def line_fraction(self):
        return _ratio(self.line_covered, self.line_total)

    @property
    def branch_fraction(self):
        return _ratio(self.branch_covered, self.branch_total)

    @property
    def pass_fraction(self):
        return _ratio(self.passed, self.candidates)

    def to_json(self) -> dict:
        d = asdict(self)
        d["line_pct"] = _num(percent(self.line_fraction))
        d["branch_pct"] = _num(percent(self.branch_fraction))
        d["pass_rate_pct"] = _num(percent(self.pass_fraction))
        return d

    @classmethod
    def from_json(cls, d: dict) -> "MethodReport":
        names = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class ProjectReport:
    name: str
    methods: list = field(default_factory=list)

    def _sum(self, attr: str) -> int:
        return sum(getattr(m, attr) for m in self.methods)

    @property
    def line_average(self):
        return _mean(m.line_fraction for m in self.methods)

    @property
    def branch_average(self):
        return _mean(m.branch_fraction for m in self.methods)

    @property
    def pass_average(self):
        """Unweighted mean of per-method pass rates; methods without candidates are skipped."""
        return _mean(m.pass_fraction for m in self.methods)

    @property
    def failed(self) -> int:
        return self._sum("compile_errors") + self._sum("runtime_errors")

    @property
    def compile_share(self):
        return _ratio(self._sum("compile_errors"), self.failed)

    @property
    def runtime_share(self):
        return _ratio(self._sum("runtime_errors"), self.failed)

    def summary(self) -> dict:
        return {
            "methods": len(self.methods),
            "errored": sum(1 for m in self.methods if m.error),
            "line_covered": self._sum("line_covered"),
            "line_total": self._sum("line_total"),
            "branch_covered": self._sum("branch_covered"),
            "branch_total": self._sum("branch_total"),
            "candidates": self._sum("candidates"),
            "passed": self._sum("passed"),
            "compile_errors": self._sum("compile_errors"),
            "runtime_errors": self._sum("runtime_errors"),
            "line_pct": _num(percent(self.line_average)),
            "branch_pct": _num(percent(self.branch_average)),
            "pass_rate_pct": _num(percent(self.pass_average)),
            "compile_error_pct": _num(percent(self.compile_share)),
            "runtime_error_pct": _num(percent(self.runtime_share)),
        }


@dataclass
class CoverageReport:
    projects: list = field(default_factory=list)

    def average(self) -> dict:
        """The Avg. row: counters are summed, percentages are unweighted means
        of the project percentages."""
        ps = self.projects
        keys = (
            "methods", "errored", "line_covered", "line_total", "branch_covered", "branch_total",
            "candidates", "passed", "compile_errors", "runtime_errors",
        )
        row = {k: sum(p.summary()[k] for p in ps) for k in keys}
        row["line_pct"] = _num(percent(_mean(p.line_average for p in ps)))
        row["branch_pct"] = _num(percent(_mean(p.branch_average for p in ps)))
        row["pass_rate_pct"] = _num(percent(_mean(p.pass_average for p in ps)))
        row["compile_error_pct"] = _num(percent(_mean(p.compile_share for p in ps)))
        row["runtime_error_pct"] = _num(percent(_mean(p.runtime_share for p in ps)))
        return row

    @property
    def errored(self) -> bool:
        return any(m.error for p in self.projects for m in p.methods)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "projects": [
                {"name": p.name, **p.summary(), "focal_methods": [m.to_json() for m in p.methods]}
                for p in self.projects
            ],
            "average": self.average(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "CoverageReport":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema version {d.get('schema_version')!r}")
        return cls(
            [
                ProjectReport(p["name"], [MethodReport.from_json(m) for m in p["focal_methods"]])
                for p in d["projects"]
            ]
        )

    def merge(self, other: "CoverageReport") -> "CoverageReport":
        return CoverageReport(self.projects + other.projects)


def _num(text: Optional[str]):
    return None if text is None else float(text)


def _fmt(value) -> str:
    if value is None:
        return NA
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def _table(title: str, header: list, rows: list) -> str:
    cells = [header] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[c]) for r in cells) for c in range(len(header))]
    lines = [title]
    for r in cells:
        parts = [r[0].ljust(widths[0])] + [v.rjust(w) for v, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(parts).rstrip())
    return "\n".join(lines)


def render_text(report: CoverageReport) -> str:
    rows = [(p.name, p.summary()) for p in report.projects] + [("Avg.", report.average())]
    tables = [
        _table(
            "Line coverage (%)",
            ["Project", "Methods", "Covered", "Total", "Line %"],
            [[n, s["methods"], s["line_covered"], s["line_total"], s["line_pct"]] for n, s in rows],
        ),
        _table(
            "Branch coverage (%)",
            ["Project", "Methods", "Covered", "Total", "Branch %"],
            [[n, s["methods"], s["branch_covered"], s["branch_total"], s["branch_pct"]] for n, s in rows],
        ),
        _table(
            "Pass rate (%)",
            ["Project", "Candidates", "Passed", "Pass %"],
            [[n, s["candidates"], s["passed"], s["pass_rate_pct"]] for n, s in rows],
        ),
        _table(
            "Non-executable test distribution (%)",
            ["Project", "Failed", "Compile %", "Runtime %"],
            [
                [n, s["compile_errors"] + s["runtime_errors"], s["compile_error_pct"], s["runtime_error_pct"]]
                for n, s in rows
            ],
        ),
    ]
    detail = []
    for p in report.projects:
        for m in p.methods:
            detail.append([
                f"{p.name}:{m.qualified_name}",
                m.complexity,
                f"{m.line_covered}/{m.line_total}",
                _num(percent(m.line_fraction)),
                f"{m.branch_covered}/{m.branch_total}",
                _num(percent(m.branch_fraction)),
                f"{m.passed}/{m.candidates}",
                "errored" if m.error else "ok",
            ])
    tables.append(
        _table(
            "Focal methods",
            ["Method", "CC", "Lines", "Line %", "Branches", "Branch %", "Passed", "Status"],
            detail,
        )
    )
    return "\n\n".join(tables) + "\n"


CSV_FIELDS = (
    "level", "project", "method", "complexity",
    "line_covered", "line_total", "line_pct",
    "branch_covered", "branch_total", "branch_pct",
    "candidates", "passed", "pass_rate_pct",
    "compile_errors", "runtime_errors", "compile_error_pct", "runtime_error_pct",
    "error",
)


def render_csv(report: CoverageReport) -> str:
    """One row per focal method, per project and for the average."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, CSV_FIELDS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()

    def out(row: dict) -> None:
        w.writerow({k: _csv_value(row.get(k)) for k in CSV_FIELDS})

    for p in report.projects:
        for m in p.methods:
            d = m.to_json()
            d["compile_error_pct"] = _num(percent(_ratio(m.compile_errors, m.compile_errors + m.runtime_errors)))
            d["runtime_error_pct"] = _num(percent(_ratio(m.runtime_errors, m.compile_errors + m.runtime_errors)))
            out({"level": "method", "project": p.name, "method": m.qualified_name, **d})
        out({"level": "project", "project": p.name, **p.summary()})
    out({"level": "average", "project": "Avg.", **report.average()})
    return buf.getvalue()


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.2f}"
    return str(v)


def render_report(report: CoverageReport, fmt: str = "text") -> str:
    if fmt == "text":
        return render_text(report)
    if fmt == "csv":
        return render_csv(report)
    if fmt == "json":
        return json.dumps(report.to_json(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")
