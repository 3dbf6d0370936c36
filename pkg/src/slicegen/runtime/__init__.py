"""Execution of MiniLang test files with coverage instrumentation."""

from .checker import CompileError, check
from .interpreter import (
    COMPILE_ERROR,
    PASSED,
    RUNTIME_ERROR,
    ErrorDistribution,
    ExecutionLimits,
    ExecutionOutcome,
    RawCoverage,
    classify_outcomes,
    discover_tests,
    run_test,
)

__all__ = [
    "COMPILE_ERROR",
    "PASSED",
    "RUNTIME_ERROR",
    "CompileError",
    "ErrorDistribution",
    "ExecutionLimits",
    "ExecutionOutcome",
    "RawCoverage",
    "check",
    "classify_outcomes",
    "discover_tests",
    "run_test",
]
