"""Collects acceptance-criterion verdicts and prints them after the run."""

import contextlib

CRITERIA: dict = {}


@contextlib.contextmanager
def criterion(number: int, title: str):
    try:
        yield
    except BaseException as e:
        CRITERIA[number] = (title, False, f"{type(e).__name__}: {str(e).splitlines()[0] if str(e) else ''}")
        print(f"[acceptance {number}] FAIL {title}")
        raise
    CRITERIA[number] = (title, True, "")
    print(f"[acceptance {number}] PASS {title}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        title, ok, why = CRITERIA[n]
        line = f"{n}. {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  ({why})" if why else ""))
