import pytest

ACCEPTANCE: dict = {}


def _name(key):
    criterion, part = key
    return f"criterion {criterion}" + (f" {part}" if part else "")


@pytest.fixture
def acceptance():
    """Record ``(criterion, ok, detail)`` for the end-of-run summary.

    ``part`` separates supplementary runs, such as a sensitivity sweep, from
    the criterion's own verdict.
    """

    def record(criterion: int, ok: bool, detail: str, part: str = ""):
        key = (criterion, part)
        ACCEPTANCE.setdefault(key, []).append((bool(ok), detail))
        print(f"{_name(key)}: {'PASS' if ok else 'FAIL'} {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        runs = ACCEPTANCE[key]
        ok = all(r[0] for r in runs)
        detail = "; ".join(r[1] for r in runs)
        terminalreporter.write_line(f"{_name(key)}: {'PASS' if ok else 'FAIL'} ({detail})")
