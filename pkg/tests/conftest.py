import pytest

ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def report():
    """Record one acceptance line: report(number, ok, detail)."""

    def _report(number, ok, detail):
        ACCEPTANCE[str(number)] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=int):
        terminalreporter.write_line(ACCEPTANCE[key])
