import pytest

_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def _report(num, ok: bool, detail: str) -> bool:
        line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
