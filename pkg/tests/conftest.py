import pytest

_LINES: dict[int, str] = {}


@pytest.fixture
def criterion(capsys):
    """Record and print one PASS/FAIL line per acceptance criterion."""

    def report(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title} -- {detail}"
        _LINES[number] = line
        with capsys.disabled():
            print("\n" + line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_LINES):
            terminalreporter.write_line(_LINES[n])
