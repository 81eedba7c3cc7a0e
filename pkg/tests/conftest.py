import pytest

_verdicts: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def verdict():
    """Record an acceptance outcome, print it, then assert it."""

    def record(number: int, name: str, passed: bool, detail: str) -> None:
        _verdicts[number] = (name, passed, detail)
        print(_format(number, name, passed, detail))
        assert passed, detail

    return record


def _format(number, name, passed, detail):
    return f"[{'PASS' if passed else 'FAIL'}] criterion {number} {name}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_verdicts):
        terminalreporter.write_line(_format(number, *_verdicts[number]))
