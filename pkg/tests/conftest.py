import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    """Register one acceptance line; the test still asserts on its own."""

    def _record(tag: str, passed: bool, detail: str) -> None:
        line = f"{tag} {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
