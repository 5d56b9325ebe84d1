import pytest

_RESULTS: dict[int, tuple[str, bool, str]] = {}


class Criterion:
    """Records a PASS/FAIL line for an acceptance criterion, then asserts."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title

    def conclude(self, passed: bool, detail: str) -> None:
        line = f"criterion {self.number:2d} {'PASS' if passed else 'FAIL'}: {self.title} | {detail}"
        print(line)
        _RESULTS[self.number] = (self.title, passed, detail)
        assert passed, line


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, passed, detail = _RESULTS[number]
        terminalreporter.write_line(
            f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title} | {detail}")
