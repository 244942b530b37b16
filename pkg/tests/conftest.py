import pytest

_REPORT: dict[int, str] = {}


class CriterionReport:
    """Collects one pass/fail line per acceptance criterion; the lines are
    printed in the terminal summary so they survive output capture."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.notes: list[str] = []

    def note(self, text: str) -> None:
        self.notes.append(text)

    def check(self, ok: bool, detail: str = "") -> None:
        status = "PASS" if ok else "FAIL"
        info = "; ".join(self.notes + ([detail] if detail else []))
        line = f"criterion {self.number:>2} {status}  {self.title}" + (f"  ({info})" if info else "")
        _REPORT[self.number] = line
        print(line)
        assert ok, line


@pytest.fixture
def criterion():
    return CriterionReport


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_REPORT):
            terminalreporter.write_line(_REPORT[key])
