import pytest

CRITERIA_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str = "", gating: bool = True):
    tag = "PASS" if ok else ("FAIL" if gating else "WARN")
    line = f"[{tag}] criterion {number:2d} {title}" + (f": {detail}" if detail else "")
    CRITERIA_LINES.append(line)
    print(line)
    return ok


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)
