import pytest

ACCEPTANCE_LINES: list = []


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def tikhonov():
    from ulo.instances import toy_tikhonov
    return toy_tikhonov()


@pytest.fixture
def illustration():
    from ulo.instances import toy_illustration
    return toy_illustration()
