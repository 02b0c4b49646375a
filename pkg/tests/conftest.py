import pytest

_verdicts = {}


@pytest.fixture
def verdict():
    """Record one pass/fail line per acceptance criterion and return the boolean."""

    def record(number, ok, detail=""):
        line = f"ACCEPTANCE {number:2d} {'PASS' if ok else 'FAIL'}  {detail}"
        _verdicts[number] = line
        print(line)
        return ok

    return record


def pytest_runtest_makereport(item, call):
    # a criterion that crashed before reporting still gets a line
    number = getattr(item.function, "criterion", None)
    if number is not None and call.when == "call" and call.excinfo is not None and number not in _verdicts:
        _verdicts[number] = f"ACCEPTANCE {number:2d} FAIL  error: {call.excinfo.typename}"


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_verdicts):
        terminalreporter.write_line(_verdicts[n])
