import pytest

RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record the outcome of one acceptance criterion and print its status line."""

    def report(number: int, ok: bool, info: str = "") -> bool:
        RESULTS[number] = (bool(ok), info)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {info}".rstrip())
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, info = RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} {info}".rstrip())
