import re

import pytest

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}
_CRITERION = re.compile(r"test_criterion_(\d+)")


@pytest.fixture
def acceptance(request):
    """Record ``(ok, detail)`` for the acceptance criterion named by the test."""
    number = int(_CRITERION.search(request.node.name).group(1))

    def record(ok: bool, detail: str) -> None:
        _ACCEPTANCE[number] = (bool(ok), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            match = _CRITERION.search(getattr(report, "nodeid", ""))
            if match and (report.when == "call" or status == "error"):
                outcomes[int(match.group(1))] = status
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(outcomes):
        ok, detail = _ACCEPTANCE.get(number, (False, "no result recorded"))
        verdict = "PASS" if ok and outcomes[number] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {verdict}  {detail}")
