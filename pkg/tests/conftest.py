import time

import pytest

_CRITERIA: dict[int, str] = {}


class CriterionRecorder:
    """Times one acceptance criterion and records its outcome line."""

    def __init__(self, number: int, title: str) -> None:
        self.number = number
        self.title = title
        self.start = time.perf_counter()
        self.detail = ""

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def skip(self, reason: str) -> None:
        _CRITERIA[self.number] = f"criterion {self.number} ({self.title}): SKIP ({reason})"
        pytest.skip(reason)


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    number, title = marker.args
    rec = CriterionRecorder(number, title)
    yield rec
    if number in _CRITERIA:
        return
    call = getattr(request.node, "rep_call", None)
    status = "PASS" if call is not None and call.passed else "FAIL"
    detail = f"; {rec.detail}" if rec.detail else ""
    _CRITERIA[number] = f"criterion {number} ({title}): {status} in {rec.elapsed():.1f}s{detail}"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call":
        item.rep_call = report


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[number])
