"""Collects acceptance-criterion verdicts and prints one line per criterion at the end of the run."""

from __future__ import annotations

import pytest

_VERDICTS: dict[int, tuple[str, bool, str]] = {}


class CriterionRecorder:
    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title

    def __call__(self, passed: bool, detail: str) -> bool:
        _VERDICTS[self.number] = (self.title, bool(passed), detail)
        print(f"criterion {self.number:2d} {'PASS' if passed else 'FAIL'}: {self.title} ({detail})")
        return bool(passed)


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("acceptance")
    number, title = marker.args
    return CriterionRecorder(number, title)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        title, passed, detail = _VERDICTS[number]
        terminalreporter.write_line(
            f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title} ({detail})")
