import os
import sys

from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

import pytest


@pytest.fixture
def verdict(request):
    """``verdict(n, ok, detail)`` records one acceptance line and asserts ``ok``."""
    lines = request.config.stash.setdefault(_LINES, [])

    def record(number, ok, detail):
        lines.append((number, bool(ok), detail))
        assert ok, f"criterion {number}: {detail}"
    return record


_LINES = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(lines, key=lambda t: t[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}")
