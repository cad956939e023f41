import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one summary line per acceptance criterion."""

    def add(number, title, ok, detail):
        _ACCEPTANCE.append((number, f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} | {detail}"))

    return add


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
