import functools

import pytest

from vselbow.characterization import characterize
from vselbow.presets import default_gains, default_plant
from vselbow.scenarios import identified_plant

# acceptance outcomes, filled by tests/test_acceptance.py
CRITERIA = {}


def record(number, ok, detail):
    CRITERIA[number] = (bool(ok), detail)
    return ok


@functools.lru_cache(maxsize=None)
def datasheet(layout, frictionless=False):
    """Full characterization report, computed once per session."""
    keep = {}
    cfg = default_plant(layout, frictionless=frictionless)
    report = characterize(cfg, default_gains(layout), keep=keep)
    return report, keep


@functools.lru_cache(maxsize=None)
def elastic(layout, frictionless=False):
    """Elastic characterization only (the scenario cache shares it)."""
    return identified_plant(default_plant(layout, frictionless=frictionless), default_gains(layout))


@pytest.fixture(params=["AA", "D2"])
def layout(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
