import random

import pytest
from hypothesis import HealthCheck, settings

from lsorder.geometry import UnitPoint

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def uniform_points(n, d, seed):
    rng = random.Random(seed)
    return [UnitPoint.from_floats([rng.random() for _ in range(d)]) for _ in range(n)]


@pytest.fixture
def points_factory():
    return uniform_points


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Call with (number, passed, detail); records a PASS/FAIL line and asserts."""

    def record(number, passed, detail):
        ACCEPTANCE_LINES.append(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
        assert passed, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
