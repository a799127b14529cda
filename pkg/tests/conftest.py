import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

from detlim.distributions import bernoulli  # noqa: E402


@pytest.fixture
def b50():
    return bernoulli(0.5)


@pytest.fixture
def b25():
    return bernoulli(0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Record a one-line verdict for an acceptance criterion.

    Call it with the criterion number, a short summary and the boolean
    outcome; the line is printed immediately and again in the terminal
    summary, and the test fails when the outcome is false.
    """
    def record(number: int, summary: str, ok: bool) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {summary}"
        _CRITERIA[number] = line
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
