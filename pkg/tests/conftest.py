import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

import acceptance_log  # noqa: E402
import instances  # noqa: E402


@pytest.fixture(scope="session")
def ridge_small():
    return instances.ridge(n=60, d=20, q=2, seed=1)


@pytest.fixture(scope="session")
def logistic_small():
    return instances.logistic(n=60, d=20, q=2, seed=2)


@pytest.fixture(scope="session")
def elastic_small():
    return instances.elastic(n=60, d=20, seed=3)


def pytest_terminal_summary(terminalreporter):
    lines = acceptance_log.summary_lines()
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
