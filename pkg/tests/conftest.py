import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from flexics.data import TransactionDatabase, generate_synthetic_db  # noqa: E402


@pytest.fixture
def fig1_constraints():
    """The four constraints over x1..x5 (variables 0..4)."""
    from flexics.gf2 import XorConstraint

    return [
        XorConstraint.from_vars(5, [0, 4], 1),
        XorConstraint.from_vars(5, [1, 2, 3, 4], 0),
        XorConstraint.from_vars(5, [0, 1, 2, 4], 0),
        XorConstraint.from_vars(5, [1, 3, 4], 1),
    ]


@pytest.fixture
def tiny_db():
    # rows {0,1}, {0,1}, {2}
    return TransactionDatabase.from_transactions([[0, 1], [0, 1], [2]])


@pytest.fixture(scope="session")
def bench_db():
    return generate_synthetic_db(12, 60, 0.8, seed=0, labeled=True)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
