import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rdslab import (  # noqa: E402
    LogisticInDegree,
    OutcomeModel,
    Population,
    Sample,
    UniformDegrees,
    generate_population,
)

FIXTURES = Path(__file__).parent / "fixtures"

ACCEPTANCE_LINES = []


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def small_population():
    return generate_population(
        300, UniformDegrees(8), OutcomeModel(LogisticInDegree(-2.0, 0.4)), rng_seed=11
    )


def make_sample(y, d, **kw):
    return Sample(np.asarray(y, dtype=float), np.asarray(d), **kw)


def make_population(y, d, K=None, group=None, bounds=(0.0, 1.0)):
    d = np.asarray(d)
    return Population(np.asarray(y, dtype=float), d, d, K or int(d.max()), bounds, group)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
