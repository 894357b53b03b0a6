import math

import numpy as np
import pytest

from conftest import make_population
from helpers import exact_power_law
from rdslab.population import (
    DegreeTable,
    GroupShift,
    LogisticInDegree,
    OutcomeModel,
    TableMean,
    TruncatedPowerLaw,
    UniformDegrees,
    conditional_means,
    generate_population,
    true_mean,
)
from rdslab.types import ValidationError


def test_degenerate_population():
    pop = generate_population(
        10, UniformDegrees(1), OutcomeModel(TableMean({1: 1.0}), "additive", 0.0), rng_seed=0
    )
    assert pop.size == 10
    assert set(pop.true_degree.tolist()) == {1}
    assert set(pop.outcome.tolist()) == {1.0}
    assert np.array_equal(pop.reported_degree, pop.true_degree)


def test_power_law_frequencies_within_three_se():
    N = 10_000
    pop = generate_population(
        N, TruncatedPowerLaw(2.5, 50), OutcomeModel(LogisticInDegree(0, 0)), rng_seed=2024
    )
    expected = exact_power_law(2.5, 50)
    counts = np.bincount(pop.true_degree, minlength=51)[1:]
    for k, (c, p) in enumerate(zip(counts, expected), start=1):
        se = math.sqrt(p * (1 - p) / N)
        assert abs(c / N - p) <= 3 * se, (k, c / N, p)


def test_generation_is_deterministic():
    args = (500, UniformDegrees(6), OutcomeModel(LogisticInDegree(-1, 0.3)), [0.3, 0.7], 99)
    a, b = generate_population(*args), generate_population(*args)
    for field in ("outcome", "true_degree", "reported_degree", "group"):
        assert np.array_equal(getattr(a, field), getattr(b, field))


def test_group_shift_and_bounds():
    om = OutcomeModel(GroupShift(TableMean({1: 0.2, 2: 0.4}), (0.0, 0.5)), "additive", 0.0)
    pop = generate_population(200, UniformDegrees(2), om, [0.5, 0.5], rng_seed=3)
    expected = np.array([[0.2, 0.4], [0.7, 0.9]])[pop.group, pop.true_degree - 1]
    assert np.allclose(pop.outcome, expected)
    bad = OutcomeModel(GroupShift(TableMean({1: 0.8}), (0.0, 0.5)), "additive", 0.0)
    with pytest.raises(ValidationError, match="bounds"):
        generate_population(10, UniformDegrees(1), bad, [0.5, 0.5], rng_seed=0)


def test_degree_table_validation():
    with pytest.raises(ValidationError):
        DegreeTable((0.5, 0.6))
    assert DegreeTable((0.0, 0.25, 0.75)).K == 3


def test_large_K_warns():
    with pytest.warns(UserWarning, match="simple-graph"):
        generate_population(5, UniformDegrees(6), OutcomeModel(LogisticInDegree(0, 0)), rng_seed=0)


def test_true_mean_examples():
    assert true_mean(make_population([1.0] * 5, [1, 2, 3, 1, 2])) == 1.0
    pop = make_population([0.0] * 3 + [1.0] * 7, [1] * 10)
    assert true_mean(pop) == 0.7


def test_conditional_means_single_class():
    pop = make_population([0.0, 1.0, 1.0, 0.5], [3, 3, 3, 3])
    assert conditional_means(pop) == {3: (true_mean(pop), 4)}


def test_conditional_means_hand_example():
    pop = make_population([1.0, 0.0, 0.5, 1.0, 1.0], [1, 1, 2, 2, 2])
    assert conditional_means(pop) == {1: (0.5, 2), 2: (2.5 / 3, 3)}


def test_conditional_means_total_expectation(small_population):
    pop = small_population
    cm = conditional_means(pop)
    merged = sum(m * n for m, n in cm.values()) / pop.size
    assert abs(merged - true_mean(pop)) <= 1e-12
    assert sum(n for _, n in cm.values()) == pop.size
