"""Monte Carlo contention simulator and discretization."""

import csv
import math

import numpy as np
import pytest

from app.selection.analysis import (
    expected_selection_time,
    expected_time_capped_at_tmax,
    success_probability,
)
from app.selection.errors import ValidationError
from app.selection.model import (
    ContinuousMapping,
    DiscreteMapping,
    InverseMetric,
    LinearDecay,
    MetricDistribution,
    NoTransmit,
    SelectionParams,
    as_seconds,
    derive_params,
)
from app.selection.scheme1 import optimize_finite
from app.selection.scheme2 import solve_constrained
from app.selection.simulator import (
    BLOCK_TRIALS,
    TimeConvention,
    discretize_mapping,
    estimate,
    run_trial,
)
from tests.conftest import make_mapping


def within(stats, mapping, k, delta, sigmas=4.0):
    p = success_probability(mapping.alphas, k)
    gamma = expected_selection_time(mapping.alphas, k, delta)
    # events rarer than 1 / trials may never be drawn, so the sample stderr can be 0
    se_p = max(math.sqrt(p * (1.0 - p) / stats.trials), 1.0 / stats.trials)
    cap = len(mapping.alphas) * delta
    se_t = max(stats.time_stderr, cap / stats.trials)
    assert abs(stats.success_prob - p) <= sigmas * se_p
    assert abs(stats.mean_selection_time - gamma) <= sigmas * se_t


# ============== Single rounds ==============

def test_lone_node_always_wins():
    mapping = make_mapping((1.0,), k=1)
    outcome = run_trial(mapping, mapping.params, np.random.default_rng(0))
    assert outcome.success
    assert outcome.stop_time == 0.0
    assert outcome.winner == 0
    assert outcome.t2 is NoTransmit


def test_winner_holds_best_metric():
    mapping = optimize_finite(6, 5).mapping
    for seed in range(50):
        u = np.random.default_rng(seed).random((1, 6))
        outcome = run_trial(mapping, mapping.params, np.random.default_rng(seed))
        if outcome.success:
            assert outcome.winner == int(np.argmax(u))
            assert as_seconds(outcome.t1) < as_seconds(outcome.t2)


def test_everyone_at_zero_always_collides():
    mapping = make_mapping((1.0, 0.0), k=2)
    stats = estimate(mapping, mapping.params, trials=5000, seed=3)
    assert stats.success_prob == 0.0
    assert stats.mean_selection_time == 0.0


def test_distinct_continuous_timers_succeed_when_first_fires():
    params = derive_params(2, 1e-12, 0.5)
    mapping = ContinuousMapping(rule=LinearDecay(slope=1.0), t_max=0.5)
    stats = estimate(mapping, params, trials=50_000, seed=11)
    # success iff the best timer 1 - max(u) fires before 0.5
    assert stats.success_prob == pytest.approx(0.75, abs=4 * stats.success_stderr)


# ============== Estimation ==============

def test_estimate_is_deterministic():
    mapping = optimize_finite(5, 10).mapping
    first = estimate(mapping, mapping.params, trials=40_000, seed=42)
    second = estimate(mapping, mapping.params, trials=40_000, seed=42)
    assert first == second


def test_estimate_independent_of_workers():
    mapping = optimize_finite(5, 10).mapping
    trials = 3 * BLOCK_TRIALS + 17
    serial = estimate(mapping, mapping.params, trials=trials, seed=9, workers=1)
    parallel = estimate(mapping, mapping.params, trials=trials, seed=9, workers=4)
    assert serial == parallel


def test_different_seeds_differ():
    mapping = optimize_finite(5, 10).mapping
    a = estimate(mapping, mapping.params, trials=10_000, seed=1)
    b = estimate(mapping, mapping.params, trials=10_000, seed=2)
    assert a.success_prob != b.success_prob


def test_scheme1_matches_closed_form():
    solution = optimize_finite(5, 10)
    stats = estimate(solution.mapping, solution.mapping.params, trials=200_000, seed=5)
    within(stats, solution.mapping, 5, 1.0)


@pytest.mark.slow
def test_scheme1_matches_closed_form_million_trials():
    solution = optimize_finite(5, 10, 13e-6)
    stats = estimate(solution.mapping, solution.mapping.params, trials=1_000_000, seed=2024, workers=4)
    within(stats, solution.mapping, 5, 13e-6, sigmas=3.0)


@pytest.mark.slow
def test_scheme2_mean_time_matches_closed_form():
    solution = solve_constrained(5, 100, 1.0, 0.7)
    stats = estimate(solution.mapping, solution.mapping.params, trials=1_000_000, seed=77, workers=4)
    within(stats, solution.mapping, 5, 1.0, sigmas=3.0)


def test_random_mappings_match_closed_form(rng):
    for i in range(20):
        k = int(rng.choice([2, 5, 20]))
        n = int(rng.choice([0, 5, 20]))
        alphas = rng.dirichlet(np.ones(n + 2))[: n + 1]
        mapping = make_mapping(tuple(alphas), k=k)
        stats = estimate(mapping, mapping.params, trials=50_000, seed=100 + i)
        within(stats, mapping, k, 1.0)


def test_t_max_convention_charges_silence_at_t_max():
    params = SelectionParams(k=1, delta=1.0, t_max=0.5, n_slots=0)
    mapping = DiscreteMapping(params, (0.5,))
    stats = estimate(mapping, params, trials=40_000, seed=8, convention=TimeConvention.CAP_AT_T_MAX)
    exact = expected_time_capped_at_tmax(mapping.alphas, 1, 1.0, 0.5)
    assert exact == pytest.approx(0.25)
    assert abs(stats.mean_selection_time - exact) <= 4 * stats.time_stderr
    assert stats.time_convention is TimeConvention.CAP_AT_T_MAX


def test_trace_lists_every_trial(tmp_path):
    mapping = optimize_finite(3, 4).mapping
    path = tmp_path / "trace.csv"
    stats = estimate(mapping, mapping.params, trials=1000, seed=4, trace=path)
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 1000
    assert set(rows[0]) == {"trial", "success", "stop_time", "t1", "t2"}
    assert sum(int(r["success"]) for r in rows) / 1000 == pytest.approx(stats.success_prob)


@pytest.mark.parametrize("trials, seed", [(0, 1), (10, -1), (10, 2**64), (2.5, 1)])
def test_rejects_bad_trials_or_seed(trials, seed):
    mapping = make_mapping((0.5,), k=2)
    with pytest.raises(ValidationError):
        estimate(mapping, mapping.params, trials=trials, seed=seed)


def test_rejects_mapping_for_other_params():
    mapping = make_mapping((0.2, 0.3), k=2)
    with pytest.raises(ValidationError):
        estimate(mapping, SelectionParams.from_slots(3, 1), trials=10, seed=0)


def test_stats_to_dict():
    mapping = make_mapping((0.5,), k=2)
    data = estimate(mapping, mapping.params, trials=100, seed=0).to_dict()
    assert data["trials"] == 100
    assert data["time_convention"] == "nslots"


# ============== Discretization ==============

def test_discrete_mapping_is_unchanged():
    mapping = optimize_finite(4, 6).mapping
    assert discretize_mapping(mapping, mapping.params) is mapping


def test_discretized_linear_rule_has_slot_masses():
    params = SelectionParams(k=3, delta=1.0, t_max=4.5, n_slots=4)
    mapping = ContinuousMapping(rule=LinearDecay(slope=10.0), t_max=4.5)
    discrete = discretize_mapping(mapping, params)
    np.testing.assert_allclose(discrete.alphas, [0.1, 0.1, 0.1, 0.1, 0.05], atol=1e-12)


def _continuous_mappings(rng, t_max):
    mappings = []
    for _ in range(5):
        mappings.append(ContinuousMapping(rule=LinearDecay(slope=float(rng.uniform(2.0, 40.0))), t_max=t_max))
    for dist in (MetricDistribution.exponential(), MetricDistribution.rayleigh()):
        for _ in range(2):
            c = float(10 ** rng.uniform(-1.0, 1.0))
            mappings.append(ContinuousMapping(rule=InverseMetric(c=c, distribution=dist), t_max=t_max))
    mappings.append(ContinuousMapping(
        rule=InverseMetric(c=0.5, distribution=MetricDistribution.uniform()), t_max=t_max))
    return mappings


def test_discretization_never_hurts(rng):
    params = SelectionParams(k=5, delta=1.0, t_max=10.5, n_slots=10)
    for i, mapping in enumerate(_continuous_mappings(rng, params.t_max)):
        original = estimate(mapping, params, trials=20_000, seed=500 + i)
        floored = estimate(discretize_mapping(mapping, params), params, trials=20_000, seed=500 + i)
        noise = 3 * math.hypot(original.success_stderr, floored.success_stderr)
        assert floored.success_prob >= original.success_prob - noise
        assert floored.mean_selection_time <= original.mean_selection_time + params.delta
