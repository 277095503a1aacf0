"""Inverse-metric baseline and its one-dimensional search."""

import math

import pytest

from app.selection.baselines import (
    BaselineConfig,
    Objective,
    inverse_mapping,
    optimize_c,
    search_bounds,
)
from app.selection.errors import ConstraintUnmeetable, ValidationError
from app.selection.experiments import baseline_report
from app.selection.model import MetricDistribution, SelectionParams, evaluate_timer
from app.selection.numerics import golden_section_minimize
from app.selection.scheme1 import optimize_finite

QUICK = dict(search_budget=24, trials_per_eval=4000, final_trials=20_000)


def test_inverse_mapping_examples():
    assert evaluate_timer(inverse_mapping(1.0, MetricDistribution.uniform(), math.inf), 0.5) == pytest.approx(2.0)
    exp_mapping = inverse_mapping(1.0, MetricDistribution.exponential(1.0), 10.0)
    assert evaluate_timer(exp_mapping, 1 - math.exp(-1)) == pytest.approx(1.0)


def test_inverse_mapping_rejects_non_positive_c():
    with pytest.raises(ValidationError):
        inverse_mapping(0.0, MetricDistribution.uniform(), 1.0)


def test_search_bounds():
    lo, hi = search_bounds(SelectionParams.from_slots(5, 10, 2.0))
    assert lo == pytest.approx(math.log10(2e-3))
    assert hi == pytest.approx(math.log10(20e3))


def test_golden_section_finds_parabola_minimum():
    x, f, history = golden_section_minimize(lambda x: (x - 0.3) ** 2, -2.0, 2.0, 40)
    assert x == pytest.approx(0.3, abs=1e-6)
    assert len(history) == 40
    assert f == min(value for _, value in history)


@pytest.mark.parametrize("kwargs", [
    dict(search_budget=2),
    dict(trials_per_eval=10),
    dict(objective=Objective.MINIMIZE_TIME_AT_CONSTRAINT),
    dict(objective=Objective.MINIMIZE_TIME_AT_CONSTRAINT, eta=1.5),
])
def test_config_validation(kwargs):
    with pytest.raises(ValidationError):
        BaselineConfig(distribution=MetricDistribution.uniform(), **kwargs)


def test_lone_node_succeeds():
    config = BaselineConfig(distribution=MetricDistribution.exponential(), seed=1, **QUICK)
    result = optimize_c(config, SelectionParams.from_slots(1, 10))
    assert result.value >= 0.99


def test_search_is_deterministic():
    config = BaselineConfig(distribution=MetricDistribution.exponential(), seed=12, **QUICK)
    params = SelectionParams.from_slots(5, 10)
    assert optimize_c(config, params).c_star == optimize_c(config, params).c_star


def test_never_beats_optimal_scheme():
    params = SelectionParams.from_slots(5, 10)
    p_star = optimize_finite(5, 10).p_star
    for dist in (MetricDistribution.exponential(), MetricDistribution.rayleigh()):
        config = BaselineConfig(distribution=dist, seed=3, **QUICK)
        result = optimize_c(config, params)
        assert result.value <= p_star + 4 * result.stderr
        assert result.search_path in ("golden_section", "grid_scan")


def test_time_objective_meets_constraint():
    config = BaselineConfig(
        distribution=MetricDistribution.exponential(),
        objective=Objective.MINIMIZE_TIME_AT_CONSTRAINT,
        eta=0.5,
        seed=5,
        **QUICK,
    )
    result = optimize_c(config, SelectionParams.from_slots(5, 30))
    assert result.stats.success_prob >= 0.5 - 4 * result.stats.success_stderr
    assert 0.0 < result.value <= 30.0


def test_time_report_in_seconds_and_slots():
    config = BaselineConfig(
        distribution=MetricDistribution.exponential(),
        objective=Objective.MINIMIZE_TIME_AT_CONSTRAINT,
        eta=0.5,
        seed=5,
        **QUICK,
    )
    row = baseline_report(config, SelectionParams.from_slots(5, 30, 2.0)).as_dicts()[0]
    assert row["value_over_delta"] == pytest.approx(row["value"] / 2.0)
    assert row["optimal_over_delta"] == pytest.approx(row["optimal_value"] / 2.0)


def test_success_report_has_no_per_delta_values():
    config = BaselineConfig(distribution=MetricDistribution.exponential(), seed=3, **QUICK)
    row = baseline_report(config, SelectionParams.from_slots(5, 10, 2.0)).as_dicts()[0]
    assert row["value_over_delta"] is None
    assert row["optimal_over_delta"] is None


def test_unreachable_constraint():
    config = BaselineConfig(
        distribution=MetricDistribution.exponential(),
        objective=Objective.MINIMIZE_TIME_AT_CONSTRAINT,
        eta=0.99,
        seed=5,
        **QUICK,
    )
    with pytest.raises(ConstraintUnmeetable) as excinfo:
        optimize_c(config, SelectionParams.from_slots(5, 2))
    assert excinfo.value.eta == 0.99


def test_result_to_dict():
    config = BaselineConfig(distribution=MetricDistribution.uniform(), seed=0, **QUICK)
    data = optimize_c(config, SelectionParams.from_slots(3, 4)).to_dict()
    assert data["objective"] == "success"
    assert data["sim_trials"] == QUICK["final_trials"]


@pytest.mark.slow
@pytest.mark.parametrize("dist, n_slots, ratio", [
    ("exp", 10, 2.3),
    ("exp", 30, 2.5),
    ("rayleigh", 10, 2.9),
    ("rayleigh", 30, 3.2),
])
def test_failure_ratio_against_optimal(dist, n_slots, ratio):
    distribution = MetricDistribution.exponential() if dist == "exp" else MetricDistribution.rayleigh()
    config = BaselineConfig(distribution=distribution, seed=2024, workers=4)
    row = baseline_report(config, SelectionParams.from_slots(5, n_slots)).as_dicts()[0]
    assert row["ratio"] == pytest.approx(ratio, rel=0.15)


@pytest.mark.slow
@pytest.mark.parametrize("dist, ratio", [("exp", 5.1), ("rayleigh", 9.6)])
def test_time_ratio_against_optimal(dist, ratio):
    distribution = MetricDistribution.exponential() if dist == "exp" else MetricDistribution.rayleigh()
    config = BaselineConfig(
        distribution=distribution,
        objective=Objective.MINIMIZE_TIME_AT_CONSTRAINT,
        eta=0.7,
        seed=2024,
        workers=4,
    )
    row = baseline_report(config, SelectionParams.from_slots(5, 100)).as_dicts()[0]
    assert row["ratio"] == pytest.approx(ratio, rel=0.15)
