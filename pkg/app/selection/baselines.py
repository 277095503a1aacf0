"""Inverse-metric baseline f(mu) = c / mu with a one-dimensional search for c.

The Monte Carlo objective reuses the same seed for every candidate c, so the
search sees a deterministic function of c.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.selection.errors import ConstraintUnmeetable, ValidationError
from app.selection.model import (
    ContinuousMapping,
    InverseMetric,
    MetricDistribution,
    SelectionParams,
)
from app.selection.numerics import check_positive, golden_section_minimize
from app.selection.simulator import SimStats, TimeConvention, estimate

logger = logging.getLogger(__name__)

GRID_FALLBACK_POINTS = 200


class Objective(str, enum.Enum):
    MAXIMIZE_SUCCESS = "success"
    MINIMIZE_TIME_AT_CONSTRAINT = "time"


@dataclass(frozen=True)
class BaselineConfig:
    distribution: MetricDistribution
    objective: Objective = Objective.MAXIMIZE_SUCCESS
    eta: Optional[float] = None
    search_budget: int = 60
    trials_per_eval: int = 100_000
    final_trials: Optional[int] = 1_000_000
    seed: int = 0
    convention: TimeConvention = TimeConvention.CAP_AT_N_SLOTS
    workers: int = 1

    def __post_init__(self):
        if self.search_budget < 3:
            raise ValidationError("search_budget must be >= 3", field="search_budget")
        if self.trials_per_eval < 1000:
            raise ValidationError("trials_per_eval must be >= 1000", field="trials_per_eval")
        if self.objective is Objective.MINIMIZE_TIME_AT_CONSTRAINT:
            if self.eta is None or not 0.0 <= self.eta <= 1.0:
                raise ValidationError("the time objective needs eta in [0, 1]", field="eta")


@dataclass(frozen=True)
class BaselineResult:
    c_star: float
    objective: Objective
    value: float
    stderr: float
    stats: SimStats
    evaluations: int
    search_path: str

    def to_dict(self):
        return {
            "c_star": self.c_star,
            "objective": self.objective.value,
            "value": self.value,
            "stderr": self.stderr,
            "evaluations": self.evaluations,
            "search_path": self.search_path,
            **{f"sim_{key}": value for key, value in self.stats.to_dict().items()},
        }


def inverse_mapping(c: float, distribution: MetricDistribution, t_max: float) -> ContinuousMapping:
    """Timer c / quantile(u), silent beyond t_max."""
    return ContinuousMapping(rule=InverseMetric(c=check_positive(c, "c"), distribution=distribution), t_max=t_max)


def search_bounds(params: SelectionParams) -> tuple[float, float]:
    """log10 c range: [delta * 1e-3, T_max * 1e3]."""
    upper = max(params.t_max, params.delta)
    return math.log10(params.delta * 1e-3), math.log10(upper * 1e3)


def _evaluate(config: BaselineConfig, params: SelectionParams, c: float, trials: int) -> SimStats:
    return estimate(
        inverse_mapping(c, config.distribution, params.t_max),
        params,
        trials=trials,
        seed=config.seed,
        convention=config.convention,
        workers=config.workers,
    )


def _search(loss, lo: float, hi: float, budget: int):
    """Golden-section over [lo, hi]; grid scan when an endpoint beats the interior."""
    best_x, best_f, history = golden_section_minimize(loss, lo, hi, budget)
    f_lo, f_hi = loss(lo), loss(hi)
    history += [(lo, f_lo), (hi, f_hi)]
    if min(f_lo, f_hi) < best_f:
        logger.warning("baseline objective not unimodal on the bracket; scanning a log grid")
        grid = np.linspace(lo, hi, GRID_FALLBACK_POINTS)
        scanned = [(float(x), loss(float(x))) for x in grid]
        best_x, best_f = min(scanned, key=lambda item: item[1])
        return best_x, best_f, len(history) + len(scanned), "grid_scan"
    return best_x, best_f, len(history), "golden_section"


def optimize_c(config: BaselineConfig, params: SelectionParams) -> BaselineResult:
    """Tune c for the configured objective and report it with its standard error."""
    lo, hi = search_bounds(params)
    cache: dict[float, SimStats] = {}

    def stats_at(log_c: float) -> SimStats:
        if log_c not in cache:
            cache[log_c] = _evaluate(config, params, 10.0 ** log_c, config.trials_per_eval)
            logger.debug("c=%.6g p=%.6g t=%.6g", 10.0 ** log_c, cache[log_c].success_prob,
                         cache[log_c].mean_selection_time)
        return cache[log_c]

    def failure(log_c: float) -> float:
        return 1.0 - stats_at(log_c).success_prob

    log_c, _, evaluations, path = _search(failure, lo, hi, config.search_budget)

    if config.objective is Objective.MINIMIZE_TIME_AT_CONSTRAINT:
        best_p = stats_at(log_c).success_prob
        if best_p < config.eta:
            raise ConstraintUnmeetable(config.eta, best_p)
        cap = config.convention.cap(params)

        def penalized_time(x: float) -> float:
            s = stats_at(x)
            if s.success_prob >= config.eta:
                return s.mean_selection_time
            # any infeasible c ranks behind every feasible one
            return cap + params.delta * (1.0 + config.eta - s.success_prob)

        # time grows with c, so the optimum sits left of the success maximizer
        log_c, _, more, path = _search(penalized_time, lo, log_c, config.search_budget)
        evaluations += more

    c_star = 10.0 ** log_c
    final_trials = config.final_trials or config.trials_per_eval
    stats = _evaluate(config, params, c_star, final_trials)
    if config.objective is Objective.MAXIMIZE_SUCCESS:
        value, stderr = stats.success_prob, stats.success_stderr
    else:
        value, stderr = stats.mean_selection_time, stats.time_stderr
    logger.info(
        "baseline %s %s k=%d N=%d: c*=%.6g value=%.6g (+/- %.2g) via %s",
        config.distribution.label, config.objective.value, params.k, params.n_slots,
        c_star, value, stderr, path,
    )
    return BaselineResult(
        c_star=c_star,
        objective=config.objective,
        value=value,
        stderr=stderr,
        stats=stats,
        evaluations=evaluations,
        search_path=path,
    )
