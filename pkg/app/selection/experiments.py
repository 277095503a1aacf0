"""Experiment definitions shared by the command line, the tools layer and the API.

Each builder returns a :class:`Report`: a CSV header, rows of plain values
and a status flag. Rendering and persistence happen in the callers.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

from app.selection.analysis import (
    expected_selection_time,
    expected_time_capped_at_tmax,
    success_probability,
)
from app.selection.baselines import BaselineConfig, Objective, inverse_mapping, optimize_c
from app.selection.errors import Infeasible, ValidationError
from app.selection.model import (
    ContinuousMapping,
    DiscreteMapping,
    LinearDecay,
    MetricDistribution,
    SelectionParams,
    derive_params,
    raw_thresholds,
)
from app.selection.published import (
    feedback_overhead_us,
    published_timer_time_us,
    slot_time_us,
    splitting_fixture,
)
from app.selection.scheme1 import optimize as optimize_scheme1
from app.selection.scheme2 import solve_constrained
from app.selection.simulator import SimStats, TimeConvention, discretize_mapping
from app.selection.tables import read_table, table_k

logger = logging.getLogger(__name__)

TABLE1_T_MAX_US = (288.0, 1296.0)
TABLE1_ETAS = (0.75, 0.85, 0.90, 0.98)


@dataclass
class Report:
    header: list
    rows: list = field(default_factory=list)
    status: str = "ok"

    def as_dicts(self) -> list[dict]:
        return [dict(zip(self.header, row)) for row in self.rows]


# ============== Input parsing ==============

def parse_k_list(text: str) -> list[Optional[int]]:
    """``5``, ``2,5,inf``; ``inf`` selects the large-k limit (None)."""
    ks = []
    for item in str(text).split(","):
        item = item.strip().lower()
        if item in ("inf", "infinity"):
            ks.append(None)
            continue
        try:
            k = int(item)
        except ValueError:
            raise ValidationError(f"--k expects integers or inf, got {item!r}", field="k") from None
        if k < 1:
            raise ValidationError(f"--k must be >= 1, got {k}", field="k")
        ks.append(k)
    return ks


def parse_int_range(text: str, name: str = "n") -> list[int]:
    """``10``, ``0:50`` (inclusive) or ``1,5,10``."""
    values = []
    try:
        for item in str(text).split(","):
            lo, sep, hi = item.partition(":")
            if sep:
                values.extend(range(int(lo), int(hi) + 1))
            else:
                values.append(int(item))
    except ValueError:
        raise ValidationError(f"--{name} expects integers or a lo:hi range, got {text!r}", field=name) from None
    if not values or min(values) < 0:
        raise ValidationError(f"--{name} values must be >= 0", field=name)
    return values


def parse_float_list(text: str, name: str = "eta") -> list[float]:
    """``0.7``, ``0.6,0.87`` or ``lo:hi:step`` (inclusive)."""
    values = []
    try:
        for item in str(text).split(","):
            parts = item.split(":")
            if len(parts) == 3:
                lo, hi, step = (float(p) for p in parts)
                if step <= 0:
                    raise ValueError("step must be positive")
                count = int(math.floor((hi - lo) / step + 1e-9)) + 1
                values.extend(round(lo + i * step, 12) for i in range(count))
            elif len(parts) == 1:
                values.append(float(item))
            else:
                raise ValueError(item)
    except ValueError:
        raise ValidationError(f"--{name} expects floats or lo:hi:step, got {text!r}", field=name) from None
    return values


def parse_time_convention(text) -> TimeConvention:
    try:
        return TimeConvention(text)
    except ValueError:
        raise ValidationError(f"--time-convention must be nslots or tmax, got {text!r}",
                              field="time-convention") from None


def parse_objective(text) -> Objective:
    try:
        return Objective(text)
    except ValueError:
        raise ValidationError(f"--objective must be success or time, got {text!r}", field="objective") from None


@dataclass(frozen=True)
class SlotSpec:
    """Slot counts and vulnerability window resolved from --n / --delta / --tmax."""

    n_values: tuple
    delta: float
    t_max: Optional[float] = None

    def params(self, k: int, n_slots: int) -> SelectionParams:
        if self.t_max is not None:
            return derive_params(k, self.delta, self.t_max)
        return SelectionParams.from_slots(k, n_slots, self.delta)


def resolve_slots(n: Optional[str], delta: Optional[float], t_max: Optional[float]) -> SlotSpec:
    """Exactly one of N or T_max; N alone means delta = 1 (normalized units)."""
    if (n is None) == (t_max is None):
        raise ValidationError("give exactly one of --n or --tmax", field="n")
    if t_max is not None:
        if delta is None:
            raise ValidationError("--tmax requires --delta", field="delta")
        n_slots = derive_params(1, delta, t_max).n_slots
        return SlotSpec(n_values=(n_slots,), delta=float(delta), t_max=float(t_max))
    delta = 1.0 if delta is None else float(delta)
    if not delta > 0:
        raise ValidationError("--delta must be positive", field="delta")
    return SlotSpec(n_values=tuple(parse_int_range(n)), delta=delta)


# ============== Scheme 1 ==============

def scheme1_report(ks, slots: SlotSpec, distribution: Optional[MetricDistribution] = None) -> Report:
    header = ["k", "N", "j", "alpha_or_beta", "p_star"]
    if distribution is not None:
        header.append("raw_threshold")
    report = Report(header=header)
    for k in ks:
        for n_slots in slots.n_values:
            solution = optimize_scheme1(k, n_slots, slots.delta)
            thresholds = None
            if distribution is not None and isinstance(solution.mapping, DiscreteMapping):
                thresholds = raw_thresholds(solution.mapping, distribution)
            for j, value in enumerate(solution.lengths):
                row = ["inf" if k is None else k, n_slots, j, value, solution.p_star]
                if distribution is not None:
                    row.append(None if thresholds is None else float(thresholds[j]))
                report.rows.append(row)
    return report


# ============== Scheme 2 ==============

def scheme2_report(ks, slots: SlotSpec, etas) -> Report:
    report = Report(header=[
        "k", "N", "eta", "lambda_star", "p", "gamma_over_delta", "no_transmit_mass",
        "gamma_seconds", "status",
    ])
    feasible = 0
    for k in ks:
        for n_slots in slots.n_values:
            for eta in etas:
                label = "inf" if k is None else k
                try:
                    solution = solve_constrained(k, n_slots, slots.delta, eta)
                except Infeasible:
                    report.rows.append([label, n_slots, eta, None, None, None, None, None, "infeasible"])
                    continue
                feasible += 1
                report.rows.append([
                    label, n_slots, eta, solution.lambda_star, solution.p_success,
                    solution.expected_time / slots.delta, solution.no_transmit_mass,
                    solution.expected_time, "ok",
                ])
    if feasible == 0:
        report.status = "infeasible"
    return report


# ============== Published comparison table ==============

def table1_report(etas=TABLE1_ETAS, t_max_values_us=TABLE1_T_MAX_US, feedback: bool = False) -> Report:
    """Large-k Scheme 2 selection times next to the published splitting values."""
    header = [
        "t_max_us", "N", "eta", "status", "gamma_us", "gamma_over_delta", "lambda_star",
        "published_gamma_us", "splitting_p", "splitting_time_us",
    ]
    if feedback:
        header.append("gamma_with_feedback_us")
    report = Report(header=header)
    delta_us = slot_time_us()
    for t_max_us in t_max_values_us:
        n_slots = derive_params(1, delta_us * 1e-6, t_max_us * 1e-6).n_slots
        fixture = splitting_fixture(t_max_us)
        for eta in etas:
            published = published_timer_time_us(t_max_us, eta)
            base = [t_max_us, n_slots, eta]
            tail = [published, fixture.p_success if fixture else None,
                    fixture.selection_time_us if fixture else None]
            try:
                solution = solve_constrained(None, n_slots, delta_us * 1e-6, eta)
            except Infeasible:
                row = base + ["infeasible", None, None, None] + tail
                if feedback:
                    row.append(None)
                report.rows.append(row)
                continue
            gamma_us = solution.expected_time * 1e6
            row = base + ["ok", gamma_us, solution.expected_time / solution.delta, solution.lambda_star] + tail
            if feedback:
                row.append(gamma_us + feedback_overhead_us())
            report.rows.append(row)
    return report


# ============== Mappings for simulation ==============

MAPPING_KINDS = ("scheme1", "scheme2", "inverse", "linear")


def build_mapping(
    kind: Optional[str],
    params: SelectionParams,
    *,
    mapping_path=None,
    eta: Optional[float] = None,
    c: Optional[float] = None,
    distribution: Optional[MetricDistribution] = None,
    discretize: bool = False,
):
    """Return ``(label, mapping)`` for a scheme, a continuous rule or a table file.

    ``c`` is the constant of the inverse-metric rule or the slope of the
    linear rule. ``discretize`` floors a continuous mapping onto the slot grid.
    """
    if mapping_path is not None:
        table = read_table(mapping_path)
        declared = table_k(table)
        if declared is not None and declared != params.k:
            logger.warning("table was computed for k=%d, simulating k=%d", declared, params.k)
        label, mapping = f"file:{mapping_path}", table.bind(params)
    elif kind == "scheme1":
        label, mapping = kind, optimize_scheme1(params.k, params.n_slots, params.delta).mapping
    elif kind == "scheme2":
        if eta is None:
            raise ValidationError("the scheme2 mapping needs --eta", field="eta")
        label, mapping = kind, solve_constrained(params.k, params.n_slots, params.delta, eta).mapping
    elif kind == "inverse":
        if c is None:
            raise ValidationError("the inverse mapping needs --c", field="c")
        label = f"inverse:c={c:.17g}"
        mapping = inverse_mapping(c, distribution or MetricDistribution.uniform(), params.t_max)
    elif kind == "linear":
        if c is None:
            raise ValidationError("the linear mapping needs --c (the slope)", field="c")
        label, mapping = f"linear:slope={c:.17g}", ContinuousMapping(rule=LinearDecay(slope=c), t_max=params.t_max)
    else:
        raise ValidationError(f"unknown mapping {kind!r}; use one of {', '.join(MAPPING_KINDS)}", field="scheme")

    if discretize and isinstance(mapping, ContinuousMapping):
        mapping = discretize_mapping(mapping, params)
        label += "+discrete"
    return label, mapping


def single_params(ks, slots: SlotSpec) -> SelectionParams:
    """Simulation and baselines need one finite k and one N."""
    if len(ks) != 1 or ks[0] is None:
        raise ValidationError("give a single finite --k", field="k")
    if len(slots.n_values) != 1:
        raise ValidationError("give a single --n", field="n")
    return slots.params(ks[0], slots.n_values[0])


# ============== Simulation ==============

SIMULATION_HEADER = [
    "mapping", "k", "N", "delta", "t_max", "trials", "seed", "time_convention",
    "success_prob", "success_stderr", "mean_time", "mean_time_stderr", "mean_time_over_delta",
    "analytic_success", "analytic_time", "z_success", "z_time",
]


def simulation_report(label: str, mapping, params: SelectionParams, stats: SimStats) -> Report:
    analytic_p = analytic_t = z_p = z_t = None
    if isinstance(mapping, DiscreteMapping):
        analytic_p = success_probability(mapping.alphas, params.k)
        if stats.time_convention is TimeConvention.CAP_AT_N_SLOTS:
            analytic_t = expected_selection_time(mapping.alphas, params.k, params.delta)
        else:
            analytic_t = expected_time_capped_at_tmax(mapping.alphas, params.k, params.delta, params.t_max)
        z_p = _z_score(stats.success_prob, analytic_p, stats.success_stderr)
        z_t = _z_score(stats.mean_selection_time, analytic_t, stats.time_stderr)
    row = [
        label, params.k, params.n_slots, params.delta, params.t_max, stats.trials, stats.seed,
        stats.time_convention.value, stats.success_prob, stats.success_stderr,
        stats.mean_selection_time, stats.time_stderr, stats.mean_selection_time / params.delta,
        analytic_p, analytic_t, z_p, z_t,
    ]
    return Report(header=list(SIMULATION_HEADER), rows=[row])


def _z_score(estimate: float, exact: float, stderr: float) -> Optional[float]:
    if stderr == 0:
        return 0.0 if math.isclose(estimate, exact, rel_tol=0, abs_tol=1e-12) else None
    return (estimate - exact) / stderr


# ============== Inverse-metric baseline ==============

BASELINE_HEADER = [
    "distribution", "k", "N", "c_star", "objective", "value", "stderr", "seed",
    "optimal_value", "ratio", "search_path", "evaluations", "value_over_delta", "optimal_over_delta",
]


def baseline_report(config: BaselineConfig, params: SelectionParams) -> Report:
    """Optimized inverse-metric performance and its ratio to the optimal scheme.

    For the success objective the ratio compares failure probabilities; for
    the time objective it is the inverse-metric time over the optimal time.
    """
    result = optimize_c(config, params)
    if config.objective is Objective.MAXIMIZE_SUCCESS:
        optimal = optimize_scheme1(params.k, params.n_slots, params.delta).p_star
        ratio = (1.0 - result.value) / (1.0 - optimal) if optimal < 1.0 else None
    else:
        optimal = solve_constrained(params.k, params.n_slots, params.delta, config.eta).expected_time
        ratio = result.value / optimal if optimal > 0 else None
    # times also in units of delta; success probabilities have no such column
    per_delta = config.objective is Objective.MINIMIZE_TIME_AT_CONSTRAINT
    row = [
        config.distribution.label, params.k, params.n_slots, result.c_star, config.objective.value,
        result.value, result.stderr, config.seed, optimal, ratio, result.search_path, result.evaluations,
        result.value / params.delta if per_delta else None,
        optimal / params.delta if per_delta else None,
    ]
    return Report(header=list(BASELINE_HEADER), rows=[row])
