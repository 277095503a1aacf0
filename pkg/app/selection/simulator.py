"""Seeded Monte Carlo engine for timer-based contention.

Every trial draws k i.i.d. uniform metrics, maps them to timers and checks
the vulnerability-window rule: the best node wins iff its timer expires by
T_max and the second-best timer either never fires or fires at least delta
later.

Trials are grouped into fixed-size blocks. Block b draws from a Philox
stream keyed by (seed, b), so aggregates do not depend on how many workers
run the blocks.
"""

import csv
import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, TextIO, Union

import numpy as np

from app.selection.errors import NumericalFailure, ValidationError
from app.selection.model import (
    ContinuousMapping,
    DiscreteMapping,
    Mapping,
    NoTransmit,
    SelectionParams,
    TimerValue,
    check_mapping_params,
)

logger = logging.getLogger(__name__)

BLOCK_TRIALS = 1 << 15


class TimeConvention(str, enum.Enum):
    """Stop time charged when nobody transmits (and upper cap on T_(1))."""

    CAP_AT_N_SLOTS = "nslots"
    CAP_AT_T_MAX = "tmax"

    def cap(self, params: SelectionParams) -> float:
        if self is TimeConvention.CAP_AT_N_SLOTS:
            return params.n_slots * params.delta
        return params.t_max


@dataclass(frozen=True)
class SelectionOutcome:
    success: bool
    stop_time: float
    winner: Optional[int]
    t1: TimerValue
    t2: TimerValue


@dataclass(frozen=True)
class SimStats:
    trials: int
    success_prob: float
    success_stderr: float
    mean_selection_time: float
    time_stderr: float
    seed: int
    time_convention: TimeConvention

    def to_dict(self):
        return {
            "trials": self.trials,
            "success_prob": self.success_prob,
            "success_stderr": self.success_stderr,
            "mean_selection_time": self.mean_selection_time,
            "time_stderr": self.time_stderr,
            "seed": self.seed,
            "time_convention": self.time_convention.value,
        }


# ============== Contention kernel ==============

@dataclass
class _BlockResult:
    success: np.ndarray
    stop_time: np.ndarray
    winner: np.ndarray
    t1: np.ndarray
    t2: np.ndarray


def _best_two(u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Index of the best metric and the two largest metrics per row."""
    rows = np.arange(u.shape[0])
    best = np.argmax(u, axis=1)
    u_best = u[rows, best]
    if u.shape[1] == 1:
        return best, u_best, np.full(u.shape[0], np.nan)
    masked = u.copy()
    masked[rows, best] = -1.0
    u_second = masked.max(axis=1)
    return best, u_best, u_second


def _contend(mapping: Mapping, params: SelectionParams, u: np.ndarray, convention: TimeConvention) -> _BlockResult:
    best, u_best, u_second = _best_two(u)
    has_second = ~np.isnan(u_second)
    cap = convention.cap(params)

    if isinstance(mapping, DiscreteMapping):
        n = params.n_slots
        s1 = mapping.slots(u_best)
        s2 = np.where(has_second, mapping.slots(np.where(has_second, u_second, 0.0)), n + 1)
        # integer slots keep the delta comparison exact
        fires = s1 <= n
        clear = (s2 > n) | (s2 - s1 >= 1)
        t1 = np.where(fires, s1 * params.delta, np.inf)
        t2 = np.where(s2 <= n, s2 * params.delta, np.inf)
    else:
        t1 = mapping.timers(u_best)
        t2 = np.where(has_second, mapping.timers(np.where(has_second, u_second, 0.0)), np.inf)
        fires = t1 <= params.t_max
        with np.errstate(invalid="ignore"):
            # equal timers collide (gap 0 < delta)
            clear = np.isinf(t2) | (t2 > params.t_max) | (t2 - t1 >= params.delta)

    success = fires & clear
    stop_time = np.where(fires, np.minimum(t1, cap), cap)
    winner = np.where(success, best, -1)
    return _BlockResult(success=success, stop_time=stop_time, winner=winner, t1=t1, t2=t2)


def _to_timer_value(value: float) -> TimerValue:
    return NoTransmit if math.isinf(value) else float(value)


def run_trial(
    mapping: Mapping,
    params: SelectionParams,
    rng: np.random.Generator,
    convention: TimeConvention = TimeConvention.CAP_AT_N_SLOTS,
) -> SelectionOutcome:
    """One contention round among params.k nodes."""
    check_mapping_params(mapping, params)
    u = rng.random((1, params.k))
    result = _contend(mapping, params, u, convention)
    winner = int(result.winner[0])
    return SelectionOutcome(
        success=bool(result.success[0]),
        stop_time=float(result.stop_time[0]),
        winner=winner if winner >= 0 else None,
        t1=_to_timer_value(float(result.t1[0])),
        t2=_to_timer_value(float(result.t2[0])),
    )


# ============== Estimation ==============

def block_generator(seed: int, block: int) -> np.random.Generator:
    """Counter-based stream for one block of trials."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(block,))
    return np.random.Generator(np.random.Philox(sequence))


@dataclass
class _Moments:
    count: int
    mean_success: float
    m2_success: float
    mean_time: float
    m2_time: float

    @classmethod
    def of(cls, success: np.ndarray, stop_time: np.ndarray) -> "_Moments":
        s = success.astype(float)
        return cls(
            count=s.size,
            mean_success=float(s.mean()),
            m2_success=float(((s - s.mean()) ** 2).sum()),
            mean_time=float(stop_time.mean()),
            m2_time=float(((stop_time - stop_time.mean()) ** 2).sum()),
        )

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.count + other.count
        d_s = other.mean_success - self.mean_success
        d_t = other.mean_time - self.mean_time
        return _Moments(
            count=n,
            mean_success=self.mean_success + d_s * other.count / n,
            m2_success=self.m2_success + other.m2_success + d_s * d_s * self.count * other.count / n,
            mean_time=self.mean_time + d_t * other.count / n,
            m2_time=self.m2_time + other.m2_time + d_t * d_t * self.count * other.count / n,
        )


def _block_sizes(trials: int) -> list[int]:
    full, rest = divmod(trials, BLOCK_TRIALS)
    return [BLOCK_TRIALS] * full + ([rest] if rest else [])


def estimate(
    mapping: Mapping,
    params: SelectionParams,
    trials: int,
    seed: int,
    convention: TimeConvention = TimeConvention.CAP_AT_N_SLOTS,
    workers: int = 1,
    trace: Optional[Union[str, Path, TextIO]] = None,
) -> SimStats:
    """Aggregate ``trials`` independent contention rounds.

    Results are bit-identical for a given (mapping, params, trials, seed,
    convention) regardless of ``workers``.
    """
    if isinstance(trials, bool) or not isinstance(trials, (int, np.integer)) or trials < 1:
        raise ValidationError(f"trials must be an integer >= 1, got {trials!r}", field="trials")
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < 2**64:
        raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed!r}", field="seed")
    check_mapping_params(mapping, params)
    convention = TimeConvention(convention)
    sizes = _block_sizes(int(trials))
    keep_trace = trace is not None

    def run_block(block: int):
        rng = block_generator(int(seed), block)
        result = _contend(mapping, params, rng.random((sizes[block], params.k)), convention)
        _check_best_first(result)
        return _Moments.of(result.success, result.stop_time), (result if keep_trace else None)

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(run_block, range(len(sizes))))
    else:
        outputs = [run_block(b) for b in range(len(sizes))]

    moments = outputs[0][0]
    for block_moments, _ in outputs[1:]:
        moments = moments.merge(block_moments)

    if keep_trace:
        write_trace(trace, [r for _, r in outputs])

    n = moments.count
    denom = math.sqrt(n)
    std_s = math.sqrt(moments.m2_success / (n - 1)) if n > 1 else 0.0
    std_t = math.sqrt(moments.m2_time / (n - 1)) if n > 1 else 0.0
    stats = SimStats(
        trials=n,
        success_prob=min(1.0, max(0.0, moments.mean_success)),
        success_stderr=std_s / denom,
        mean_selection_time=max(0.0, moments.mean_time),
        time_stderr=std_t / denom,
        seed=int(seed),
        time_convention=convention,
    )
    logger.debug("estimate: %s", stats)
    return stats


def _check_best_first(result: _BlockResult) -> None:
    """A selected node must be strictly first to fire."""
    won = result.success
    if np.any(result.t1[won] >= result.t2[won]):
        raise NumericalFailure("a selected node did not fire strictly first; is the mapping monotone?")


def write_trace(target, results) -> None:
    """Per-trial CSV ``trial,success,stop_time,t1,t2`` with NoTransmit as inf."""
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            write_trace(fh, results)
        return
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(["trial", "success", "stop_time", "t1", "t2"])
    trial = 0
    for result in results:
        for ok, stop, t1, t2 in zip(result.success, result.stop_time, result.t1, result.t2):
            writer.writerow([trial, int(ok), f"{stop:.17g}", f"{t1:.17g}", f"{t2:.17g}"])
            trial += 1


# ============== Discretization ==============

def discretize_mapping(mapping: Union[ContinuousMapping, DiscreteMapping], params: SelectionParams) -> DiscreteMapping:
    """Floor every timer to the slot grid {0, delta, ..., N delta}.

    A timer in [l delta, (l+1) delta) becomes l delta; timers in
    [N delta, T_max] become N delta; timers beyond T_max stay silent.
    """
    if isinstance(mapping, DiscreteMapping):
        check_mapping_params(mapping, params)
        return mapping
    rule = mapping.rule
    t_max = min(params.t_max, mapping.t_max)
    n = params.n_slots
    cumulative = []
    for j in range(n + 1):
        if j < n:
            upper = min((j + 1) * params.delta, t_max)
            mass = rule.mass_below(upper)
        else:
            # everything up to and including t_max
            mass = rule.mass_below(np.nextafter(t_max, np.inf))
        cumulative.append(mass)
    cumulative = np.maximum.accumulate(np.clip(np.asarray(cumulative, dtype=float), 0.0, 1.0))
    alphas = np.diff(np.concatenate(([0.0], cumulative)))
    return DiscreteMapping(params, tuple(np.clip(alphas, 0.0, None).tolist()))
