"""Closed-form success probability, expected selection time and auxiliary value.

All formulas accept arbitrary (not necessarily optimal) interval lengths.
The expected selection time caps realizations without any transmission at
N * delta.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.selection.errors import ValidationError
from app.selection.numerics import (
    check_alphas,
    check_betas,
    check_k,
    check_positive,
    compensated_cumsum,
    compensated_sum,
    pow_one_minus,
)


@dataclass(frozen=True)
class AnalysisResult:
    success_prob: float
    expected_time: float
    auxiliary_value: Optional[float] = None

    def to_dict(self):
        return {
            "success_prob": self.success_prob,
            "expected_time": self.expected_time,
            "auxiliary_value": self.auxiliary_value,
        }


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if math.isnan(lam) or lam < 0:
        raise ValidationError(f"lambda must be >= 0, got {lam!r}", field="lambda")
    return lam


def success_probability(alphas, k: int) -> float:
    """k * sum_l alpha_l (1 - S_l)^(k-1), with S_l = alpha_0 + ... + alpha_l."""
    arr = check_alphas(alphas)
    k = check_k(k)
    cumulative = compensated_cumsum(arr)
    terms = arr * pow_one_minus(cumulative, k - 1)
    return min(1.0, k * compensated_sum(terms))


def expected_selection_time(alphas, k: int, delta: float) -> float:
    """delta * sum_{l<N} (1 - S_l)^k."""
    arr = check_alphas(alphas)
    k = check_k(k)
    delta = check_positive(delta, "delta")
    cumulative = compensated_cumsum(arr)[:-1]
    return delta * compensated_sum(pow_one_minus(cumulative, k))


def auxiliary_value(alphas, k: int, delta: float, lam: float) -> float:
    """L = Gamma - lambda * P."""
    lam = _check_lambda(lam)
    return expected_selection_time(alphas, k, delta) - lam * success_probability(alphas, k)


def analyze(alphas, k: int, delta: float, lam: Optional[float] = None) -> AnalysisResult:
    p = success_probability(alphas, k)
    gamma = expected_selection_time(alphas, k, delta)
    aux = None if lam is None else gamma - _check_lambda(lam) * p
    return AnalysisResult(success_prob=p, expected_time=gamma, auxiliary_value=aux)


# ============== Large-k limit ==============

def asymptotic_success_probability(betas) -> float:
    """sum_l beta_l exp(-(beta_0 + ... + beta_l))."""
    arr = check_betas(betas)
    cumulative = compensated_cumsum(arr)
    return min(1.0, compensated_sum(arr * np.exp(-cumulative)))


def asymptotic_expected_time(betas, delta: float) -> float:
    """delta * sum_{l<N} exp(-(beta_0 + ... + beta_l))."""
    arr = check_betas(betas)
    delta = check_positive(delta, "delta")
    cumulative = compensated_cumsum(arr)[:-1]
    return delta * compensated_sum(np.exp(-cumulative))


def asymptotic_auxiliary_value(betas, delta: float, lam: float) -> float:
    lam = _check_lambda(lam)
    return asymptotic_expected_time(betas, delta) - lam * asymptotic_success_probability(betas)


def silence_probability(alphas, k: int) -> float:
    """Probability that no node transmits, (1 - S_N)^k."""
    arr = check_alphas(alphas)
    return float(pow_one_minus(compensated_cumsum(arr)[-1:], check_k(k))[0])


def expected_time_capped_at_tmax(alphas, k: int, delta: float, t_max: float) -> float:
    """Expected stop time when a silent round is charged T_max instead of N * delta."""
    arr = check_alphas(alphas)
    n_slots = arr.size - 1
    if t_max < n_slots * delta * (1.0 - 1e-12):
        raise ValidationError("t_max must be at least N * delta", field="t_max")
    return expected_selection_time(arr, k, delta) + max(0.0, t_max - n_slots * delta) * silence_probability(arr, k)
