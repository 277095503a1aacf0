"""Mappings that maximize the probability of selecting the best node.

The finite-k solution is built bottom-up: level M holds the optimal first
interval length a_M for M free slots, and the full lookup table follows from
alpha_j = a_{N-j} * prod_{i<j} (1 - a_{N-i}).
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from app.selection.analysis import success_probability
from app.selection.model import AsymptoticMapping, DiscreteMapping, SelectionParams
from app.selection.numerics import check_k, check_n_slots

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Scheme1Solution:
    mapping: Union[DiscreteMapping, AsymptoticMapping]
    p_star: float

    @property
    def k(self) -> Optional[int]:
        return self.mapping.params.k if isinstance(self.mapping, DiscreteMapping) else None

    @property
    def n_slots(self) -> int:
        if isinstance(self.mapping, DiscreteMapping):
            return self.mapping.params.n_slots
        return self.mapping.n_slots

    @property
    def lengths(self) -> tuple:
        """alphas for finite k, betas in the limit."""
        if isinstance(self.mapping, DiscreteMapping):
            return self.mapping.alphas
        return self.mapping.betas

    def to_dict(self):
        return {
            "scheme": "scheme1",
            "k": self.k,
            "n_slots": self.n_slots,
            "p_star": self.p_star,
            "lengths": list(self.lengths),
        }


def _pow_one_minus(a: float, exponent: int) -> float:
    if exponent == 0:
        return 1.0
    return math.exp(exponent * math.log1p(-a))


def first_interval_levels(k: int, n_slots: int) -> tuple[np.ndarray, np.ndarray]:
    """Optimal first interval a_M and success probability P*_M for M = 0..n_slots."""
    firsts = np.empty(n_slots + 1)
    p_levels = np.empty(n_slots + 1)
    if k == 1:
        firsts.fill(1.0)
        p_levels.fill(1.0)
        return firsts, p_levels

    a = 1.0 / k
    p = k * a * _pow_one_minus(a, k - 1)
    firsts[0], p_levels[0] = a, p
    for m in range(1, n_slots + 1):
        a = (1.0 - p) / (k - p)
        p = k * a * _pow_one_minus(a, k - 1) + _pow_one_minus(a, k) * p
        firsts[m], p_levels[m] = a, p
    return firsts, p_levels


def unwrap_levels(firsts: np.ndarray) -> np.ndarray:
    """Turn per-level first intervals into the full N+1 entry lookup table."""
    n_slots = firsts.size - 1
    alphas = np.empty(n_slots + 1)
    remaining = 1.0
    for j in range(n_slots + 1):
        a = firsts[n_slots - j]
        alphas[j] = remaining * a
        remaining *= 1.0 - a
    return alphas


def optimize_finite(k: int, n_slots: int, delta: float = 1.0) -> Scheme1Solution:
    """Success-maximizing interval lengths for k nodes and N = n_slots."""
    k = check_k(k)
    n_slots = check_n_slots(n_slots)
    firsts, _ = first_interval_levels(k, n_slots)
    params = SelectionParams.from_slots(k, n_slots, delta)
    mapping = DiscreteMapping(params, tuple(unwrap_levels(firsts).tolist()))
    p_star = success_probability(mapping.alphas, k)
    logger.debug("scheme1 k=%d N=%d p_star=%.17g", k, n_slots, p_star)
    return Scheme1Solution(mapping=mapping, p_star=p_star)


def optimal_betas(n_slots: int) -> np.ndarray:
    """beta_N = 1 and beta_j = 1 - exp(-beta_{j+1})."""
    betas = np.empty(n_slots + 1)
    betas[n_slots] = 1.0
    for j in range(n_slots - 1, -1, -1):
        betas[j] = -math.expm1(-betas[j + 1])
    return betas


def optimize_asymptotic(n_slots: int) -> Scheme1Solution:
    """Large-k limit of the success-maximizing mapping; P* = exp(-beta_0)."""
    n_slots = check_n_slots(n_slots)
    betas = optimal_betas(n_slots)
    mapping = AsymptoticMapping(n_slots=n_slots, betas=tuple(betas.tolist()))
    return Scheme1Solution(mapping=mapping, p_star=math.exp(-betas[0]))


def optimize(k: Optional[int], n_slots: int, delta: float = 1.0) -> Scheme1Solution:
    """Dispatch on k; None selects the large-k limit."""
    if k is None:
        return optimize_asymptotic(n_slots)
    return optimize_finite(k, n_slots, delta)
