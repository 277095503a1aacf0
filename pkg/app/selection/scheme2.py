"""Fastest mappings subject to a minimum success probability eta.

For a fixed multiplier lambda the auxiliary function L = Gamma - lambda * P
is minimized level by level. Writing r = lambda / delta and l = L / delta,
the first interval of level M is

    a_M = (1 + r + l_{M-1}) / (1 + r k + l_{M-1}),    a_0 = 1 / k,

and l_M = (1 - a_M)^k (1 + l_{M-1}) - r k a_M (1 - a_M)^(k-1). Working in
these normalized units makes the mapping depend on lambda only through r,
so the constrained solution is identical for every delta.

The outer search picks lambda so that P(lambda) meets eta.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from app.selection.analysis import (
    asymptotic_expected_time,
    asymptotic_success_probability,
    expected_selection_time,
    success_probability,
)
from app.selection.errors import Infeasible, NumericalFailure, ValidationError
from app.selection.model import AsymptoticMapping, DiscreteMapping, SelectionParams
from app.selection.numerics import (
    check_k,
    check_n_slots,
    check_positive,
    golden_section_minimize,
)
from app.selection.scheme1 import optimize as optimize_scheme1
from app.selection.scheme1 import unwrap_levels

logger = logging.getLogger(__name__)

CONSTRAINT_TOLERANCE = 1e-9
BRACKET_RELATIVE_WIDTH = 1e-12
MAX_DOUBLINGS = 400
MAX_BISECTIONS = 400
FALLBACK_BUDGET = 120
# p(lambda) drops larger than this between ordered evaluations count as non-monotone
MONOTONE_SLACK = 1e-12


@dataclass(frozen=True)
class Scheme2Solution:
    mapping: Union[DiscreteMapping, AsymptoticMapping]
    lambda_star: float
    p_success: float
    expected_time: float
    auxiliary: float
    delta: float
    eta: Optional[float] = None
    p_max: Optional[float] = None
    search_path: str = "inner"

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
        if isinstance(self.mapping, DiscreteMapping):
            return self.mapping.alphas
        return self.mapping.betas

    @property
    def no_transmit_mass(self) -> Optional[float]:
        if isinstance(self.mapping, DiscreteMapping):
            return self.mapping.no_transmit_mass
        return None

    def to_dict(self):
        return {
            "scheme": "scheme2",
            "k": self.k,
            "n_slots": self.n_slots,
            "delta": self.delta,
            "eta": self.eta,
            "lambda_star": self.lambda_star,
            "p_success": self.p_success,
            "expected_time": self.expected_time,
            "gamma_over_delta": self.expected_time / self.delta,
            "auxiliary": self.auxiliary,
            "no_transmit_mass": self.no_transmit_mass,
            "p_max": self.p_max,
            "search_path": self.search_path,
            "lengths": list(self.lengths),
        }


# ============== Inner problem: fixed lambda ==============

def _pow_one_minus(a: float, exponent: int) -> float:
    if exponent == 0:
        return 1.0
    if a >= 1.0:
        return 0.0
    return math.exp(exponent * math.log1p(-a))


def auxiliary_levels(k: int, n_slots: int, ratio: float) -> np.ndarray:
    """First interval length per level for lambda / delta = ratio."""
    firsts = np.empty(n_slots + 1)
    a = 1.0 / k
    # level 0 has no time cost: l_0 = -r * P_0
    level_value = -ratio * k * a * _pow_one_minus(a, k - 1)
    firsts[0] = a
    for m in range(1, n_slots + 1):
        a = (1.0 + ratio + level_value) / (1.0 + ratio * k + level_value)
        level_value = (
            _pow_one_minus(a, k) * (1.0 + level_value)
            - ratio * k * a * _pow_one_minus(a, k - 1)
        )
        firsts[m] = a
    return firsts


def _finite_solution(k: int, n_slots: int, delta: float, ratio: float, **extra) -> Scheme2Solution:
    params = SelectionParams.from_slots(k, n_slots, delta)
    mapping = DiscreteMapping(params, tuple(unwrap_levels(auxiliary_levels(k, n_slots, ratio)).tolist()))
    lam = ratio * delta
    p = success_probability(mapping.alphas, k)
    gamma = expected_selection_time(mapping.alphas, k, delta)
    return Scheme2Solution(
        mapping=mapping,
        lambda_star=lam,
        p_success=p,
        expected_time=gamma,
        auxiliary=gamma - lam * p,
        delta=delta,
        **extra,
    )


def minimize_auxiliary_finite(k: int, n_slots: int, delta: float, lam: float) -> Scheme2Solution:
    """Interval lengths minimizing Gamma - lambda * P for k nodes."""
    k = check_k(k)
    n_slots = check_n_slots(n_slots)
    delta = check_positive(delta, "delta")
    if math.isnan(lam) or lam < 0:
        raise ValidationError(f"lambda must be >= 0, got {lam!r}", field="lambda")
    return _finite_solution(k, n_slots, delta, lam / delta)


def auxiliary_betas(n_slots: int, ratio: float) -> np.ndarray:
    """beta_N = 1 and beta_j = 1 - exp(-beta_{j+1}) + 1 / ratio."""
    betas = np.empty(n_slots + 1)
    betas[n_slots] = 1.0
    extra = 1.0 / ratio
    for j in range(n_slots - 1, -1, -1):
        betas[j] = -math.expm1(-betas[j + 1]) + extra
    return betas


def _asymptotic_solution(n_slots: int, delta: float, ratio: float, **extra) -> Scheme2Solution:
    betas = auxiliary_betas(n_slots, ratio)
    mapping = AsymptoticMapping(n_slots=n_slots, betas=tuple(betas.tolist()))
    lam = ratio * delta
    p = asymptotic_success_probability(mapping.betas)
    gamma = asymptotic_expected_time(mapping.betas, delta)
    return Scheme2Solution(
        mapping=mapping,
        lambda_star=lam,
        p_success=p,
        expected_time=gamma,
        auxiliary=gamma - lam * p,
        delta=delta,
        **extra,
    )


def minimize_auxiliary_asymptotic(n_slots: int, delta: float, lam: float) -> Scheme2Solution:
    """Large-k limit of the inner problem; lambda must be strictly positive."""
    n_slots = check_n_slots(n_slots)
    delta = check_positive(delta, "delta")
    if math.isnan(lam) or lam <= 0:
        raise ValidationError(
            "lambda must be > 0 in the large-k limit; use the all-at-zero mapping for lambda = 0",
            field="lambda",
        )
    return _asymptotic_solution(n_slots, delta, lam / delta)


# ============== Outer problem: meet eta ==============

class _MonotoneTracker:
    """Records (ratio, p) evaluations and flags any decrease of p in ratio."""

    def __init__(self):
        self.points: list[tuple[float, float]] = []
        self.violated = False

    def add(self, ratio: float, p: float):
        for r, q in self.points:
            if (r < ratio and q > p + MONOTONE_SLACK) or (r > ratio and q < p - MONOTONE_SLACK):
                self.violated = True
        self.points.append((ratio, p))


def solve_constrained(
    k: Optional[int],
    n_slots: int,
    delta: float,
    eta: float,
    tol: float = CONSTRAINT_TOLERANCE,
) -> Scheme2Solution:
    """Minimum expected selection time subject to P >= eta.

    ``k=None`` solves the large-k limit. Raises :class:`Infeasible` when eta
    exceeds the Scheme 1 optimum for the same N.
    """
    n_slots = check_n_slots(n_slots)
    delta = check_positive(delta, "delta")
    if k is not None:
        k = check_k(k)
    eta = float(eta)
    if math.isnan(eta) or not 0.0 <= eta <= 1.0:
        raise ValidationError(f"eta must lie in [0, 1], got {eta!r}", field="eta")

    p_max = optimize_scheme1(k, n_slots, delta).p_star
    if eta > p_max:
        logger.info("eta=%.6g infeasible for k=%s N=%d (p_max=%.6g)", eta, k, n_slots, p_max)
        raise Infeasible(eta, p_max)

    def inner(ratio: float, path: str) -> Scheme2Solution:
        if k is None:
            return _asymptotic_solution(n_slots, delta, ratio, eta=eta, p_max=p_max, search_path=path)
        return _finite_solution(k, n_slots, delta, ratio, eta=eta, p_max=p_max, search_path=path)

    # lambda = 0: the all-at-zero mapping (p = 0 in the large-k limit)
    if k is not None:
        at_zero = inner(0.0, "lambda_zero")
        if at_zero.p_success >= eta:
            return at_zero
    tracker = _MonotoneTracker()
    tracker.add(0.0, 0.0 if k is None else at_zero.p_success)

    lo, hi = 0.0, 1.0
    hi_solution = inner(hi, "bisection")
    tracker.add(hi, hi_solution.p_success)
    doublings = 0
    while hi_solution.p_success < eta - tol:
        if doublings >= MAX_DOUBLINGS:
            raise NumericalFailure(f"no lambda reaches eta={eta:.17g} (p_max={p_max:.17g})")
        lo = hi
        hi *= 2.0
        hi_solution = inner(hi, "bisection")
        tracker.add(hi, hi_solution.p_success)
        doublings += 1

    for _ in range(MAX_BISECTIONS):
        if tracker.violated:
            break
        if abs(hi_solution.p_success - eta) < tol or hi - lo < BRACKET_RELATIVE_WIDTH * hi:
            break
        mid = 0.5 * (lo + hi)
        mid_solution = inner(mid, "bisection")
        tracker.add(mid, mid_solution.p_success)
        logger.debug("lambda/delta=%.17g p=%.17g", mid, mid_solution.p_success)
        if mid_solution.p_success >= eta:
            hi, hi_solution = mid, mid_solution
        else:
            lo = mid

    if not tracker.violated:
        logger.info(
            "scheme2 k=%s N=%d eta=%.6g: lambda/delta=%.6g via bisection", k, n_slots, eta, hi
        )
        return hi_solution

    logger.warning("p(lambda) not monotone for k=%s N=%d; falling back to golden-section scan", k, n_slots)
    return _golden_fallback(inner, eta, tol, tracker, max(hi, 1.0))


def _golden_fallback(inner, eta, tol, tracker, hi) -> Scheme2Solution:
    """Scan log(lambda / delta) for the fastest solution meeting eta."""
    candidates = []

    def objective(log_ratio):
        solution = inner(math.exp(log_ratio), "golden_fallback")
        candidates.append(solution)
        return (solution.p_success - eta) ** 2

    golden_section_minimize(objective, math.log(1e-12 * hi), math.log(hi) + math.log(1e3), FALLBACK_BUDGET)
    for ratio, _ in tracker.points:
        if ratio > 0:
            candidates.append(inner(ratio, "golden_fallback"))
    feasible = [s for s in candidates if s.p_success >= eta - tol]
    if not feasible:
        raise NumericalFailure(f"fallback scan found no lambda meeting eta={eta:.17g}")
    best = min(feasible, key=lambda s: (s.expected_time, -s.p_success))
    logger.info("golden fallback picked lambda=%.6g p=%.6g", best.lambda_star, best.p_success)
    return best
