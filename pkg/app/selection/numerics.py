"""Small numerical helpers shared by the closed-form and solver modules."""

import math

import numpy as np

from app.selection.errors import ValidationError

# Slack allowed on the total interval mass.
MASS_TOLERANCE = 1e-12


def compensated_cumsum(values) -> np.ndarray:
    """Prefix sums with Neumaier compensation, accumulated strictly left to right."""
    values = np.asarray(values, dtype=float)
    out = np.empty(values.shape[0])
    total = 0.0
    compensation = 0.0
    for i, v in enumerate(values.tolist()):
        t = total + v
        if abs(total) >= abs(v):
            compensation += (total - t) + v
        else:
            compensation += (v - t) + total
        total = t
        out[i] = total + compensation
    return out


def compensated_sum(values) -> float:
    return math.fsum(np.asarray(values, dtype=float).tolist())


def pow_one_minus(s, exponent: float) -> np.ndarray:
    """(1 - s) ** exponent via exp(exponent * log1p(-s)), stable for large exponents."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    if exponent == 0:
        return np.ones_like(s)
    with np.errstate(divide="ignore"):
        return np.exp(exponent * np.log1p(-s))


def check_alphas(alphas) -> np.ndarray:
    """Validate an interval-length vector and return it as a float array."""
    arr = np.asarray(alphas, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("alphas must be a non-empty 1-D sequence", field="alphas")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("alphas must be finite", field="alphas")
    if np.any(arr < 0):
        raise ValidationError("every alpha must be non-negative", field="alphas")
    if compensated_sum(arr) > 1.0 + MASS_TOLERANCE:
        raise ValidationError(
            f"alphas sum to {compensated_sum(arr):.17g} > 1", field="alphas"
        )
    return arr


def check_betas(betas) -> np.ndarray:
    arr = np.asarray(betas, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("betas must be a non-empty 1-D sequence", field="betas")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValidationError("every beta must be positive and finite", field="betas")
    return arr


def check_k(k) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise ValidationError(f"k must be an integer >= 1, got {k!r}", field="k")
    return int(k)


def check_n_slots(n_slots) -> int:
    if isinstance(n_slots, bool) or not isinstance(n_slots, (int, np.integer)) or n_slots < 0:
        raise ValidationError(
            f"n_slots must be an integer >= 0, got {n_slots!r}", field="n_slots"
        )
    return int(n_slots)


def check_positive(value, field: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{field} must be positive and finite, got {value!r}", field=field)
    return value


INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0


def golden_section_minimize(objective, a: float, b: float, budget: int):
    """Golden-section search on [a, b] using at most ``budget`` objective calls.

    Returns ``(x_best, f_best, history)`` where history lists every
    ``(x, f(x))`` pair evaluated, in evaluation order.
    """
    if budget < 2:
        raise ValidationError("golden-section search needs a budget of at least 2", field="budget")
    history = []

    def evaluate(x):
        value = objective(x)
        history.append((x, value))
        return value

    dist = b - a
    c = a + INV_PHI_SQ * dist
    d = a + INV_PHI * dist
    yc = evaluate(c)
    yd = evaluate(d)
    while len(history) < budget:
        if yc < yd:
            b, d, yd = d, c, yc
            dist = INV_PHI * dist
            c = a + INV_PHI_SQ * dist
            yc = evaluate(c)
        else:
            a, c, yc = c, d, yd
            dist = INV_PHI * dist
            d = a + INV_PHI * dist
            yd = evaluate(d)

    x_best, f_best = min(history, key=lambda item: item[1])
    return x_best, f_best, history
