"""Domain types: selection parameters, timer mappings and metric distributions.

Metrics are handled on the uniform scale u = F(x) throughout; raw-metric
distributions only enter through :func:`uniformize` and
:meth:`MetricDistribution.quantile`.
"""

import enum
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from scipy import stats

from app.selection.errors import ValidationError
from app.selection.numerics import (
    MASS_TOLERANCE,
    check_alphas,
    check_betas,
    check_k,
    check_n_slots,
    check_positive,
    compensated_cumsum,
)

logger = logging.getLogger(__name__)


class _NoTransmit(enum.Enum):
    NO_TRANSMIT = "no_transmit"

    def __repr__(self):
        return "NoTransmit"

    def __str__(self):
        return "inf"


# A node whose metric maps beyond T_max stays silent.
NoTransmit = _NoTransmit.NO_TRANSMIT

TimerValue = Union[float, Literal[_NoTransmit.NO_TRANSMIT]]


def as_seconds(value: TimerValue) -> float:
    """Timer value as a float, with NoTransmit ordered after every real time."""
    return math.inf if value is NoTransmit else float(value)


# ============== Parameters ==============

@dataclass(frozen=True)
class SelectionParams:
    """Number of contenders, vulnerability window and maximum selection duration."""

    k: int
    delta: float
    t_max: float
    n_slots: int

    def __post_init__(self):
        check_k(self.k)
        check_positive(self.delta, "delta")
        check_n_slots(self.n_slots)
        if not math.isfinite(self.t_max) or self.t_max < 0:
            raise ValidationError(f"t_max must be finite and >= 0, got {self.t_max!r}", field="t_max")
        quotient = math.floor(Fraction(self.t_max) / Fraction(self.delta))
        # from_slots stores t_max = n * delta rounded to a double, which may floor to n - 1
        rounded_product = self.n_slots == quotient + 1 and self.n_slots * self.delta == self.t_max
        if self.n_slots != quotient and not rounded_product:
            raise ValidationError(
                f"n_slots={self.n_slots} does not match floor(t_max / delta) = {quotient}",
                field="n_slots",
            )

    @classmethod
    def from_slots(cls, k: int, n_slots: int, delta: float = 1.0) -> "SelectionParams":
        """Parameters for an exact slot count, with T_max = N * delta."""
        n_slots = check_n_slots(n_slots)
        return cls(k=check_k(k), delta=float(delta), t_max=n_slots * float(delta), n_slots=n_slots)

    @property
    def cap_n_slots(self) -> float:
        return self.n_slots * self.delta


def derive_params(k: int, delta: float, t_max: float) -> SelectionParams:
    """Build :class:`SelectionParams` with N = floor(t_max / delta)."""
    k = check_k(k)
    delta = check_positive(delta, "delta")
    t_max = float(t_max)
    if not math.isfinite(t_max) or t_max < 0:
        raise ValidationError(f"t_max must be finite and >= 0, got {t_max!r}", field="t_max")
    # exact floor of the quotient of the two stored doubles
    n_slots = math.floor(Fraction(t_max) / Fraction(delta))
    return SelectionParams(k=k, delta=delta, t_max=t_max, n_slots=n_slots)


# ============== Metric distributions ==============

class DistributionKind(str, enum.Enum):
    UNIFORM = "uniform"
    EXPONENTIAL = "exp"
    RAYLEIGH = "rayleigh"
    TABULATED = "table"


@dataclass(frozen=True)
class MetricDistribution:
    """CDF/quantile pair for the raw metric.

    ``scale`` is the mean for the exponential kind and sigma for Rayleigh
    (CDF 1 - exp(-x^2 / (2 sigma^2))). Tabulated kinds carry sorted (x, F(x))
    pairs and interpolate linearly.
    """

    kind: DistributionKind
    scale: float = 1.0
    table: tuple = field(default=(), repr=False)
    label: str = ""

    def __post_init__(self):
        if self.kind in (DistributionKind.EXPONENTIAL, DistributionKind.RAYLEIGH):
            check_positive(self.scale, "scale")
        if self.kind is DistributionKind.TABULATED:
            xs, fs = self._table_arrays
            if xs.size < 2:
                raise ValidationError("a tabulated CDF needs at least two points", field="table")
            if np.any(np.diff(xs) <= 0) or np.any(np.diff(fs) <= 0):
                raise ValidationError("tabulated x and F(x) must be strictly increasing", field="table")
            if fs[0] < 0 or fs[-1] > 1:
                raise ValidationError("tabulated F(x) must lie in [0, 1]", field="table")

    @classmethod
    def uniform(cls) -> "MetricDistribution":
        return cls(DistributionKind.UNIFORM, label="uniform")

    @classmethod
    def exponential(cls, mean: float = 1.0) -> "MetricDistribution":
        return cls(DistributionKind.EXPONENTIAL, scale=mean, label=f"exp:{mean:g}")

    @classmethod
    def rayleigh(cls, scale: float = 1.0) -> "MetricDistribution":
        return cls(DistributionKind.RAYLEIGH, scale=scale, label=f"rayleigh:{scale:g}")

    @classmethod
    def tabulated(cls, pairs, label: str = "table") -> "MetricDistribution":
        return cls(DistributionKind.TABULATED, table=tuple((float(x), float(f)) for x, f in pairs), label=label)

    @cached_property
    def _table_arrays(self):
        arr = np.asarray(self.table, dtype=float).reshape(-1, 2)
        return arr[:, 0], arr[:, 1]

    @cached_property
    def _frozen(self):
        if self.kind is DistributionKind.UNIFORM:
            return stats.uniform(loc=0.0, scale=1.0)
        if self.kind is DistributionKind.EXPONENTIAL:
            return stats.expon(scale=self.scale)
        if self.kind is DistributionKind.RAYLEIGH:
            return stats.rayleigh(scale=self.scale)
        return None

    @property
    def is_continuous(self) -> bool:
        return self.kind is not DistributionKind.TABULATED

    def cdf(self, x):
        if self._frozen is not None:
            return self._frozen.cdf(x)
        xs, fs = self._table_arrays
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < xs[0]) or np.any(x_arr > xs[-1]):
            logger.warning("metric outside tabulated range [%g, %g]; clamping", xs[0], xs[-1])
        # np.interp holds the end values outside the table
        return np.clip(np.interp(x_arr, xs, fs), 0.0, 1.0)

    def quantile(self, u):
        if self._frozen is not None:
            return self._frozen.ppf(u)
        xs, fs = self._table_arrays
        return np.interp(np.asarray(u, dtype=float), fs, xs)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.quantile(rng.random(size))


def parse_distribution(spec: str) -> MetricDistribution:
    """Parse ``uniform``, ``exp:MEAN``, ``rayleigh:SCALE`` or ``table:PATH``."""
    name, _, arg = spec.strip().partition(":")
    name = name.lower()
    try:
        if name == "uniform":
            return MetricDistribution.uniform()
        if name in ("exp", "exponential"):
            return MetricDistribution.exponential(float(arg) if arg else 1.0)
        if name == "rayleigh":
            return MetricDistribution.rayleigh(float(arg) if arg else 1.0)
    except ValueError as e:
        raise ValidationError(f"bad distribution parameter in {spec!r}: {e}", field="dist") from e
    if name == "table":
        return load_tabulated(Path(arg))
    raise ValidationError(
        f"unknown distribution {spec!r}; use uniform, exp:MEAN, rayleigh:SCALE or table:PATH",
        field="dist",
    )


def load_tabulated(path: Path) -> MetricDistribution:
    """Read a two-column ``x,F`` file (comment lines start with '#')."""
    if not path.exists():
        raise ValidationError(f"CDF table not found: {path}", field="dist")
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except ValueError as e:
        raise ValidationError(f"malformed CDF table {path}: {e}", field="dist") from e
    if data.shape[1] != 2:
        raise ValidationError(f"CDF table {path} must have exactly two columns", field="dist")
    return MetricDistribution.tabulated(data.tolist(), label=f"table:{path}")


def uniformize(dist: MetricDistribution, raw_metric: float) -> float:
    """Probability-integral transform: the uniform metric F(raw_metric)."""
    return float(dist.cdf(raw_metric))


# ============== Discrete mappings ==============

@dataclass(frozen=True)
class DiscreteMapping:
    """Interval lengths alpha_0..alpha_N on the uniform metric.

    A metric u in [1 - S_j, 1 - S_{j-1}) with S_j = alpha_0 + ... + alpha_j
    sets its timer to j * delta; u < 1 - S_N never transmits.
    """

    params: SelectionParams
    alphas: tuple

    def __post_init__(self):
        arr = check_alphas(self.alphas)
        if arr.size != self.params.n_slots + 1:
            raise ValidationError(
                f"expected {self.params.n_slots + 1} interval lengths, got {arr.size}",
                field="alphas",
            )
        object.__setattr__(self, "alphas", tuple(arr.tolist()))

    @cached_property
    def cumulative(self) -> np.ndarray:
        return compensated_cumsum(self.alphas)

    @cached_property
    def lower_bounds(self) -> np.ndarray:
        """Lower end 1 - S_j of interval j (non-increasing in j)."""
        return 1.0 - self.cumulative

    @property
    def no_transmit_mass(self) -> float:
        return max(0.0, 1.0 - float(self.cumulative[-1]))

    def slots(self, u) -> np.ndarray:
        """Slot index per uniform metric; n_slots + 1 marks NoTransmit."""
        ascending = self.lower_bounds[::-1]
        # closed lower ends: a metric on a boundary takes the smaller timer
        count = np.searchsorted(ascending, np.asarray(u, dtype=float), side="right")
        return self.params.n_slots + 1 - count

    def timers(self, u) -> np.ndarray:
        slots = self.slots(u)
        return np.where(slots > self.params.n_slots, np.inf, slots * self.params.delta)


@dataclass(frozen=True)
class AsymptoticMapping:
    """Normalized interval lengths beta_j = k * alpha_j in the large-k limit."""

    n_slots: int
    betas: tuple

    def __post_init__(self):
        arr = check_betas(self.betas)
        check_n_slots(self.n_slots)
        if arr.size != self.n_slots + 1:
            raise ValidationError(
                f"expected {self.n_slots + 1} normalized lengths, got {arr.size}", field="betas"
            )
        object.__setattr__(self, "betas", tuple(arr.tolist()))

    def to_finite(self, params: SelectionParams) -> DiscreteMapping:
        """Apply the limit mapping to k nodes by setting alpha_j = beta_j / k."""
        if params.n_slots != self.n_slots:
            raise ValidationError("params.n_slots does not match the mapping", field="n_slots")
        alphas = np.asarray(self.betas) / params.k
        total = float(compensated_cumsum(alphas)[-1])
        if total > 1.0 + MASS_TOLERANCE:
            raise ValidationError(
                f"k={params.k} is too small for this mapping (sum of beta/k = {total:.6g})",
                field="k",
            )
        return DiscreteMapping(params, tuple(alphas.tolist()))


# ============== Continuous mappings ==============

@dataclass(frozen=True)
class InverseMetric:
    """f(mu) = c / mu applied to the raw metric mu = quantile(u)."""

    c: float
    distribution: MetricDistribution

    def __post_init__(self):
        check_positive(self.c, "c")

    name = "inverse_metric"

    def timers(self, u) -> np.ndarray:
        mu = self.distribution.quantile(u)
        with np.errstate(divide="ignore"):
            return np.where(mu > 0, self.c / np.where(mu > 0, mu, 1.0), np.inf)

    def mass_below(self, x: float) -> float:
        """Probability that a uniform metric gets a timer strictly below x."""
        if x <= 0:
            return 0.0
        return float(1.0 - self.distribution.cdf(self.c / x))


@dataclass(frozen=True)
class LinearDecay:
    """f(u) = slope * (1 - u) on the uniform metric."""

    slope: float

    def __post_init__(self):
        check_positive(self.slope, "slope")

    name = "linear_decay"

    def timers(self, u) -> np.ndarray:
        return self.slope * (1.0 - np.asarray(u, dtype=float))

    def mass_below(self, x: float) -> float:
        return float(np.clip(x / self.slope, 0.0, 1.0))


@dataclass(frozen=True)
class ContinuousMapping:
    """A monotone non-increasing metric-to-timer rule cut off at t_max."""

    rule: Union[InverseMetric, LinearDecay]
    t_max: float

    def __post_init__(self):
        if math.isnan(self.t_max) or self.t_max < 0:
            raise ValidationError(f"t_max must be >= 0, got {self.t_max!r}", field="t_max")

    def timers(self, u) -> np.ndarray:
        t = self.rule.timers(u)
        return np.where(t <= self.t_max, t, np.inf)


Mapping = Union[DiscreteMapping, ContinuousMapping]


def evaluate_timer(mapping: Mapping, u: float) -> TimerValue:
    """Timer value in seconds for a uniform metric u in [0, 1), or NoTransmit."""
    if not 0.0 <= u < 1.0:
        raise ValidationError(f"uniform metric must lie in [0, 1), got {u!r}", field="u")
    value = float(mapping.timers(np.array([u]))[0])
    return NoTransmit if math.isinf(value) else value


def raw_thresholds(mapping: DiscreteMapping, dist: MetricDistribution) -> np.ndarray:
    """Raw-metric lower boundaries F^-1(1 - S_j) of each interval of a mapping.

    A node whose raw metric is at least threshold j (and below threshold j-1)
    sets its timer to j * delta.
    """
    return np.asarray(dist.quantile(np.clip(mapping.lower_bounds, 0.0, 1.0)), dtype=float)


def check_mapping_params(mapping: Mapping, params: Optional[SelectionParams]) -> None:
    if isinstance(mapping, DiscreteMapping) and params is not None and mapping.params != params:
        raise ValidationError("mapping was built for different selection parameters", field="params")
