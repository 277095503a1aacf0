"""Exceptions raised by the timer selection toolkit."""


class SelectionError(Exception):
    """Base class for every error raised by app.selection."""


class ValidationError(SelectionError, ValueError):
    """A parameter or input record violates its contract."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class MappingFormatError(ValidationError):
    """A serialized mapping table could not be parsed."""


class Infeasible(SelectionError):
    """The success constraint exceeds what any mapping can achieve."""

    def __init__(self, eta: float, p_max: float):
        super().__init__(
            f"eta={eta:.6g} exceeds the maximum success probability {p_max:.6g}; "
            "raise T_max or lower eta"
        )
        self.eta = eta
        self.p_max = p_max


class ConstraintUnmeetable(SelectionError):
    """The inverse-metric baseline cannot reach the requested success probability."""

    def __init__(self, eta: float, p_best: float):
        super().__init__(
            f"inverse-metric mapping reaches at most {p_best:.6g}, below eta={eta:.6g}"
        )
        self.eta = eta
        self.p_best = p_best


class NumericalFailure(SelectionError):
    """A numerical search did not converge."""
