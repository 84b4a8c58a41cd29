from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class EvalResult:
    """A numerical value together with its convergence diagnostics.

    ``truncation_estimate`` is an absolute error estimate that covers both
    the truncated tail and floating-point cancellation. ``precision`` is the
    number of decimal digits the value was computed with (16 for the plain
    double path).
    """

    value: float
    terms_used: int
    truncation_estimate: float
    perturbed: bool = False
    converged: bool = True
    precision: int = 16
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __float__(self) -> float:
        return float(self.value)
