from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..distributions import AlphaMuParams, KappaMuParams, alpha_mu_moment, kappa_mu_moment
from ..specfun import MAX_DENOMINATOR, RationalExponent, rational_approx


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation and fallback policy for the residue-series engine.

    ``abs_tol`` lets callers that only need absolute accuracy (CDF tails)
    skip the high-precision fallback. ``high_precision`` enables re-evaluation
    of badly cancelling points with mpmath at adaptive precision.
    """

    k_max: int = 200
    rel_tol: float = 1e-10
    perturbation_eps: float = 1e-4
    pfq_term_limit: int = 10_000
    richardson: bool = True
    high_precision: bool = True
    abs_tol: float = 0.0
    max_denominator: int = MAX_DENOMINATOR
    legacy_parity: bool = False

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be positive")
        if not 0 < self.rel_tol < 1:
            raise ValueError("rel_tol must lie in (0, 1)")
        if not 0 < self.perturbation_eps <= 1e-2:
            raise ValueError("perturbation_eps must lie in (0, 1e-2]")
        if self.pfq_term_limit < 1:
            raise ValueError("pfq_term_limit must be positive")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be nonnegative")


@dataclass(frozen=True)
class ProductModel:
    """Z = X * Y with X kappa-mu and Y alpha-mu, independent."""

    x: KappaMuParams
    y: AlphaMuParams
    exponent: RationalExponent | None = None
    series_cfg: SeriesConfig = field(default_factory=SeriesConfig)

    def __post_init__(self):
        if self.exponent is None:
            object.__setattr__(
                self, "exponent",
                rational_approx(self.y.alpha / 2, self.series_cfg.max_denominator,
                                self.series_cfg.legacy_parity),
            )
        elif not math.isclose(self.exponent.target, self.y.alpha / 2, rel_tol=1e-12):
            raise ValueError("exponent.target must equal y.alpha / 2")

    @classmethod
    def from_params(cls, kappa, mu_x, alpha, mu_y, r_hat_x=1.0, r_hat_y=1.0,
                    series_cfg: SeriesConfig | None = None) -> ProductModel:
        return cls(KappaMuParams(kappa, mu_x, r_hat_x), AlphaMuParams(alpha, mu_y, r_hat_y),
                   series_cfg=series_cfg or SeriesConfig())

    def with_config(self, **changes) -> ProductModel:
        cfg = replace(self.series_cfg, **changes)
        exponent = None if {"max_denominator", "legacy_parity"} & changes.keys() else self.exponent
        return ProductModel(self.x, self.y, exponent, cfg)

    @property
    def beta(self) -> float:
        """The rational p/q standing in for alpha_y / 2 in the series."""
        return self.exponent.p / self.exponent.q

    @property
    def b1_rate(self) -> float:
        """B1 / z^2 = mu_x (1 + kappa_x) / r_hat_x^2."""
        return self.x.rate

    @property
    def b2(self) -> float:
        """B2 = (mu_y / r_hat_y^alpha_y)^(2 / alpha_y), with alpha_y / 2 -> p/q."""
        return self.y.rate ** (1.0 / self.beta)

    @property
    def power_scale(self) -> float:
        """g with W = g Z^2 = B1 B2, the variable the residue series runs in."""
        return self.b1_rate * self.b2

    def mean_power(self) -> float:
        """E[Z^2] = E[X^2] E[Y^2]."""
        return kappa_mu_moment(self.x, 2.0) * alpha_mu_moment(self.y, 2.0)

    def mean_w(self) -> float:
        """E[W] = (mu_x + kappa mu_x) Gamma(mu_y + 1/beta) / Gamma(mu_y)."""
        mu_y, b = self.y.mu, self.beta
        return (self.x.mu + self.x.poisson_mean) * math.exp(math.lgamma(mu_y + 1 / b) - math.lgamma(mu_y))


@dataclass(frozen=True)
class SeriesCoefficients:
    """Prefactors of the product series at one z.

    ``a1`` is infinite and ``a3`` zero at kappa = 0; ``log_a1_a3`` holds
    their finite product. ``phi`` multiplies the kernel integral value
    ``K(k + mu_x)`` in the k-sum.
    """

    a1: float
    a2: float
    a3: float
    log_a1_a3: float
    b1: float
    b2: float
    m1: float
    m2: float
    m3: float
    phi: tuple[float, ...]


def series_coefficients(model: ProductModel, z: float, n_phi: int = 10) -> SeriesCoefficients:
    kx, mx, rx = model.x.kappa, model.x.mu, model.x.r_hat
    ay, my, ry = model.y.alpha, model.y.mu, model.y.r_hat
    lam = kx * mx
    with np.errstate(divide="ignore"):
        log_a1 = (math.log(2 * mx) + 0.5 * (mx + 1) * math.log1p(kx)
                  - 0.5 * (mx - 1) * np.log(kx) - lam)
        log_a3 = (mx - 1) * (math.log(mx * z / rx) + 0.5 * np.log(kx) + 0.5 * math.log1p(kx))
    # A1 A3 with the kappa powers cancelled analytically
    log_a1_a3 = (math.log(2.0) + mx * math.log(mx) + mx * math.log1p(kx) - lam
                 + (mx - 1) * math.log(z / rx))
    log_m1 = (math.log(ay) + my * math.log(my) - math.lgamma(my) - ay * my * math.log(ry)
              - (mx + 1) * math.log(rx))
    log_a2 = log_m1 + mx * math.log(z)
    b1 = model.b1_rate * z * z
    b2 = model.b2
    m3 = model.b1_rate
    beta = model.beta
    phi = []
    for k in range(n_phi):
        s = k + mx
        if lam == 0 and k > 0:
            phi.append(0.0)
            continue
        log_ratio = k * (2 * math.log(mx) + math.log(kx) + math.log1p(kx) - 2 * math.log(rx)) if k else 0.0
        log_phi = (log_a1_a3 + log_a2 - math.log(2.0) + log_ratio + 2 * k * math.log(z)
                   - math.lgamma(k + 1) - math.lgamma(s) - s * math.log(b1) - beta * my * math.log(b2))
        phi.append(math.exp(log_phi))
    return SeriesCoefficients(
        a1=float(np.exp(log_a1)), a2=math.exp(log_a2), a3=float(np.exp(log_a3)), log_a1_a3=log_a1_a3,
        b1=b1, b2=b2, m1=math.exp(log_m1), m2=float(np.exp(log_a3 - (mx - 1) * math.log(z))), m3=m3,
        phi=tuple(phi),
    )
