"""The kappa-mu and alpha-mu envelope laws.

Densities are evaluated in log space and vectorized over the abscissa.
The kappa-mu density carries the Bessel function through
``0F1(; mu; kappa*mu*c*r^2)`` with the leading power of the Bessel series
already cancelled against the ``kappa^{-(mu-1)/2}`` prefactor, so
``kappa = 0`` is evaluated exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator
from scipy import special, stats

from . import specfun


def _check_positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class KappaMuParams:
    """kappa-mu envelope: dominant/scattered power ratio, cluster count, rms."""

    kappa: float
    mu: float
    r_hat: float = 1.0

    def __post_init__(self):
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be nonnegative, got {self.kappa!r}")
        _check_positive("mu", self.mu)
        _check_positive("r_hat", self.r_hat)

    @classmethod
    def from_mean(cls, kappa: float, mu: float, r_bar: float = 1.0) -> KappaMuParams:
        return cls(kappa, mu, kappa_mu_rhat_from_mean(kappa, mu, r_bar))

    @property
    def rate(self) -> float:
        """mu (1 + kappa) / r_hat^2, the Gaussian rate of the power law."""
        return self.mu * (1.0 + self.kappa) / self.r_hat ** 2

    @property
    def poisson_mean(self) -> float:
        return self.kappa * self.mu


@dataclass(frozen=True)
class AlphaMuParams:
    """alpha-mu envelope: non-linearity exponent, cluster count, alpha-root rms."""

    alpha: float
    mu: float
    r_hat: float = 1.0

    def __post_init__(self):
        _check_positive("alpha", self.alpha)
        _check_positive("mu", self.mu)
        _check_positive("r_hat", self.r_hat)

    @classmethod
    def from_mean(cls, alpha: float, mu: float, r_bar: float = 1.0) -> AlphaMuParams:
        return cls(alpha, mu, alpha_mu_rhat_from_mean(alpha, mu, r_bar))

    @property
    def rate(self) -> float:
        """mu / r_hat^alpha; R^alpha is Gamma(mu) with this rate."""
        return self.mu / self.r_hat ** self.alpha


# ---------------------------------------------------------------------------
# kappa-mu


def _log_0f1(mu, arg):
    arg = np.atleast_1d(arg)
    return specfun.pfq_log([], [mu], arg, rel_tol=1e-16).log_abs


def kappa_mu_log_power_pdf(params: KappaMuParams, w):
    """log density of the power W = R^2."""
    w = np.asarray(w, dtype=float)
    c, mu, lam = params.rate, params.mu, params.poisson_mean
    flat = np.atleast_1d(w).ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (mu * math.log(c) + special.xlogy(mu - 1.0, flat) - c * flat - lam
               - math.lgamma(mu) + _log_0f1(mu, lam * c * flat))
    out = np.where(flat < 0, -np.inf, out)
    if mu < 1:
        out = np.where(flat == 0, np.inf, out)
    return out.reshape(w.shape) if w.ndim else float(out[0])


def kappa_mu_power_pdf(params: KappaMuParams, w):
    """Density of the power W = R^2 (mean r_hat^2)."""
    return np.exp(kappa_mu_log_power_pdf(params, w))


def kappa_mu_envelope_pdf(params: KappaMuParams, r):
    """Envelope density; ``r = 0`` returns the analytic limit."""
    r = np.asarray(r, dtype=float)
    flat = np.atleast_1d(r).ravel()
    mu = params.mu
    with np.errstate(divide="ignore", invalid="ignore"):
        logf = math.log(2.0) + special.xlogy(1.0, flat) + kappa_mu_log_power_pdf(params, flat * flat)
    # at r = 0 the leading power r^(2 mu - 1) decides
    if mu > 0.5:
        logf = np.where(flat == 0, -np.inf, logf)
    elif mu == 0.5:
        c, lam = params.rate, params.poisson_mean
        logf = np.where(flat == 0, math.log(2.0) + 0.5 * math.log(c) - lam - math.lgamma(0.5), logf)
    else:
        logf = np.where(flat == 0, np.inf, logf)
    out = np.exp(logf)
    return out.reshape(r.shape) if r.ndim else float(out[0])


def kappa_mu_cdf(params: KappaMuParams, r):
    """Envelope CDF via the noncentral chi-square law of 2 mu (1+kappa) R^2 / r_hat^2."""
    r = np.asarray(r, dtype=float)
    x = 2.0 * params.rate * np.square(r)
    if params.kappa == 0:
        return special.gammainc(params.mu, x / 2.0)
    return stats.ncx2.cdf(x, 2.0 * params.mu, 2.0 * params.poisson_mean)


def kappa_mu_moment(params: KappaMuParams, order: float) -> float:
    """E[R^order] (order > -2 mu)."""
    mu, lam, c = params.mu, params.poisson_mean, params.rate
    h = order / 2.0
    if mu + h <= 0:
        return math.inf
    log_f = specfun.pfq_log([mu + h], [mu], [lam], rel_tol=1e-16).log_abs[0]
    return math.exp(math.lgamma(mu + h) - math.lgamma(mu) - h * math.log(c) - lam + log_f)


def kappa_mu_rhat_from_mean(kappa: float, mu: float, r_bar: float = 1.0) -> float:
    """rms envelope giving mean envelope ``r_bar``.

    r_hat = r_bar Gamma(mu) sqrt((1+kappa) mu) e^{kappa mu}
            / (Gamma(mu + 1/2) 1F1(mu + 1/2; mu; kappa mu))
    """
    if not r_bar > 0:
        raise ValueError("r_bar must be positive")
    lam = kappa * mu
    log_f = specfun.pfq_log([mu + 0.5], [mu], [lam], rel_tol=1e-16).log_abs[0]
    log_r = (math.log(r_bar) + math.lgamma(mu) + 0.5 * math.log((1 + kappa) * mu) + lam
             - math.lgamma(mu + 0.5) - log_f)
    return math.exp(log_r)


# ---------------------------------------------------------------------------
# alpha-mu


def alpha_mu_pdf(params: AlphaMuParams, r):
    """alpha mu^mu r^(alpha mu - 1) exp(-mu (r/r_hat)^alpha) / (Gamma(mu) r_hat^(alpha mu))."""
    r = np.asarray(r, dtype=float)
    a, mu, rh = params.alpha, params.mu, params.r_hat
    with np.errstate(divide="ignore", invalid="ignore"):
        logf = (math.log(a) + mu * math.log(mu) + special.xlogy(a * mu - 1.0, r)
                - mu * np.power(r / rh, a) - math.lgamma(mu) - a * mu * math.log(rh))
    if a * mu < 1:
        logf = np.where(r == 0, np.inf, logf)
    elif a * mu == 1:
        logf = np.where(r == 0, math.log(a) + mu * math.log(mu) - math.lgamma(mu) - math.log(rh), logf)
    logf = np.where(r < 0, -np.inf, logf)
    return np.exp(logf) if r.ndim else float(np.exp(logf))


def alpha_mu_cdf(params: AlphaMuParams, r):
    r = np.asarray(r, dtype=float)
    return special.gammainc(params.mu, params.rate * np.power(np.maximum(r, 0.0), params.alpha))


def alpha_mu_moment(params: AlphaMuParams, order: float) -> float:
    """E[R^order] (order > -alpha mu)."""
    a, mu, rh = params.alpha, params.mu, params.r_hat
    if mu + order / a <= 0:
        return math.inf
    return math.exp(order * math.log(rh) + math.lgamma(mu + order / a) - math.lgamma(mu)
                    - (order / a) * math.log(mu))


def alpha_mu_rhat_from_mean(alpha: float, mu: float, r_bar: float = 1.0) -> float:
    """r_hat = r_bar mu^(1/alpha) Gamma(mu) / Gamma(mu + 1/alpha)."""
    if not r_bar > 0:
        raise ValueError("r_bar must be positive")
    return math.exp(math.log(r_bar) + math.log(mu) / alpha + math.lgamma(mu)
                    - math.lgamma(mu + 1.0 / alpha))


# ---------------------------------------------------------------------------
# exact samplers


def sample_kappa_mu(params: KappaMuParams, rng: Generator, n: int) -> np.ndarray:
    """Envelope samples via the Poisson mixture of gamma powers.

    W = r_hat^2 / (mu (1+kappa)) G with G ~ Gamma(mu + P), P ~ Poisson(kappa mu).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    shape = np.full(n, params.mu)
    if params.kappa > 0:
        shape = shape + rng.poisson(params.poisson_mean, size=n)
    g = rng.standard_gamma(shape)
    return np.sqrt(g / params.rate)


def sample_alpha_mu(params: AlphaMuParams, rng: Generator, n: int) -> np.ndarray:
    """R = G^(1/alpha) with G ~ Gamma(mu, scale r_hat^alpha / mu)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = rng.standard_gamma(params.mu, size=n) / params.rate
    return np.power(g, 1.0 / params.alpha)
