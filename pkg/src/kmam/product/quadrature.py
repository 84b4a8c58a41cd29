"""Direct numerical integration of the product density and CDF.

With y = e^u the product density is

    f_Z(z) = int f_X(z e^-u) f_Y(e^u) du,

an integral over the whole real line whose integrand is evaluated in log
space. The factor densities are written through scipy's exponentially
scaled Bessel function and log-gamma, independently of the series code.
Each z gets its own support window found on a coarse grid, mapped to
[0, 1], and the batch is integrated at once with ``quad_vec``.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special, stats

from ..errors import QuadratureError
from .model import ProductModel

QUAD_TOL = 1e-10
_WINDOW = 60.0  # keep where the log integrand is within this of its peak
_GRID = np.linspace(-60.0, 60.0, 6001)


def _log_power_pdf_x(model: ProductModel, w):
    """log f_W for W = X^2, via I_{mu-1} (kappa > 0) or the gamma law."""
    c, mu, lam = model.x.rate, model.x.mu, model.x.poisson_mean
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if lam == 0:
            return mu * math.log(c) + special.xlogy(mu - 1, w) - c * w - math.lgamma(mu)
        # I_nu(t) (c w / lam)^(nu/2) = (c w)^nu I_nu(t) / (t/2)^nu, which
        # stays finite as lam -> 0; the ratio uses its series for small t
        nu = mu - 1
        t = 2.0 * np.sqrt(lam * c * w)
        q = 0.25 * t * t
        log_ratio = np.where(
            t < 1e-4,
            np.log1p(q / (nu + 1)) - math.lgamma(nu + 1),
            np.log(special.ive(nu, t)) + t - nu * np.log(0.5 * t),
        )
        return math.log(c) + special.xlogy(nu, c * w) - lam - c * w + log_ratio


def _log_envelope_pdf_x(model: ProductModel, r):
    with np.errstate(divide="ignore"):
        return math.log(2.0) + np.log(r) + _log_power_pdf_x(model, r * r)


def _log_pdf_y(model: ProductModel, y):
    a, mu, rh = model.y.alpha, model.y.mu, model.y.r_hat
    with np.errstate(divide="ignore", over="ignore"):
        return (math.log(a) + mu * math.log(mu) + (a * mu - 1) * np.log(y)
                - mu * np.power(y / rh, a) - math.lgamma(mu) - a * mu * math.log(rh))


def _log_cdf_x(model: ProductModel, r):
    x = 2.0 * model.x.rate * r * r
    with np.errstate(divide="ignore"):
        if model.x.kappa == 0:
            return np.log(special.gammainc(model.x.mu, x / 2.0))
        return stats.ncx2.logcdf(x, 2.0 * model.x.mu, 2.0 * model.x.poisson_mean)


def _windows(log_integrand, z):
    """Per-z (lo, hi, peak) windows in u covering the integrand's mass."""
    g = log_integrand(z[:, None], _GRID[None, :])
    g = np.where(np.isnan(g), -np.inf, g)
    peak = g.max(axis=1)
    if not np.all(np.isfinite(peak)):
        raise QuadratureError("integrand vanishes or overflows on the search grid")
    keep = g >= peak[:, None] - _WINDOW
    step = _GRID[1] - _GRID[0]
    idx = np.arange(_GRID.size)
    lo = _GRID[np.where(keep, idx, _GRID.size).min(axis=1)] - step
    hi = _GRID[np.where(keep, idx, -1).max(axis=1)] + step
    return lo, hi, peak


def _integrate(log_integrand, z, tol):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(~(z > 0)):
        raise ValueError("z must be positive")
    lo, hi, peak = _windows(log_integrand, z)
    width = hi - lo

    def f(t):
        u = lo + t * width
        return np.exp(log_integrand(z, u) - peak) * width

    val, err = integrate.quad_vec(f, 0.0, 1.0, epsabs=0.0, epsrel=tol, norm="max", limit=2000)
    if not np.all(np.isfinite(val)):
        raise QuadratureError("non-finite quadrature result")
    return val * np.exp(peak), err * np.exp(peak)


def product_pdf_quadrature_many(model: ProductModel, z, tol: float = QUAD_TOL):
    """Vectorized f_Z(z) by adaptive quadrature; returns (values, error estimates)."""

    def log_integrand(zz, u):
        return _log_envelope_pdf_x(model, zz * np.exp(-u)) + _log_pdf_y(model, np.exp(u))

    return _integrate(log_integrand, z, tol)


def product_pdf_quadrature(model: ProductModel, z: float) -> float:
    return float(product_pdf_quadrature_many(model, [z])[0][0])


def product_cdf_quadrature_many(model: ProductModel, z, tol: float = QUAD_TOL):
    """F_Z(z) = E_Y[F_X(z / Y)] with the closed-form kappa-mu CDF."""

    def log_integrand(zz, u):
        return _log_cdf_x(model, zz * np.exp(-u)) + _log_pdf_y(model, np.exp(u)) + u

    return _integrate(log_integrand, z, tol)


def product_cdf_quadrature(model: ProductModel, z: float) -> float:
    return float(product_cdf_quadrature_many(model, [z])[0][0])


def product_moment_quadrature(model: ProductModel, order: float) -> float:
    """E[Z^order] = int z^order f_Z(z) dz, integrated in log z."""

    def g(v):
        z = np.exp(v)
        return z ** (order + 1) * product_pdf_quadrature_many(model, z)[0]

    from .tails import w_tail_window

    # Markov windows on W = g Z^2 bound the neglected order-weighted mass by 1e-16
    lo, hi = w_tail_window(model, 1e-16, order=order / 2.0)
    a = 0.5 * math.log(lo / model.power_scale)
    b = 0.5 * math.log(hi / model.power_scale)
    val, _ = integrate.quad_vec(g, a, b, epsrel=1e-10, epsabs=0.0, norm="max", limit=500)
    return float(np.atleast_1d(val)[0])
