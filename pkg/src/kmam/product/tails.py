"""Moment bounds on the tails of W = g Z^2.

Markov's inequality applied to W^r gives rigorous truncation windows:

    int_t^inf w^m f_W(w) dw <= E[W^r] t^(m - r)       (r > m)
    int_0^t  w^m f_W(w) dw <= E[W^-r] t^(m + r)        (0 < r < r_max)

and the best r is found on a grid. Integrals over [lo, hi] then carry an
explicit bound for the neglected pieces.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, logsumexp

from .model import ProductModel


def w_log_moment(model: ProductModel, r) -> np.ndarray:
    """log E[W^r] for r > -min(mu_x, beta mu_y) (vectorized over r)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    mu_x, lam, mu_y, beta = model.x.mu, model.x.poisson_mean, model.y.mu, model.beta
    if np.any(mu_x + r <= 0) or np.any(mu_y + r / beta <= 0):
        raise ValueError("moment order outside the region of convergence")
    y_part = gammaln(mu_y + r / beta) - math.lgamma(mu_y)
    if lam == 0:
        x_part = gammaln(mu_x + r) - math.lgamma(mu_x)
    else:
        kmax = int(lam + 12 * math.sqrt(lam) + np.max(np.abs(r)) + 60)
        k = np.arange(kmax)[:, None]
        log_pi = -lam + k * math.log(lam) - gammaln(k + 1)
        x_part = logsumexp(log_pi + gammaln(mu_x + k + r[None, :]) - gammaln(mu_x + k), axis=0)
    return x_part + y_part


def w_tail_window(model: ProductModel, eps: float, order: float = 0.0) -> tuple[float, float]:
    """(lo, hi) such that the w^order-weighted mass outside is at most eps each side."""
    log_eps = math.log(eps)
    r_max = min(model.x.mu, model.beta * model.y.mu)
    r_up = order + np.geomspace(0.05, 200.0, 400)
    lm_up = w_log_moment(model, r_up)
    # smallest t with min_r lm - (r - m) log t <= log eps
    log_hi = np.min((lm_up - log_eps) / (r_up - order))
    r_lo = np.linspace(0.02, 0.98, 49) * r_max
    r_lo = r_lo[order + r_lo > 0]
    lm_lo = w_log_moment(model, -r_lo)
    log_lo = np.max((log_eps - lm_lo) / (order + r_lo))
    return math.exp(log_lo), math.exp(log_hi)
