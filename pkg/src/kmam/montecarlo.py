"""Monte Carlo oracle: product samples, goodness of fit, capacity estimates.

Random streams come from one master ``SeedSequence``: stream i gets child
i, which is split again into an X and a Y generator (Philox, counter based).
Samples are drawn per stream in fixed chunk sizes and concatenated in
stream order, so results depend only on (seed, streams, n_samples).
"""
from __future__ import annotations

import functools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import interpolate, stats

from .distributions import sample_alpha_mu, sample_kappa_mu
from .errors import MonotonicityError
from .product.model import ProductModel, SeriesConfig
from .product.quadrature import (
    product_cdf_quadrature_many,
    product_moment_quadrature,
    product_pdf_quadrature_many,
)
from .product.series import w_lower_moment, w_pdf
from .product.tails import w_tail_window

DEFAULT_SEED = 12345


@dataclass(frozen=True)
class McConfig:
    n_samples: int = 1_000_000
    seed: int = DEFAULT_SEED
    bins: int = 100
    streams: int = 4

    def __post_init__(self):
        if self.n_samples < 1000:
            raise ValueError("n_samples must be at least 1000")
        if self.bins < 10:
            raise ValueError("bins must be at least 10")
        if self.streams < 1:
            raise ValueError("streams must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def with_seed(self, seed: int) -> McConfig:
        return McConfig(self.n_samples, seed, self.bins, self.streams)


@dataclass(frozen=True)
class GofReport:
    ks_statistic: float
    ks_p_value: float
    n: int
    max_deviation_location: float

    def passed(self, alpha: float = 0.01) -> bool:
        return self.ks_p_value > alpha


def stream_generators(cfg: McConfig) -> list[tuple[np.random.Generator, np.random.Generator]]:
    """One (X, Y) generator pair per stream, derived from the master seed."""
    master = np.random.SeedSequence(cfg.seed)
    pairs = []
    for child in master.spawn(cfg.streams):
        sx, sy = child.spawn(2)
        pairs.append((np.random.Generator(np.random.Philox(sx)), np.random.Generator(np.random.Philox(sy))))
    return pairs


def _chunk_sizes(n: int, streams: int) -> list[int]:
    base, extra = divmod(n, streams)
    return [base + (1 if i < extra else 0) for i in range(streams)]


def sample_product(model: ProductModel, cfg: McConfig) -> np.ndarray:
    """n_samples draws of Z = X Y, X and Y from independent streams."""
    pairs = stream_generators(cfg)
    sizes = _chunk_sizes(cfg.n_samples, cfg.streams)

    def draw(i):
        gx, gy = pairs[i]
        n = sizes[i]
        if n == 0:
            return np.empty(0)
        return sample_kappa_mu(model.x, gx, n) * sample_alpha_mu(model.y, gy, n)

    workers = min(cfg.streams, os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(draw, range(cfg.streams)))
    else:
        parts = [draw(i) for i in range(cfg.streams)]
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# goodness of fit


def ks_test(samples, cdf: Callable[[np.ndarray], np.ndarray], monotone_tol: float = 1e-12) -> GofReport:
    """Two-sided one-sample KS test with the asymptotic p-value.

    ``cdf`` is evaluated once on the sorted samples. A decrease larger than
    ``monotone_tol`` raises :class:`MonotonicityError`.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 100:
        raise ValueError("ks_test needs at least 100 samples")
    f = np.asarray(cdf(x), dtype=float)
    drops = np.diff(f)
    if np.any(drops < -monotone_tol) or np.any(~np.isfinite(f)):
        bad = int(np.argmin(drops)) if drops.size else 0
        raise MonotonicityError(float(x[bad]), float(drops[bad]) if drops.size else math.nan)
    i = np.arange(1, n + 1)
    d_plus = i / n - f
    d_minus = f - (i - 1) / n
    k = int(np.argmax(np.maximum(d_plus, d_minus)))
    d = float(max(d_plus[k], d_minus[k]))
    p = float(stats.kstwobign.sf(math.sqrt(n) * d))
    return GofReport(d, min(max(p, 0.0), 1.0), n, float(x[k]))


def series_cdf(model: ProductModel, n_grid: int = 400, tail_eps: float = 1e-10,
               abs_tol: float = 1e-11) -> Callable[[np.ndarray], np.ndarray]:
    """Envelope CDF from the residue series, as a monotone interpolant.

    The series CDF and density are evaluated on a log-spaced grid in W
    spanning the Markov tail window; a cubic Hermite spline (slopes from
    the density) fills in between. Outside the window the CDF is clamped
    to its end values, which are within ``tail_eps`` of 0 and 1.
    """
    lo, hi = w_tail_window(model, tail_eps)
    w = np.geomspace(lo, hi, n_grid)
    cfg = SeriesConfig(rel_tol=1e-9, abs_tol=abs_tol)
    model = model.with_config(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
    f_cdf = np.clip(w_lower_moment(model, w, 0.0).value, 0.0, 1.0)
    dens = w_pdf(model, w).value
    v = np.log(w)
    spline = interpolate.CubicHermiteSpline(v, f_cdf, np.maximum(dens, 0.0) * w)
    g = model.power_scale

    def cdf(z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore"):
            vz = np.log(g * z * z)
        out = spline(np.clip(vz, v[0], v[-1]))
        return np.clip(out, 0.0, 1.0)

    cdf.grid = (w, f_cdf, dens)
    return cdf


def quadrature_cdf(model: ProductModel) -> Callable[[np.ndarray], np.ndarray]:
    """Reference CDF by quadrature: Hermite spline in log z, slopes z f_Z(z)."""
    lo, hi = w_tail_window(model, 1e-10)
    g = model.power_scale
    z = np.geomspace(math.sqrt(lo / g), math.sqrt(hi / g), 400)
    vals = product_cdf_quadrature_many(model, z)[0]
    dens = product_pdf_quadrature_many(model, z)[0]
    vz = np.log(z)
    interp = interpolate.CubicHermiteSpline(vz, np.clip(vals, 0, 1), z * dens)

    def cdf(x):
        with np.errstate(divide="ignore"):
            return np.clip(interp(np.clip(np.log(np.asarray(x, dtype=float)), vz[0], vz[-1])), 0.0, 1.0)

    return cdf


def histogram_chi2(samples, model: ProductModel, bins: int = 100) -> tuple[float, int, float]:
    """Pearson chi-square of binned samples against quadrature bin probabilities.

    Bins are log-spaced between the 0.1 % and 99.9 % sample quantiles plus
    two open tail bins; bin probabilities are differences of the quadrature
    CDF, i.e. integrals of the quadrature density. Returns (chi2, dof, p).
    """
    x = np.asarray(samples, dtype=float)
    lo, hi = np.quantile(x, [0.001, 0.999])
    edges = np.geomspace(lo, hi, bins - 1)
    counts = np.concatenate(([np.sum(x < edges[0])], np.histogram(x, edges)[0], [np.sum(x >= edges[-1])]))
    cdf_e = product_cdf_quadrature_many(ProductModel(model.x, model.y, model.exponent), edges)[0]
    probs = np.diff(np.concatenate(([0.0], cdf_e, [1.0])))
    expected = probs * x.size
    keep = expected >= 5
    obs, exp_ = counts[keep], expected[keep]
    exp_ = exp_ * obs.sum() / exp_.sum()
    chi2, p = stats.chisquare(obs, exp_)
    return float(chi2), int(keep.sum() - 1), float(p)


# ---------------------------------------------------------------------------
# capacity


@functools.lru_cache(maxsize=256)
def _mean_power_quadrature(model: ProductModel) -> float:
    return product_moment_quadrature(model, 2.0)


def ecc_estimate(model: ProductModel, gamma_bar: float, bandwidth: float, cfg: McConfig) -> tuple[float, float]:
    """(B / ln 2) mean(ln(1 + gamma_i)) and its standard error.

    gamma_i = gamma_bar Z_i^2 / E[Z^2], with E[Z^2] from quadrature.
    """
    if gamma_bar < 0 or not bandwidth > 0:
        raise ValueError("gamma_bar must be nonnegative and bandwidth positive")
    if gamma_bar == 0:
        return 0.0, 0.0
    return ecc_estimate_many(model, [gamma_bar], bandwidth, cfg)[0]


def ecc_estimate_many(model: ProductModel, gamma_bars, bandwidth: float,
                      cfg: McConfig) -> list[tuple[float, float]]:
    """:func:`ecc_estimate` at several average SNRs from one sample draw."""
    gamma_bars = [float(g) for g in gamma_bars]
    if any(g < 0 for g in gamma_bars) or not bandwidth > 0:
        raise ValueError("gamma_bar must be nonnegative and bandwidth positive")
    scale = bandwidth / math.log(2.0)
    out = []
    z2 = None
    for gb in gamma_bars:
        if gb == 0:
            out.append((0.0, 0.0))
            continue
        if z2 is None:
            z = sample_product(model, cfg)
            z2 = z * z / _mean_power_quadrature(model)
        c = np.log1p(gb * z2)
        out.append((float(scale * c.mean()), float(scale * c.std(ddof=1) / math.sqrt(c.size))))
    return out
