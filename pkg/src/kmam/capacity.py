"""SNR power density and ergodic capacity of the product channel.

The instantaneous SNR is gamma = gamma_bar Z^2 / E[Z^2]; in terms of the
series variable W = g Z^2 this is gamma = a W with a = gamma_bar / E[W].

Capacity is computed two ways:

* :func:`ecc_quadrature` integrates ln(1 + gamma) against the quadrature
  density on a log axis, with Markov-bounded truncation windows; this is the
  reference path.
* :func:`ecc_series` splits the SNR axis at one. Below, ln(1 + gamma) is
  expanded in powers of gamma; above, ln(1 + gamma) = ln gamma + ln(1 + 1/gamma)
  and the second logarithm is expanded in powers of 1/gamma. Every term is an
  incomplete moment of W, which the residue series supplies (the upper ones
  by analytic continuation, U_r = E[W^r] - M_r). Both alternating sums are
  Hausdorff moment sequences and are accelerated with the
  Cohen-Villegas-Zagier weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ._logquad import log_axis_integral
from .errors import NonConvergence
from .product.model import ProductModel
from .product.quadrature import product_pdf_quadrature_many
from .product.series import (
    product_pdf_series_many,
    w_log_mean,
    w_lower_log_moment,
    w_lower_moment,
    w_pdf,
    w_upper_moment,
)
from .product.tails import w_tail_window
from .results import EvalResult

LN2 = math.log(2.0)
# relative accuracy accepted when the pole perturbation fired (the Richardson
# residual is second order in the perturbation size)
PERTURBED_REL_TOL = 1e-5


@dataclass(frozen=True)
class SnrPoint:
    """Average SNR in dB (linear value derived) and the bandwidth B."""

    gamma_bar_db: float
    bandwidth: float = LN2

    def __post_init__(self):
        if not math.isfinite(self.gamma_bar_db):
            raise ValueError("gamma_bar_db must be finite")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    @classmethod
    def from_linear(cls, gamma_bar: float, bandwidth: float = LN2) -> SnrPoint:
        if not gamma_bar > 0:
            raise ValueError("gamma_bar must be positive")
        return cls(10.0 * math.log10(gamma_bar), bandwidth)

    @property
    def gamma_bar(self) -> float:
        return 10.0 ** (self.gamma_bar_db / 10.0)


@dataclass(frozen=True)
class CurvePoint:
    gamma_bar_db: float
    value: float
    method: str
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CapacityCurve:
    model: ProductModel
    bandwidth: float
    points: tuple[CurvePoint, ...]

    @property
    def db(self) -> np.ndarray:
        return np.array([p.gamma_bar_db for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    def is_nondecreasing(self, slack: float = 0.0) -> bool:
        v = self.values
        return bool(np.all(np.diff(v) >= -slack))


# ---------------------------------------------------------------------------
# power density


def _snr_scale(model: ProductModel, gamma_bar: float) -> float:
    if not gamma_bar > 0:
        raise ValueError("gamma_bar must be positive")
    return gamma_bar / model.mean_w()


def power_pdf_many(model: ProductModel, gamma, gamma_bar: float):
    """Series density of the SNR at each gamma; returns a SeriesBatch."""
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    if np.any(~(gamma > 0)):
        raise ValueError("gamma must be positive")
    a = _snr_scale(model, gamma_bar)
    return w_pdf(model, gamma / a).scaled(1.0 / a)


def power_pdf(model: ProductModel, gamma: float, gamma_bar: float) -> EvalResult:
    """f_gamma(gamma) from the residue series."""
    res = power_pdf_many(model, [gamma], gamma_bar).result(0)
    if not res.converged:
        raise NonConvergence(f"power density did not converge at gamma={gamma}",
                             res.terms_used, res.truncation_estimate)
    return res


def power_pdf_change_of_variables(model: ProductModel, gamma, gamma_bar: float, *, series: bool = False):
    """f_gamma(gamma) = f_Z(z) dz/dgamma with z = sqrt(gamma E[Z^2] / gamma_bar).

    Uses the quadrature envelope density by default (the consistency oracle);
    ``series=True`` uses the series envelope density instead.
    """
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    if not gamma_bar > 0 or np.any(~(gamma > 0)):
        raise ValueError("gamma and gamma_bar must be positive")
    ez2 = model.mean_power()
    z = np.sqrt(gamma * ez2 / gamma_bar)
    fz = product_pdf_series_many(model, z).value if series else product_pdf_quadrature_many(model, z)[0]
    return fz * z / (2.0 * gamma)


# ---------------------------------------------------------------------------
# capacity by quadrature


def ecc_quadrature(model: ProductModel, point: SnrPoint, rel_tol: float = 1e-9) -> float:
    """(B / ln 2) E[ln(1 + gamma)] by quadrature over the envelope density."""
    return ecc_quadrature_detail(model, point, rel_tol).value


def ecc_quadrature_detail(model: ProductModel, point: SnrPoint, rel_tol: float = 1e-9) -> EvalResult:
    gamma_bar = point.gamma_bar
    a = _snr_scale(model, gamma_bar)
    # ln(1 + a w) <= a w, so a first-moment tail bound caps the neglected mass
    eps = 1e-13 / max(a, 1.0)
    lo, hi = w_tail_window(model, eps, order=1.0)
    g = model.power_scale
    ez2 = model.mean_power()

    def integrand(z):
        return np.log1p(gamma_bar * z * z / ez2) * product_pdf_quadrature_many(model, z)[0]

    val, err = log_axis_integral(integrand, math.sqrt(lo / g), math.sqrt(hi / g), rel_tol=rel_tol * 0.1)
    scale = point.bandwidth / LN2
    trunc = float(err) + 2 * a * eps
    return EvalResult(value=float(val) * scale, terms_used=0, truncation_estimate=trunc * scale,
                      converged=True, extra={"window_w": (lo, hi), "tail_bound": 2 * a * eps * scale})


# ---------------------------------------------------------------------------
# capacity by series


def cvz_weights(n: int) -> np.ndarray:
    """Weights w_k with sum_k (-1)^k a_k ~= sum_{k<n} w_k a_k (Cohen-Villegas-Zagier).

    For a_k moments of a positive measure on [0, 1] the error is at most
    2 a_0 / (3 + sqrt 8)^n.
    """
    d = (3.0 + math.sqrt(8.0)) ** n
    d = 0.5 * (d + 1.0 / d)
    b, c = -1.0, -d
    w = np.empty(n)
    for k in range(n):
        c = b - c
        w[k] = c
        b = (k + n) * (k - n) * b / ((k + 0.5) * (k + 1.0))
    return w / d


def cvz_terms_needed(rel: float) -> int:
    return max(4, math.ceil(math.log(2.0 / rel) / math.log(3.0 + math.sqrt(8.0))))


def ecc_series(model: ProductModel, point: SnrPoint, split: float = 1.0,
               rel_tol: float = 1e-9) -> EvalResult:
    """Split-domain series capacity (see module docstring).

    ``split`` in (0, 1] is where the SNR axis is first cut: the Taylor series
    is summed directly on [0, split] (geometric convergence) and the band
    (split, 1] keeps the Taylor form with acceleration. The 1/gamma
    expansion only converges above gamma = 1, so the second cut stays at one.
    """
    if not 0 < split <= 1:
        raise ValueError("split must lie in (0, 1]")
    a = _snr_scale(model, point.gamma_bar)
    t = 1.0 / a
    n = cvz_terms_needed(rel_tol * 1e-2)
    weights = cvz_weights(n)
    perturbed = False
    err = 0.0

    def lower_moments(w_at, count):
        nonlocal perturbed
        out, errs = [], []
        for j in range(1, count + 1):
            m = w_lower_moment(model, [w_at], float(j))
            perturbed |= m.perturbed
            out.append(m.value[0] * a ** j / j)
            errs.append(m.error[0] * a ** j / j)
        return np.array(out), np.array(errs)

    # [0, 1] in SNR: Taylor in gamma
    lower_t, lower_e = lower_moments(t, n)
    if split < 1:
        # direct geometric sum on [0, split]; the band (split, 1] by acceleration
        n_direct = max(4, math.ceil(math.log(rel_tol * 1e-2) / math.log(split)))
        inner, inner_e = lower_moments(split / a, max(n, n_direct))
        signs = (-1.0) ** np.arange(n_direct)
        band = lower_t - inner[:n]
        lower_sum = float(np.sum(signs * inner[:n_direct])) + float(weights @ band)
        err += float(np.sum(inner_e)) + abs(inner[n_direct - 1]) * split
        err += 2.0 * abs(band[0]) / (3 + math.sqrt(8)) ** n
    else:
        lower_sum = float(weights @ lower_t)
        err += 2.0 * abs(lower_t[0]) / (3 + math.sqrt(8)) ** n
    err += float(np.abs(weights) @ lower_e)

    # (1, inf) in SNR: ln(a w) + ln(1 + 1/(a w))
    cdf = w_lower_moment(model, [t], 0.0)
    logm = w_lower_log_moment(model, [t])
    perturbed |= cdf.perturbed or logm.perturbed
    log_part = math.log(a) * (1.0 - cdf.value[0]) + (w_log_mean(model) - logm.value[0])
    err += abs(math.log(a)) * cdf.error[0] + logm.error[0]
    # each upper term must be good to a fraction of the capacity scale
    scale_ref = max(lower_sum + log_part, 1e-300)
    upper_t, upper_e = [], []
    for j in range(1, n + 1):
        u = w_upper_moment(model, t, -float(j), abs_tol=rel_tol * 1e-2 * scale_ref * j * a ** j)
        perturbed |= u.perturbed
        upper_t.append(u.value * a ** (-j) / j)
        upper_e.append(u.truncation_estimate * a ** (-j) / j)
    upper_t = np.array(upper_t)
    upper_sum = float(weights @ upper_t)
    err += 2.0 * abs(upper_t[0]) / (3 + math.sqrt(8)) ** n + float(np.abs(weights) @ np.array(upper_e))

    total = lower_sum + log_part + upper_sum
    scale = point.bandwidth / LN2
    value = total * scale
    err *= scale
    tol = max(rel_tol, PERTURBED_REL_TOL) if perturbed else rel_tol
    converged = err <= max(tol * abs(value), 1e-300)
    return EvalResult(value=value, terms_used=n, truncation_estimate=err, perturbed=perturbed,
                      converged=converged,
                      extra={"lower": lower_sum * scale, "log_part": log_part * scale,
                             "upper": upper_sum * scale, "split": split})


# ---------------------------------------------------------------------------
# curves


def capacity_curve(model: ProductModel, db_grid, bandwidth: float = LN2,
                   method: Literal["quadrature", "series", "monte_carlo"] = "quadrature",
                   mc_cfg=None, split: float = 1.0) -> CapacityCurve:
    """ECC over a grid of average SNRs; failed points carry NaN and the error."""
    grid = [float(v) for v in db_grid]
    if not grid:
        raise ValueError("db_grid must not be empty")
    if method not in ("quadrature", "series", "monte_carlo"):
        raise ValueError(f"unknown method {method!r}")
    points = []
    for db in grid:
        point = SnrPoint(db, bandwidth)
        try:
            if method == "quadrature":
                res = ecc_quadrature_detail(model, point)
                diag = {"truncation_estimate": res.truncation_estimate}
                value = res.value
            elif method == "series":
                res = ecc_series(model, point, split)
                diag = {"truncation_estimate": res.truncation_estimate, "terms_used": res.terms_used,
                        "perturbed": res.perturbed, "converged": res.converged}
                value = res.value
            else:
                from .montecarlo import McConfig, ecc_estimate

                value, se = ecc_estimate(model, point.gamma_bar, bandwidth, mc_cfg or McConfig())
                diag = {"standard_error": se}
        except (NonConvergence, ValueError, ArithmeticError) as exc:
            value, diag = math.nan, {"error": f"{type(exc).__name__}: {exc}"}
        points.append(CurvePoint(db, float(value), method, diag))
    return CapacityCurve(model, bandwidth, tuple(points))
