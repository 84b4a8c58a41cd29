"""Residue-series engine for the product PDF, CDF and incomplete moments.

Everything runs in the normalized power W = B1 B2 = g Z^2. Conditioned on
the Poisson index k of the kappa-mu factor, W is the product of a
Gamma(mu_x + k) variate and a Gamma(mu_y) variate raised to 1/beta, and its
density is the two-group residue series in :mod:`._plan`. Terms are
accumulated as (log magnitude, sign) pairs; points whose estimated
rounding error exceeds the tolerance are re-evaluated with mpmath.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .. import specfun
from ..errors import NonConvergence, PoleError
from ..results import EvalResult
from ..specfun import EPS, RationalExponent, gamma_signed, near_pole, rational_approx
from . import _highprec
from ._plan import residue_terms
from .model import ProductModel, SeriesConfig
from .tails import w_log_moment, w_tail_window


# moment orders this close to a pole are stepped around (Richardson in r)
R_STEP = 1e-3
R_POLE_GUARD = 1e-7


class SeriesBatch(NamedTuple):
    """Vectorized series result, one entry per abscissa."""

    value: np.ndarray
    error: np.ndarray
    terms: np.ndarray
    perturbed: bool
    converged: np.ndarray
    precision: np.ndarray

    def result(self, i: int = 0) -> EvalResult:
        return EvalResult(
            value=float(self.value[i]), terms_used=int(self.terms[i]),
            truncation_estimate=float(self.error[i]), perturbed=self.perturbed,
            converged=bool(self.converged[i]), precision=int(self.precision[i]),
        )

    def scaled(self, factor) -> SeriesBatch:
        factor = np.abs(factor) if np.ndim(factor) else abs(factor)
        return self._replace(value=self.value * factor, error=self.error * factor)


class _Problem(NamedTuple):
    mu_x: float
    lam: float
    mu_y: float
    p: int
    q: int
    r: float = 0.0
    d: int = 0


def _signed_logadd(la, sa, lb, sb):
    """(la, sa) + (lb, sb) in log-magnitude/sign form, elementwise."""
    hi = np.maximum(la, lb)
    hi = np.where(np.isfinite(hi), hi, 0.0)
    v = sa * np.exp(la - hi) + sb * np.exp(lb - hi)
    with np.errstate(divide="ignore"):
        return hi + np.log(np.abs(v)), np.where(v < 0, -1.0, 1.0)


def _double_pass(pr: _Problem, x: np.ndarray, cfg: SeriesConfig):
    """Sum the series in double precision.

    Returns value, error estimate, log mass, k terms used, converged flags.
    """
    p, q = pr.p, pr.q
    beta = p / q
    logx = np.log(x)
    log_big = p * logx - p * math.log(p) - q * math.log(q)
    with np.errstate(over="ignore"):
        big_x = (-1.0) ** (p + q) * np.exp(log_big)
    pfq_tol = min(1e-13, cfg.rel_tol * 1e-3)
    lgy = math.lgamma(pr.mu_y)

    n = x.size
    tot_l = np.full(n, -np.inf)
    tot_s = np.ones(n)
    mass_l = np.full(n, -np.inf)
    err_l = np.full(n, -np.inf)  # rounding error, log scale
    run = np.zeros(n, dtype=int)
    done = np.zeros(n, dtype=bool)
    last_l = np.full(n, -np.inf)
    k_used = np.zeros(n, dtype=int)
    for k in range(cfg.k_max + 1):
        if pr.lam == 0 and k > 0:
            # a single Poisson term: nothing was truncated
            done[:] = True
            last_l[:] = -np.inf
            break
        s = pr.mu_x + k
        log_w = -math.lgamma(s) - lgy
        if pr.lam > 0:
            log_w += -pr.lam + k * math.log(pr.lam) - math.lgamma(k + 1)
        vals_l, vals_s, masses, errs = [], [], [], []
        for t in residue_terms(s, pr.mu_y, beta, p, q, pr.r, pr.d):
            lg, sg = gamma_signed(t.gamma_arg)
            lc = log_w + lg - math.lgamma(t.i + 1) + math.log(t.scale)
            sc = t.parity * sg
            if t.d:
                lc -= t.d * math.log(abs(t.denom))
                if t.denom < 0 and t.d % 2:
                    sc = -sc
            res = specfun.pfq_log(t.a, t.b, big_x, rel_tol=pfq_tol, term_limit=cfg.pfq_term_limit)
            base = lc + t.power * logx
            vals_l.append(base + res.log_abs)
            vals_s.append(sc * res.sign)
            m_l = base + res.log_mass
            masses.append(m_l)
            # relative error of each summand grows with the size of its logs
            cond = 16.0 + abs(lc) + np.abs(t.power * logx) + np.abs(res.log_mass) + res.terms
            errs.append(m_l + np.log(cond))
        vals_l = np.array(vals_l)
        vals_s = np.array(vals_s)
        top = np.max(vals_l, axis=0)
        top = np.where(np.isfinite(top), top, 0.0)
        acc = np.sum(vals_s * np.exp(vals_l - top), axis=0)
        with np.errstate(divide="ignore"):
            k_l = top + np.log(np.abs(acc))
        k_s = np.where(acc < 0, -1.0, 1.0)
        k_mass = logsumexp(np.array(masses), axis=0)

        active = ~done
        new_l, new_s = _signed_logadd(tot_l, tot_s, k_l, k_s)
        tot_l = np.where(active, new_l, tot_l)
        tot_s = np.where(active, new_s, tot_s)
        mass_l = np.where(active, np.logaddexp(mass_l, k_mass), mass_l)
        err_l = np.where(active, np.logaddexp(err_l, logsumexp(np.array(errs), axis=0)), err_l)
        last_l = np.where(active, k_l, last_l)
        k_used = np.where(active, k + 1, k_used)

        floor = math.log(EPS)
        size_k = np.maximum(k_l, k_mass + floor)
        size_t = np.maximum(tot_l, mass_l + floor)
        small = size_k < math.log(cfg.rel_tol) + size_t
        run = np.where(small, run + 1, 0)
        done |= run >= 3
        if done.all():
            break
    with np.errstate(over="ignore"):
        value = tot_s * np.exp(tot_l)
        err = np.exp(err_l) * EPS
        # k-tail: the terms are past their peak and falling by at least rel_tol
        err = err + np.exp(last_l) * 2.0
    return value, err, mass_l, k_used, done


def _solve(pr: _Problem, x, cfg: SeriesConfig):
    """Double pass plus high-precision repair of the failing points."""
    x = np.asarray(x, dtype=float)
    value, err, mass_l, k_used, done = _double_pass(pr, x, cfg)
    precision = np.full(x.size, 16)
    bad = ~done | ~np.isfinite(value) | ~(err <= np.maximum(cfg.rel_tol * np.abs(value), cfg.abs_tol))
    if cfg.high_precision and bad.any():
        for j in np.flatnonzero(bad):
            log_mass = float(mass_l[j])
            if not math.isfinite(log_mass):
                # far out the pFq factors grow like exp((p + q) X^(1/(p+q))), X ~ x^p
                big = pr.p * math.log(x[j]) - pr.p * math.log(pr.p) - pr.q * math.log(pr.q)
                log_mass = (pr.p + pr.q) * math.exp(big / (pr.p + pr.q))
            v, e, kk, dps = _repair(pr, float(x[j]), log_mass, cfg)
            value[j], err[j], k_used[j], precision[j] = v, e, kk, dps
            done[j] = True
    converged = done & np.isfinite(value) & (err <= np.maximum(cfg.rel_tol * np.abs(value), cfg.abs_tol) * 1.0001)
    return value, err, k_used, converged, precision


def _repair(pr: _Problem, x: float, log_mass: float, cfg: SeriesConfig):
    digits_target = -math.log10(cfg.rel_tol) + 6
    # first guess: assume the true value is no smaller than e^-700
    dps = int(min(max(30, log_mass / math.log(10) + digits_target + 10), 2000))
    for _ in range(6):
        v, mass, kk = _highprec.evaluate(
            pr.mu_x, pr.lam, pr.mu_y, pr.p, pr.q, x, r=pr.r, d=pr.d, dps=dps,
            k_max=cfg.k_max, rel_tol=cfg.rel_tol * 1e-2, term_limit=cfg.pfq_term_limit,
        )
        av = abs(v)
        cancel = float(mp_log10(mass) - mp_log10(av)) if av else float("inf")
        needed = int(math.ceil(cancel + digits_target))
        if needed <= dps:
            err = float(mass) * 10.0 ** (-dps) * 10 + float(av) * cfg.rel_tol * 1e-2
            return float(v), err, kk, dps
        dps = min(max(needed + 10, dps + 20), 2000)
    raise NonConvergence("high-precision repair did not settle", terms_used=kk)


def mp_log10(v):
    import mpmath as mp
    return mp.log10(v)


def _with_perturbation(pr: _Problem, x, cfg: SeriesConfig) -> SeriesBatch:
    try:
        value, err, k_used, conv, prec = _solve(pr, x, cfg)
        return SeriesBatch(value, err, k_used, False, conv, prec)
    except PoleError:
        pass
    eps = cfg.perturbation_eps
    v1, e1, k1, c1, p1 = _solve(pr._replace(mu_y=pr.mu_y + eps), x, cfg)
    if not cfg.richardson:
        return SeriesBatch(v1, e1 + 0.0, k1, True, c1, p1)
    v2, e2, k2, c2, p2 = _solve(pr._replace(mu_y=pr.mu_y + 2 * eps), x, cfg)
    value = 2 * v1 - v2
    # residual of the extrapolation is second order in eps
    err = 3 * e1 + e2 + np.abs(v1 - v2) * 10 * eps
    conv = c1 & c2
    return SeriesBatch(value, err, np.maximum(k1, k2), True, conv, np.maximum(p1, p2))


def _problem(model: ProductModel, r=0.0, d=0) -> _Problem:
    return _Problem(model.x.mu, model.x.poisson_mean, model.y.mu,
                    model.exponent.p, model.exponent.q, r, d)


def _as_positive_array(v, name):
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise ValueError(f"{name} must be positive and finite")
    return arr


# ---------------------------------------------------------------------------
# W-domain quantities


def w_pdf(model: ProductModel, w) -> SeriesBatch:
    """Density of W = B1 B2 = g Z^2."""
    w = _as_positive_array(w, "w")
    return _with_perturbation(_problem(model), w, model.series_cfg)


def w_lower_moment(model: ProductModel, w, r: float = 0.0, cfg: SeriesConfig | None = None) -> SeriesBatch:
    """int_0^w t^r f_W(t) dt; r = 0 is the CDF.

    Negative r is the analytic continuation in r (the integral itself
    diverges once r <= -min exponent); see :func:`w_upper_moment`.
    """
    w = _as_positive_array(w, "w")
    cfg = cfg or model.series_cfg
    if r < 0:
        return _with_perturbation(_problem(model, r, 1), w, cfg)
    # past the upper Markov window the integral is E[W^r] to within eps E[W^r]
    log_full = float(w_log_moment(model, [r])[0])
    eps = cfg.rel_tol * 1e-2
    hi = w_tail_window(model, eps * math.exp(log_full), order=r)[1]
    far = w >= hi
    if not far.any():
        return _with_perturbation(_problem(model, r, 1), w, cfg)
    n = w.size
    out = SeriesBatch(np.full(n, math.exp(log_full)), np.full(n, eps * math.exp(log_full)), np.zeros(n, dtype=int),
                      False, np.ones(n, dtype=bool), np.full(n, 16))
    if far.all():
        return out
    near = _with_perturbation(_problem(model, r, 1), w[~far], cfg)
    for field, arr in zip(out._fields, out):
        if isinstance(arr, np.ndarray):
            arr[~far] = getattr(near, field)
    return out._replace(perturbed=near.perturbed)


def w_lower_log_moment(model: ProductModel, w, cfg: SeriesConfig | None = None) -> SeriesBatch:
    """int_0^w ln(t) f_W(t) dt, from int_0^w t^(e-1) ln t dt = w^e (ln w / e - 1/e^2)."""
    w = _as_positive_array(w, "w")
    cfg = cfg or model.series_cfg
    one = _with_perturbation(_problem(model, 0.0, 1), w, cfg)
    two = _with_perturbation(_problem(model, 0.0, 2), w, cfg)
    logw = np.log(w)
    value = logw * one.value - two.value
    err = np.abs(logw) * one.error + two.error
    return SeriesBatch(value, err, np.maximum(one.terms, two.terms), one.perturbed or two.perturbed,
                       one.converged & two.converged, np.maximum(one.precision, two.precision))


def _full_moment(pr: _Problem, dps: int | None = None):
    """E[W^r] for the problem's shapes, continued analytically in r.

    Double precision when ``dps`` is None, else an mpf at ``dps`` digits.
    Raises PoleError on a pole in r.
    """
    beta = pr.p / pr.q
    if near_pole(pr.mu_x + pr.r, R_POLE_GUARD) or near_pole(pr.mu_y + pr.r / beta, R_POLE_GUARD):
        raise PoleError(pr.r, "moment order")
    if dps is None:
        ly, sy = gamma_signed(pr.mu_y + pr.r / beta)
        total, log_y = 0.0, ly - math.lgamma(pr.mu_y)
        for k in range(100_000):
            s = pr.mu_x + k
            lx, sx = gamma_signed(s + pr.r)
            log_pi = 0.0 if pr.lam == 0 else -pr.lam + k * math.log(pr.lam) - math.lgamma(k + 1)
            term = sx * math.exp(log_pi + lx - math.lgamma(s) + log_y)
            total += term
            if pr.lam == 0 or (k > pr.lam and abs(term) < 1e-18 * abs(total)):
                return sy * total
        raise NonConvergence("moment k-sum did not converge")
    import mpmath as mp

    with mp.workdps(dps):
        mu_x, mu_y, lam, r = mp.mpf(pr.mu_x), mp.mpf(pr.mu_y), mp.mpf(pr.lam), mp.mpf(pr.r)
        beta = mp.mpf(pr.p) / pr.q
        y_part = mp.gamma(mu_y + r / beta) / mp.gamma(mu_y)
        tol = mp.mpf(10) ** (-dps)
        total = mp.mpf(0)
        for k in range(100_000):
            s = mu_x + k
            log_pi = 0 if lam == 0 else -lam + k * mp.log(lam) - mp.loggamma(k + 1)
            term = mp.exp(log_pi) * mp.gamma(s + r) / mp.gamma(s)
            total += term
            if lam == 0 or (k > lam and abs(term) < tol * abs(total)):
                return total * y_part
        raise NonConvergence("moment k-sum did not converge")


def w_full_moment(model: ProductModel, r: float) -> float:
    """E[W^r] = sum_k pi_k Gamma(s+r)/Gamma(s) * Gamma(mu_y + r/beta)/Gamma(mu_y).

    Analytically continued through negative r; raises PoleError on a pole.
    """
    return _full_moment(_problem(model, r, 1))


def _upper_core(pr: _Problem, t: float, abs_tol: float, cfg: SeriesConfig):
    """E[W^r] - M_r(t) at fixed shapes, repaired in mpmath to ``abs_tol``."""
    full = _full_moment(pr)
    value, err, mass_l, k_used, done = _double_pass(pr, np.array([t]), cfg)
    upper = full - value[0]
    err_total = err[0] + 8 * EPS * abs(full)
    if done[0] and err_total <= max(abs_tol, cfg.rel_tol * abs(upper)):
        return upper, err_total, int(k_used[0]), 16
    if not cfg.high_precision:
        return upper, err_total, int(k_used[0]), 16
    import mpmath as mp

    digits = -math.log10(cfg.rel_tol) + 4
    big = max(abs(full), math.exp(min(float(mass_l[0]), 700.0)), 1e-300)
    target = max(abs(upper) if err_total < abs(upper) else 0.0, abs_tol, 1e-300)
    dps = int(min(max(30, math.log10(big / target) + digits + 5), 1500))
    for _ in range(8):
        with mp.workdps(dps):
            m_val, m_mass, kk = _highprec.evaluate(
                pr.mu_x, pr.lam, pr.mu_y, pr.p, pr.q, t, r=pr.r, d=pr.d, dps=dps, k_max=cfg.k_max,
                rel_tol=mp.mpf(10) ** (-dps + 5), term_limit=cfg.pfq_term_limit)
            f_val = _full_moment(pr, dps)
            u = f_val - m_val
            scale = max(abs(f_val), m_mass)
            lost = float(mp.log10(scale / max(abs(u), mp.mpf(abs_tol), mp.mpf(10) ** (-dps))))
            if lost + digits <= dps - 5:
                e = float(scale) * 10.0 ** (-dps + 5)
                return float(u), e, kk, dps
        dps = int(min(lost + digits + 15, 3000))
    raise NonConvergence("upper moment did not settle in high precision")


def w_upper_moment(model: ProductModel, t: float, r: float, abs_tol: float = 0.0,
                   cfg: SeriesConfig | None = None) -> EvalResult:
    """int_t^inf w^r f_W(w) dw, as E[W^r] - M_r(t) continued analytically in r.

    Poles in r (shared by both pieces, which cancel there) are stepped
    around with a symmetric fourth-order Richardson combination; shape-pole
    perturbation of mu_y applies to both pieces together.
    """
    cfg = cfg or model.series_cfg
    if not t > 0:
        raise ValueError("t must be positive")
    base = _problem(model, r, 1)
    beta = base.p / base.q

    def at_mu(pr):
        try:
            v, e, k, d = _upper_core(pr, t, abs_tol, cfg)
            return v, e, k, d, False
        except PoleError as exc:
            if "moment" in exc.where:
                raise
        eps = cfg.perturbation_eps
        v1, e1, k1, d1 = _upper_core(pr._replace(mu_y=pr.mu_y + eps), t, abs_tol, cfg)
        if not cfg.richardson:
            return v1, e1, k1, d1, True
        v2, e2, k2, d2 = _upper_core(pr._replace(mu_y=pr.mu_y + 2 * eps), t, abs_tol, cfg)
        return 2 * v1 - v2, 3 * e1 + e2 + abs(v1 - v2) * 10 * eps, max(k1, k2), max(d1, d2), True

    if near_pole(base.mu_x + r, R_STEP) or near_pole(base.mu_y + r / beta, R_STEP):
        h = R_STEP
        vals = {}
        for off in (-2 * h, -h, h, 2 * h):
            vals[off] = at_mu(base._replace(r=r + off))
        one = 0.5 * (vals[h][0] + vals[-h][0])
        two = 0.5 * (vals[2 * h][0] + vals[-2 * h][0])
        value = (4 * one - two) / 3
        err = sum(v[1] for v in vals.values()) + abs(one - two) * h * h
        terms = max(v[2] for v in vals.values())
        prec = max(v[3] for v in vals.values())
        perturbed = True
    else:
        value, err, terms, prec, perturbed = at_mu(base)
    return EvalResult(value=float(value), terms_used=int(terms), truncation_estimate=float(err),
                      perturbed=perturbed, converged=err <= max(abs_tol, cfg.rel_tol * abs(value)) * 1.0001,
                      precision=int(prec))


def w_log_mean(model: ProductModel) -> float:
    """E[ln W] = sum_k pi_k psi(mu_x + k) + psi(mu_y) / beta."""
    from scipy.special import digamma

    mu_x, lam = model.x.mu, model.x.poisson_mean
    if lam == 0:
        ex = float(digamma(mu_x))
    else:
        kmax = int(lam + 40 * math.sqrt(lam) + 40)
        k = np.arange(kmax)
        log_pi = -lam + k * math.log(lam) - np.array([math.lgamma(i + 1) for i in k])
        ex = float(np.sum(np.exp(log_pi) * digamma(mu_x + k)))
    return ex + float(digamma(model.y.mu)) / model.beta


# ---------------------------------------------------------------------------
# public product-level API


def product_pdf_series_many(model: ProductModel, z) -> SeriesBatch:
    z = _as_positive_array(z, "z")
    g = model.power_scale
    return w_pdf(model, g * z * z).scaled(2 * g * z)


def product_pdf_series(model: ProductModel, z: float) -> EvalResult:
    """f_Z(z) from the residue series. Raises NonConvergence if not converged."""
    res = product_pdf_series_many(model, [z]).result(0)
    if not res.converged:
        raise NonConvergence(f"series PDF did not converge at z={z}", res.terms_used, res.truncation_estimate)
    return res


def product_cdf_series_many(model: ProductModel, z, cfg: SeriesConfig | None = None) -> SeriesBatch:
    z = _as_positive_array(z, "z")
    return w_lower_moment(model, model.power_scale * z * z, 0.0, cfg)


def product_cdf_series(model: ProductModel, z: float) -> EvalResult:
    res = product_cdf_series_many(model, [z]).result(0)
    if not res.converged:
        raise NonConvergence(f"series CDF did not converge at z={z}", res.terms_used, res.truncation_estimate)
    return res


def kernel_integral_series(b1: float, b2: float, s: float, alpha_y: float, mu_y: float,
                           exponent: RationalExponent | None = None,
                           cfg: SeriesConfig | None = None) -> EvalResult:
    """int_0^inf t^(alpha mu_y/2 - s - 1) exp(-B1/t - B2^(alpha/2) t^(alpha/2)) dt.

    Evaluated through the two residue sums with 1F_{p+q} factors, where
    p/q = alpha_y / 2. The sums give B1^s B2^(beta mu_y) times the integral,
    which equals x Gamma(s) Gamma(mu_y) f(x) / beta for the single-shape
    residue density f at x = B1 B2; the prefactor is divided out here.
    """
    if not (b1 > 0 and b2 > 0):
        raise ValueError("b1 and b2 must be positive")
    cfg = cfg or SeriesConfig()
    exponent = exponent or rational_approx(alpha_y / 2, cfg.max_denominator, cfg.legacy_parity)
    beta = exponent.p / exponent.q
    pr = _Problem(s, 0.0, mu_y, exponent.p, exponent.q)
    x = b1 * b2
    batch = _with_perturbation(pr, np.array([x]), cfg)
    log_scale = (math.log(x) + math.lgamma(s) + math.lgamma(mu_y) - math.log(beta)
                 - s * math.log(b1) - beta * mu_y * math.log(b2))
    scale = math.exp(log_scale)
    return batch.scaled(scale).result(0)
