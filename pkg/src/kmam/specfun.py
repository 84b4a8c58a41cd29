"""Special-function kernel.

Log-gamma, signed gamma on the negative axis, the modified Bessel function
of the first kind, generalized hypergeometric series evaluated in
log-magnitude/sign form, the ``xi_list`` parameter-list operator and best
rational approximation of the kernel exponent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np
from scipy import special

from .errors import NonConvergence, PoleError
from .results import EvalResult

EPS = float(np.finfo(float).eps)
POLE_GUARD = 1e-7
PFQ_TERM_LIMIT = 10_000
PFQ_REL_TOL = 1e-12
MAX_DENOMINATOR = 64


def ln_gamma(x):
    """ln Gamma(x) for x > 0. Accepts scalars or arrays."""
    if np.ndim(x) == 0:
        x = float(x)
        if not x > 0:
            raise ValueError(f"ln_gamma domain error: x={x} must be positive")
        return math.lgamma(x)
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("ln_gamma domain error: all arguments must be positive")
    return special.gammaln(x)


def pole_distance(x: float) -> float:
    """Distance from ``x`` to the nearest nonpositive integer."""
    n = round(x)
    if n > 0:
        return abs(x)  # nearest nonpositive integer is 0
    return abs(x - n)


def near_pole(x: float, guard: float = POLE_GUARD) -> bool:
    return x < 0.5 and pole_distance(x) <= guard


def gamma_signed(x: float, guard: float = POLE_GUARD) -> tuple[float, int]:
    """Return ``(ln|Gamma(x)|, sign(Gamma(x)))``.

    Negative arguments go through the reflection formula. Raises
    :class:`PoleError` within ``guard`` of a nonpositive integer.
    """
    x = float(x)
    if near_pole(x, guard):
        raise PoleError(x, "gamma")
    if x > 0:
        return math.lgamma(x), 1
    # Gamma(x) = pi / (sin(pi x) Gamma(1 - x)); sin(pi x) reduced exactly
    n = round(x)
    s = math.sin(math.pi * (x - n))
    if n % 2:
        s = -s
    return math.log(math.pi) - math.log(abs(s)) - math.lgamma(1.0 - x), (1 if s > 0 else -1)


# ---------------------------------------------------------------------------
# generalized hypergeometric series


@dataclass(frozen=True)
class PfqArgs:
    numerator_params: tuple[float, ...]
    denominator_params: tuple[float, ...]
    argument: float

    def __post_init__(self):
        object.__setattr__(self, "numerator_params", tuple(float(a) for a in self.numerator_params))
        object.__setattr__(self, "denominator_params", tuple(float(b) for b in self.denominator_params))
        for b in self.denominator_params:
            if near_pole(b, 0.0) or (b <= 0 and b == int(b)):
                raise PoleError(b, "pFq denominator parameter")
        if len(self.numerator_params) > len(self.denominator_params) + 1:
            raise ValueError("pFq with m > n + 1 diverges for every nonzero argument")


class PfqLog(NamedTuple):
    """Vectorized pFq result in log form (one entry per argument)."""

    log_abs: np.ndarray
    sign: np.ndarray
    log_mass: np.ndarray  # log of the sum of |terms|
    terms: int
    tail: np.ndarray  # tail bound relative to |sum|


def _pfq_coefficients(a: Sequence[float], b: Sequence[float], n: int):
    """log|c_m| and sign(c_m) for m = 0..n of sum c_m x^m."""
    m = np.arange(n, dtype=float)
    with np.errstate(divide="ignore"):
        logr = -np.log1p(m)
        sg = np.ones(n)
        for aj in a:
            f = aj + m
            logr += np.log(np.abs(f))
            sg *= np.sign(f)
        for bj in b:
            f = bj + m
            logr -= np.log(np.abs(f))
            sg *= np.sign(f)
    logc = np.concatenate(([0.0], np.cumsum(logr)))
    sgc = np.concatenate(([1.0], np.cumprod(sg)))
    return logc, sgc


def pfq_log(a, b, x, *, rel_tol: float = PFQ_REL_TOL, term_limit: int = PFQ_TERM_LIMIT,
            guard: float = 0.0) -> PfqLog:
    """Sum pFq(a; b; x) for an array of arguments in log-magnitude/sign form.

    Terms follow the running-ratio recurrence; summation stops once the
    geometric tail bound ``|t_last| r / (1 - r)`` drops below
    ``rel_tol * |sum|`` for every argument.
    """
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    for bj in b:
        if bj <= 0 and (bj == round(bj) or near_pole(bj, guard)):
            raise PoleError(bj, "pFq denominator parameter")
    if len(a) > len(b) + 1:
        raise ValueError("pFq with m > n + 1 diverges for every nonzero argument")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore"):
        logx = np.log(np.abs(x))
    sgx = np.where(x < 0, -1.0, 1.0)
    logx_max = float(np.max(logx)) if x.size else -np.inf

    # ratios can spike near m = -b for negative b; sum at least past those
    n = max(32, int(-min(b, default=0.0)) + 2)
    while True:
        logc, sgc = _pfq_coefficients(a, b, n)
        m = np.arange(n)
        with np.errstate(invalid="ignore"):
            mlogx = np.where(m[:, None] == 0, 0.0, m[:, None] * logx[None, :])
        logt = logc[:n, None] + mlogx
        sgt = sgc[:n, None] * np.where(m[:, None] % 2 == 1, sgx[None, :], 1.0)

        top = np.max(logt, axis=0)
        top = np.where(np.isfinite(top), top, 0.0)
        scaled = np.exp(logt - top)
        total = np.sum(sgt * scaled, axis=0)
        mass = np.sum(scaled, axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_abs = top + np.log(np.abs(total))
            log_mass = top + np.log(mass)
            # tail beyond the last summed term
            dlog = logc[n] - logc[n - 1] if np.isfinite(logc[n - 1]) else -np.inf
            log_ratio = dlog + logx
            ratio = np.exp(np.minimum(log_ratio, 0.0))
            log_tail = logt[n - 1] + log_ratio - np.log1p(-np.minimum(ratio, 1 - 1e-16))
            ref = np.maximum(log_abs, log_mass + math.log(EPS))
            tail_rel = np.exp(log_tail - ref)
        # ratio must also be past its peak: the coefficient ratio shrinks from here on
        past_peak = not (logx_max > -np.inf and dlog + logx_max >= 0.0)
        ok = np.all((tail_rel <= rel_tol) | ~np.isfinite(log_tail)) and past_peak
        if ok:
            tail_rel = np.where(np.isfinite(tail_rel), tail_rel, 0.0)
            return PfqLog(log_abs, np.sign(total), log_mass, n, tail_rel)
        if n >= term_limit:
            raise NonConvergence(
                f"pFq did not converge within {term_limit} terms",
                terms_used=n, truncation_estimate=float(np.nanmax(tail_rel)),
            )
        n = min(2 * n, term_limit)


def pfq(args: PfqArgs, term_limit: int = PFQ_TERM_LIMIT, rel_tol: float = PFQ_REL_TOL) -> EvalResult:
    """Evaluate pFq for a single argument.

    0F0 and 1F1 at negative argument are summed after Kummer's
    transformation, which keeps every term positive.
    """
    a, b, x = args.numerator_params, args.denominator_params, args.argument
    log_scale = 0.0
    if x < 0 and len(a) == len(b) <= 1:
        # 0F0(x) = e^x 0F0(0); 1F1(a; b; x) = e^x 1F1(b - a; b; -x)
        a = tuple(bj - aj for aj, bj in zip(a, b))
        log_scale, x = x, (-x if b else 0.0)
    r = pfq_log(a, b, [x], rel_tol=rel_tol, term_limit=term_limit)
    if np.isfinite(r.log_abs[0]):
        value = float(r.sign[0] * math.exp(r.log_abs[0] + log_scale))
    else:
        value = 0.0
    err = abs(value) * float(r.tail[0]) + 4 * EPS * math.exp(r.log_mass[0] + log_scale)
    return EvalResult(value=value, terms_used=r.terms, truncation_estimate=err)


# ---------------------------------------------------------------------------
# Bessel I


def log_bessel_i(order, z):
    """Natural log of I_order(z) for z >= 0 (vectorized)."""
    z = np.asarray(z, dtype=float)
    if order <= -1:
        raise ValueError("bessel_i requires order > -1")
    if np.any(z < 0):
        raise ValueError("bessel_i requires a nonnegative argument")
    flat = np.atleast_1d(z).ravel()
    out = np.empty_like(flat)
    big = flat > 1e4
    small = ~big
    if np.any(small):
        zs = flat[small]
        r = pfq_log([], [order + 1.0], zs * zs / 4.0, rel_tol=1e-16)
        with np.errstate(divide="ignore", invalid="ignore"):
            lead = order * np.log(zs / 2.0) - math.lgamma(order + 1.0)
        if order == 0:
            lead = np.where(zs == 0, 0.0, lead)
        out[small] = lead + r.log_abs
    if np.any(big):
        zb = flat[big]
        out[big] = np.log(special.ive(order, zb)) + zb
    return out.reshape(z.shape) if z.ndim else float(out[0])


def bessel_i(order: float, z):
    """Modified Bessel function of the first kind. Overflow yields inf."""
    with np.errstate(over="ignore"):
        return np.exp(log_bessel_i(order, z))


# ---------------------------------------------------------------------------
# parameter lists and the rational exponent


def xi_list(a: int, b: float) -> list[float]:
    """[b/a, (b+1)/a, ..., (b+a-1)/a]."""
    if a < 1:
        raise ValueError("xi_list requires a >= 1")
    return [(b + j) / a for j in range(a)]


@dataclass(frozen=True)
class RationalExponent:
    p: int
    q: int
    target: float

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("p and q must be positive")
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"{self.p}/{self.q} is not in lowest terms")

    @property
    def value(self) -> float:
        return self.p / self.q

    @property
    def error(self) -> float:
        return abs(self.p / self.q - self.target)


def rational_approx(target: float, max_denominator: int = MAX_DENOMINATOR,
                    legacy_parity: bool = False) -> RationalExponent:
    """Best coprime p/q with q <= max_denominator approximating ``target``.

    ``legacy_parity`` applies the legacy rule that decrements an even p or an
    even q by one. It changes the represented exponent and is off by default.
    """
    if not target > 0:
        raise ValueError("target must be positive")
    if max_denominator < 1:
        raise ValueError("max_denominator must be >= 1")
    f = Fraction(target).limit_denominator(max_denominator)
    p, q = f.numerator, f.denominator
    if p == 0:
        p, q = 1, max_denominator
    if legacy_parity:
        if p % 2 == 0:
            p -= 1
        if q % 2 == 0:
            q -= 1
        p, q = max(p, 1), max(q, 1)
        g = math.gcd(p, q)
        p, q = p // g, q // g
    return RationalExponent(p, q, float(target))
