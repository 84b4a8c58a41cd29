"""mpmath re-evaluation of the residue series for badly cancelling points.

Same term plan as the double engine; only the arithmetic differs. The
working precision is chosen by the caller from the cancellation ratio
(sum of |terms| over |sum|) so the result keeps its target digits.
Each hypergeometric factor comes from ``mpmath.hyper``, which manages its
own internal cancellation; the mass returned here measures the
cancellation between residue terms.
"""
from __future__ import annotations

import mpmath as mp

from ..errors import NonConvergence
from ._plan import residue_terms


def evaluate(mu_x, lam, mu_y, p, q, x, *, r=0.0, d=0, dps=40, k_max=200,
             rel_tol=1e-10, term_limit=10_000, guard=1e-7):
    """Return ``(value, mass, k_terms)`` as mpf numbers at ``dps`` digits."""
    with mp.workdps(dps):
        x = mp.mpf(x)
        mu_x, mu_y, lam, r = mp.mpf(mu_x), mp.mpf(mu_y), mp.mpf(lam), mp.mpf(r)
        beta = mp.mpf(p) / q
        big_x = x ** p / (mp.mpf(-p) ** p * mp.mpf(-q) ** q)
        tol = mp.mpf(10) ** (-dps)
        log_gamma_y = mp.loggamma(mu_y)
        total = mp.mpf(0)
        mass = mp.mpf(0)
        run = 0
        for k in range(k_max + 1):
            if lam == 0 and k > 0:
                return total, mass, k
            s = mu_x + k
            log_w = -mp.loggamma(s) - log_gamma_y
            if lam > 0:
                log_w += -lam + k * mp.log(lam) - mp.loggamma(k + 1)
            w = mp.exp(log_w)
            val_k = mp.mpf(0)
            mass_k = mp.mpf(0)
            for t in residue_terms(s, mu_y, beta, p, q, r, d, guard):
                coef = w * mp.gamma(t.gamma_arg) * t.scale / mp.factorial(t.i)
                if t.parity < 0:
                    coef = -coef
                if t.d:
                    coef /= t.denom ** t.d
                try:
                    h = mp.hyper(t.a, t.b, big_x, maxterms=term_limit)
                except mp.NoConvergence as exc:
                    raise NonConvergence("pFq did not converge in the high-precision path",
                                         terms_used=term_limit) from exc
                term = coef * x ** t.power * h
                val_k += term
                mass_k += abs(term)
            total += val_k
            mass += mass_k
            if max(abs(val_k), mass_k * tol) < rel_tol * max(abs(total), mass * tol):
                run += 1
                if run >= 3:
                    return total, mass, k + 1
            else:
                run = 0
        raise NonConvergence(f"k-sum did not converge within k_max={k_max}", terms_used=k_max)
