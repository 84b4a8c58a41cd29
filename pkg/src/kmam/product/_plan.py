"""Residue-term plan shared by the double and high-precision engines.

For one Poisson index k (shape s = mu_x + k) the density of
W = G1 * G2^(1/beta), G1 ~ Gamma(s), G2 ~ Gamma(mu_y), beta = p/q, is

    f(x) = [ sum_A + beta * sum_B ] / (x Gamma(s) Gamma(mu_y))

    sum_A = sum_{i<p} (-1)^i/i! Gamma(mu_y - (s+i)/beta) x^(s+i)
                 1F_{p+q}(1; xi(q, (s+i)/beta - mu_y + 1), xi(p, i+1); X)
    sum_B = sum_{i<q} (-1)^i/i! Gamma(s - beta (mu_y+i)) x^(beta (mu_y+i))
                 1F_{p+q}(1; xi(p, beta (mu_y+i) - s + 1), xi(q, i+1); X)

with X = x^p / ((-p)^p (-q)^q). Within each hypergeometric group the power
of x advances by p per term, so integrating w^r against the density adds
the parameter pair ((e0+r)/p; (e0+r)/p + 1) once per power of 1/(e+r).

The builder only uses + - * / on its inputs, so it runs unchanged on
floats and on mpmath numbers.
"""
from __future__ import annotations

from typing import Any, NamedTuple

from ..errors import PoleError
from ..specfun import POLE_GUARD, near_pole, xi_list


class Term(NamedTuple):
    parity: int  # (-1)^i
    i: int
    gamma_arg: Any
    scale: Any  # 1 for the A group, beta for the B group
    power: Any  # exponent of x multiplying the hypergeometric factor
    denom: Any  # e0 + r, raised to the power ``d``
    d: int
    a: tuple
    b: tuple


def _guard(value, where, guard):
    if near_pole(float(value), guard):
        raise PoleError(float(value), where)


def residue_terms(s, mu_y, beta, p: int, q: int, r=None, d: int = 0,
                  guard: float = POLE_GUARD) -> list[Term]:
    """Terms of the k-th residue series.

    ``d = 0`` gives the density (x power e0 - 1). ``d >= 1`` gives
    ``int_0^x w^r f(w) dw`` contributions carrying ``1/(e + r)^d``.
    """
    one = s - s + 1  # unit of the caller's number type
    terms = []
    for group, count in (("A", p), ("B", q)):
        for i in range(count):
            if group == "A":
                e0 = s + i
                gamma_arg = mu_y - e0 / beta
                b = tuple(xi_list(q, e0 / beta - mu_y + 1)) + tuple(xi_list(p, one * (i + 1)))
                scale = one
            else:
                e0 = beta * (mu_y + i)
                gamma_arg = s - e0
                b = tuple(xi_list(p, e0 - s + 1)) + tuple(xi_list(q, one * (i + 1)))
                scale = beta
            _guard(gamma_arg, f"Gamma argument, group {group}, i={i}", guard)
            for bj in b:
                _guard(bj, f"pFq denominator, group {group}, i={i}", guard)
            a = (one,)
            if d:
                denom = e0 + r
                if abs(float(denom)) <= guard:
                    raise PoleError(float(denom), f"moment denominator, group {group}, i={i}")
                a = a + (denom / p,) * d
                b = b + (denom / p + 1,) * d
                power = denom
            else:
                denom = None
                power = e0 - 1
            terms.append(Term(-1 if i % 2 else 1, i, gamma_arg, scale, power, denom, d, a, b))
    return terms
