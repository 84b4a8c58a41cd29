"""Composite Gauss-Legendre integration on a logarithmic axis.

Used where the integrand is an expensive vectorized evaluator (the series
engine, a batch of quadrature densities): every node of a refinement level
is evaluated in one call, and the panel count doubles until two levels agree.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import NonConvergence

_ORDER = 16


def _nodes(lo: float, hi: float, panels: int):
    x, w = np.polynomial.legendre.leggauss(_ORDER)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    v = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return v, wt


def log_axis_integral(func: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, *,
                      rel_tol: float = 1e-10, abs_tol: float = 0.0, panels: int = 4,
                      max_panels: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """int_lo^hi func(x) dx with x = e^v, for func returning shape (n_nodes, ...) or (n_nodes,).

    Returns (value, error estimate); raises NonConvergence when the panel
    budget runs out.
    """
    if not (0 < lo < hi):
        raise ValueError("need 0 < lo < hi")
    a, b = math.log(lo), math.log(hi)
    prev = None
    while True:
        v, wt = _nodes(a, b, panels)
        x = np.exp(v)
        vals = np.asarray(func(x))
        weights = (wt * x).reshape((-1,) + (1,) * (vals.ndim - 1))
        cur = np.sum(vals * weights, axis=0)
        if prev is not None:
            err = np.abs(cur - prev)
            if np.all(err <= np.maximum(rel_tol * np.abs(cur), abs_tol)):
                return cur, err
        if panels >= max_panels:
            raise NonConvergence("log-axis quadrature did not settle",
                                 terms_used=v.size,
                                 truncation_estimate=float(np.max(np.abs(cur - prev))) if prev is not None else math.inf)
        prev = cur
        panels *= 2
