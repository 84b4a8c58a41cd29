"""Named composite cases: familiar multipath laws times an alpha-mu factor.

Each constructor pins the kappa-mu parameters of the multipath law and sets
its rms so that the mean envelope is one.
"""
from __future__ import annotations

from ..distributions import AlphaMuParams, KappaMuParams
from .model import ProductModel, SeriesConfig

SPECIAL_CASES = ("rice_alpha_mu", "rayleigh_alpha_mu", "nakagami_alpha_mu", "one_sided_gaussian_alpha_mu")


def special_case(name: str, y: AlphaMuParams, k: float | None = None, m: float | None = None,
                 series_cfg: SeriesConfig | None = None) -> ProductModel:
    """Build a composite model by name.

    >>> special_case("nakagami_alpha_mu", AlphaMuParams(2.0, 1.0), m=2).x.mu
    2.0
    """
    if name == "rice_alpha_mu":
        if k is None or not k > 0:
            raise ValueError("rice_alpha_mu needs a Rice factor k > 0")
        kappa, mu = float(k), 1.0
    elif name == "rayleigh_alpha_mu":
        kappa, mu = 0.0, 1.0
    elif name == "nakagami_alpha_mu":
        if m is None or not m > 0:
            raise ValueError("nakagami_alpha_mu needs m > 0")
        kappa, mu = 0.0, float(m)
    elif name == "one_sided_gaussian_alpha_mu":
        kappa, mu = 0.0, 0.5
    else:
        raise ValueError(f"unknown special case {name!r}; choose from {', '.join(SPECIAL_CASES)}")
    return ProductModel(KappaMuParams.from_mean(kappa, mu, 1.0), y,
                        series_cfg=series_cfg or SeriesConfig())
