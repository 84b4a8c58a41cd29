"""kappa-mu / alpha-mu product fading: densities, capacity and a Monte Carlo oracle.

Typical use::

    from kmam import ProductModel, SnrPoint, ecc_quadrature, product_pdf_series
    model = ProductModel.from_params(kappa=1.1, mu_x=1.2, alpha=2.0, mu_y=0.9)
    product_pdf_series(model, 1.0).value
    ecc_quadrature(model, SnrPoint(10.0))
"""
from .capacity import (
    CapacityCurve,
    SnrPoint,
    capacity_curve,
    ecc_quadrature,
    ecc_series,
    power_pdf,
    power_pdf_change_of_variables,
)
from .distributions import AlphaMuParams, KappaMuParams
from .errors import MonotonicityError, NonConvergence, PoleError, QuadratureError
from .montecarlo import GofReport, McConfig, ecc_estimate, ks_test, sample_product
from .product import (
    ProductModel,
    SeriesConfig,
    kernel_integral_series,
    product_cdf_quadrature,
    product_cdf_series,
    product_pdf_quadrature,
    product_pdf_series,
    special_case,
)
from .results import EvalResult
from .specfun import RationalExponent, rational_approx

__version__ = "0.1.0"

__all__ = [
    "KappaMuParams", "AlphaMuParams", "ProductModel", "SeriesConfig", "RationalExponent", "rational_approx",
    "EvalResult", "PoleError", "NonConvergence", "QuadratureError", "MonotonicityError",
    "product_pdf_series", "product_cdf_series", "product_pdf_quadrature", "product_cdf_quadrature",
    "kernel_integral_series", "special_case",
    "SnrPoint", "CapacityCurve", "capacity_curve", "ecc_quadrature", "ecc_series", "power_pdf",
    "power_pdf_change_of_variables",
    "McConfig", "GofReport", "sample_product", "ks_test", "ecc_estimate",
]
