"""The kappa-mu times alpha-mu product model."""
from .composites import SPECIAL_CASES, special_case
from .model import ProductModel, SeriesCoefficients, SeriesConfig, series_coefficients
from .quadrature import (
    product_cdf_quadrature,
    product_cdf_quadrature_many,
    product_moment_quadrature,
    product_pdf_quadrature,
    product_pdf_quadrature_many,
)
from .series import (
    SeriesBatch,
    kernel_integral_series,
    product_cdf_series,
    product_cdf_series_many,
    product_pdf_series,
    product_pdf_series_many,
)

__all__ = [
    "ProductModel", "SeriesConfig", "SeriesCoefficients", "SeriesBatch", "series_coefficients",
    "special_case", "SPECIAL_CASES", "kernel_integral_series",
    "product_pdf_series", "product_pdf_series_many", "product_cdf_series", "product_cdf_series_many",
    "product_pdf_quadrature", "product_pdf_quadrature_many", "product_cdf_quadrature",
    "product_cdf_quadrature_many", "product_moment_quadrature",
]
