import math

import numpy as np
import pytest
from hypothesis import example, given
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import k0

from kmam.distributions import AlphaMuParams, KappaMuParams
from kmam.errors import NonConvergence, PoleError
from kmam.product import (
    SPECIAL_CASES,
    ProductModel,
    SeriesConfig,
    kernel_integral_series,
    product_cdf_quadrature,
    product_cdf_quadrature_many,
    product_cdf_series,
    product_cdf_series_many,
    product_moment_quadrature,
    product_pdf_quadrature,
    product_pdf_quadrature_many,
    product_pdf_series,
    product_pdf_series_many,
    special_case,
)
from kmam.product.tails import w_log_moment, w_tail_window

DOUBLE_RAYLEIGH = ProductModel.from_params(0.0, 1.0, 2.0, 1.0)


def double_rayleigh(z):
    return 4 * z * k0(2 * z)


# ---------------------------------------------------------------------------
# model construction


def test_model_exponent_and_scales():
    m = ProductModel.from_params(1.1, 1.2, 6.0, 1.3)
    assert (m.exponent.p, m.exponent.q) == (3, 1)
    assert m.beta == 3.0
    from kmam.distributions import alpha_mu_moment, kappa_mu_moment

    assert m.mean_power() == pytest.approx(kappa_mu_moment(m.x, 2.0) * alpha_mu_moment(m.y, 2.0), rel=1e-13)
    m = ProductModel.from_params(1.1, 1.2, 3.0, 1.3)
    assert (m.exponent.p, m.exponent.q) == (3, 2)
    with pytest.raises(ValueError):
        SeriesConfig(k_max=0)


def test_model_with_config_keeps_parameters():
    m = ProductModel.from_params(0.7, 1.1, 2.0, 0.9)
    m2 = m.with_config(rel_tol=1e-6)
    assert m2.x == m.x and m2.y == m.y and m2.series_cfg.rel_tol == 1e-6


# ---------------------------------------------------------------------------
# kernel integral


def test_kernel_integral_against_quadrature():
    # 40-digit quadrature of the defining integral
    cases = [((0.5, 1.0, 1.2, 2.0, 1.0), 0.51832016946375066609),
             ((1.0, 1.0, 1.5, 2.0, 1.3), 0.22968375103647243249),
             ((0.7, 1.3, 2.1, 3.0, 0.8), 0.40864605221802256792)]
    for args, expected in cases:
        assert kernel_integral_series(*args).value == pytest.approx(expected, rel=1e-8)


@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(0.3, 3.0), st.sampled_from([2.0, 3.0, 4.0, 6.0]),
       st.floats(0.4, 3.0))
def test_kernel_integral_positive(b1, b2, s, alpha, mu):
    try:
        r = kernel_integral_series(b1, b2, s, alpha, mu)
    except PoleError:
        return
    assert r.value > 0


# ---------------------------------------------------------------------------
# densities


def test_double_rayleigh_pdf():
    r = product_pdf_series(DOUBLE_RAYLEIGH, 1.0)
    assert r.perturbed
    assert r.value == pytest.approx(4 * k0(2.0), rel=1e-6)
    z = np.array([0.25, 0.5, 1.0, 2.0])
    np.testing.assert_allclose(product_pdf_quadrature_many(DOUBLE_RAYLEIGH, z)[0], double_rayleigh(z), rtol=1e-12)


def test_pdf_series_matches_reference_values():
    # 40-digit quadrature of the product integral
    m = ProductModel.from_params(1.1, 1.2, 2.0, 1.3)
    assert product_pdf_series(m, 1.0).value == pytest.approx(0.57748684642373903471, rel=1e-9)
    assert product_pdf_quadrature(m, 1.0) == pytest.approx(product_pdf_series(m, 1.0).value, rel=1e-6)
    m = ProductModel.from_params(0.7, 1.1, 6.0, 0.9)
    assert product_pdf_series(m, 0.5).value == pytest.approx(0.88061113409809793677, rel=1e-9)


def test_pdf_against_monte_carlo_bin():
    m = ProductModel.from_params(0.7, 1.1, 6.0, 0.9)
    from kmam.montecarlo import McConfig, sample_product

    z = sample_product(m, McConfig(n_samples=10_000_000, seed=99))
    lo, hi = 0.49, 0.51
    count = np.count_nonzero((z >= lo) & (z < hi))
    prob = product_cdf_quadrature(m, hi) - product_cdf_quadrature(m, lo)
    # bin probability by Simpson's rule on the series density
    f = product_pdf_series_many(m, [lo, 0.5, hi]).value
    assert prob == pytest.approx((hi - lo) / 6 * (f[0] + 4 * f[1] + f[2]), rel=1e-7)
    assert abs(count - prob * z.size) < 4 * math.sqrt(prob * z.size)


def test_pdf_vanishes_at_origin():
    m = ProductModel.from_params(0.7, 1.2, 2.0, 1.3)  # leading power 2 mu_x - 1 > 0
    z = np.array([1e-6, 1e-4, 1e-2])
    v = product_pdf_series_many(m, z).value
    assert np.all(np.diff(v) > 0) and v[0] < 1e-4


@given(st.floats(0.0, 2.0), st.floats(0.6, 2.5), st.sampled_from([2.0, 3.0, 5.0, 6.0]), st.floats(0.6, 2.5),
       st.floats(0.3, 3.0))
@example(kappa=4.8222259317421806e-273, mu1=2.0, alpha=2.0, mu2=1.0, z=1.0)  # subnormal kappa
def test_series_matches_quadrature(kappa, mu1, alpha, mu2, z):
    m = ProductModel.from_params(kappa, mu1, alpha, mu2)
    s = product_pdf_series(m, z)
    q = product_pdf_quadrature(m, z)
    assert s.value == pytest.approx(q, rel=1e-3 if s.perturbed else 1e-5)


def test_quadrature_normalization():
    for c in [(0.0, 1.0, 2.0, 1.0), (1.1, 1.2, 6.0, 1.3), (1.5, 0.5, 10.0, 0.9)]:
        m = ProductModel.from_params(*c)
        assert product_moment_quadrature(m, 0.0) == pytest.approx(1.0, abs=1e-6)
        assert product_moment_quadrature(m, 2.0) == pytest.approx(m.mean_power(), rel=1e-8)


def test_scaling_covariance():
    base = ProductModel.from_params(1.1, 1.2, 6.0, 1.3)
    c = 1.7
    scaled = ProductModel.from_params(1.1, 1.2, 6.0, 1.3, r_hat_x=c)
    z = np.array([0.3, 1.0, 2.5])
    lhs = product_pdf_quadrature_many(scaled, z)[0]
    rhs = product_pdf_quadrature_many(base, z / c)[0] / c
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10)


def test_fig1_variance_ladder():
    # unit-mean factors: larger mu_1, mu_2 concentrate the product around 1
    ladder = [(0.9, 0.9), (1.2, 1.3), (2.3, 2.7)]
    for kappa in (0.7, 1.5):
        var = []
        for mu1, mu2 in ladder:
            m = ProductModel(KappaMuParams.from_mean(kappa, mu1), AlphaMuParams.from_mean(2.0, mu2))
            assert product_moment_quadrature(m, 1.0) == pytest.approx(1.0, rel=1e-8)
            var.append(product_moment_quadrature(m, 2.0) - 1.0)
        assert var[0] > var[1] > var[2] > 0


# ---------------------------------------------------------------------------
# CDF


def test_cdf_limits_and_reference():
    m = ProductModel.from_params(1.1, 1.2, 6.0, 1.3)
    assert product_cdf_series(m, 50.0).value == pytest.approx(1.0, abs=1e-4)
    direct = integrate.quad(lambda t: product_pdf_quadrature(m, t), 0, 1.0, epsabs=1e-13, limit=200)[0]
    assert product_cdf_series(m, 1.0).value == pytest.approx(direct, abs=1e-6)
    assert product_cdf_quadrature(m, 1.0) == pytest.approx(direct, abs=1e-8)


def test_cdf_monotone_and_bounded():
    m = ProductModel.from_params(1.1, 1.2, 10.0, 2.7)
    z = np.linspace(0.01, 4.0, 200)
    f = product_cdf_series_many(m, z).value
    assert np.all(f >= 0) and np.all(f <= 1)
    assert np.all(np.diff(f) >= -1e-12)


def test_cdf_series_matches_quadrature():
    m = ProductModel.from_params(0.7, 2.3, 2.0, 0.9)
    z = np.array([0.2, 0.7, 1.5, 3.0])
    np.testing.assert_allclose(product_cdf_series_many(m, z).value, product_cdf_quadrature_many(m, z)[0],
                               atol=1e-8)


def test_cdf_derivative_is_pdf():
    m = ProductModel.from_params(1.5, 2.3, 6.0, 2.7)
    z = np.array([0.5, 1.0, 1.5])
    h = 1e-4 * z
    d = (product_cdf_series_many(m, z + h).value - product_cdf_series_many(m, z - h).value) / (2 * h)
    np.testing.assert_allclose(d, product_pdf_series_many(m, z).value, rtol=1e-4)


def test_nonconvergence_is_reported():
    m = ProductModel.from_params(3.0, 2.0, 2.0, 1.3).with_config(k_max=2, high_precision=False)
    with pytest.raises(NonConvergence):
        product_cdf_series(m, 1.0)
    assert not product_pdf_series_many(m, [1.0]).converged[0]


# ---------------------------------------------------------------------------
# special cases


def test_special_cases():
    y = AlphaMuParams(2.0, 1.0)
    m = special_case("rayleigh_alpha_mu", y)
    assert (m.x.kappa, m.x.mu) == (0.0, 1.0)
    # mean-one Rayleigh: the double-Rayleigh density rescaled by r_hat_x
    c = m.x.r_hat
    assert c == pytest.approx(2 / math.sqrt(math.pi), rel=1e-14)
    assert product_pdf_quadrature(m, 1.0) == pytest.approx(double_rayleigh(1.0 / c) / c, rel=1e-10)
    n = special_case("nakagami_alpha_mu", y, m=2)
    assert (n.x.kappa, n.x.mu) == (0.0, 2.0)
    rice = special_case("rice_alpha_mu", y, k=3)
    assert (rice.x.kappa, rice.x.mu) == (3.0, 1.0)
    from kmam.distributions import kappa_mu_moment

    assert kappa_mu_moment(rice.x, 1.0) == pytest.approx(1.0, rel=1e-10)
    assert special_case("one_sided_gaussian_alpha_mu", y).x.mu == 0.5
    assert set(SPECIAL_CASES) >= {"rice_alpha_mu", "rayleigh_alpha_mu", "nakagami_alpha_mu"}
    with pytest.raises(ValueError):
        special_case("rice_alpha_mu", y)
    with pytest.raises(ValueError):
        special_case("weibull", y)


# ---------------------------------------------------------------------------
# tails


def test_tail_window_bounds_mass():
    m = ProductModel.from_params(0.7, 1.1, 6.0, 0.9)
    lo, hi = w_tail_window(m, 1e-8)
    g = m.power_scale
    below = product_cdf_quadrature(m, math.sqrt(lo / g))
    above = 1 - product_cdf_quadrature(m, math.sqrt(hi / g))
    assert 0 <= below <= 1e-8 and above <= 1e-8
    assert w_log_moment(m, [0.0])[0] == pytest.approx(0.0, abs=1e-14)
