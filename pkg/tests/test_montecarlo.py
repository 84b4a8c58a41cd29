import math

import numpy as np
import pytest
from scipy import stats

from kmam.capacity import LN2, SnrPoint, ecc_quadrature
from kmam.errors import MonotonicityError
from kmam.montecarlo import (
    DEFAULT_SEED,
    McConfig,
    ecc_estimate,
    ecc_estimate_many,
    histogram_chi2,
    ks_test,
    quadrature_cdf,
    sample_product,
    series_cdf,
    stream_generators,
)
from kmam.product import ProductModel, product_cdf_quadrature_many

FIG6 = ProductModel.from_params(0.7, 1.1, 6.0, 0.9)


def test_config_validation():
    assert McConfig().seed == DEFAULT_SEED
    with pytest.raises(ValueError):
        McConfig(n_samples=10)
    with pytest.raises(ValueError):
        McConfig(streams=0)
    with pytest.raises(ValueError):
        McConfig(seed=-1)
    assert McConfig().with_seed(5).seed == 5


def test_sampling_is_deterministic():
    cfg = McConfig(n_samples=50_001, seed=11, streams=3)
    a = sample_product(FIG6, cfg)
    b = sample_product(FIG6, cfg)
    assert a.size == 50_001
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_product(FIG6, cfg.with_seed(12)))
    assert np.all(a > 0)


def test_streams_are_independent():
    (x0, y0), (x1, _) = stream_generators(McConfig(seed=3, streams=2))
    u = x0.random(10_000)
    assert abs(np.corrcoef(u, y0.random(10_000))[0, 1]) < 0.05
    assert abs(np.corrcoef(u, x1.random(10_000))[0, 1]) < 0.05


def test_double_rayleigh_power_factorizes():
    m = ProductModel.from_params(0.0, 1.0, 2.0, 1.0)
    z2 = sample_product(m, McConfig(n_samples=1_000_000)) ** 2
    assert abs(z2.mean() - 1.0) < 3 * z2.std() / math.sqrt(z2.size)


def test_ks_against_series_cdf():
    m = ProductModel.from_params(1.1, 1.2, 2.0, 1.3)
    rep = ks_test(sample_product(m, McConfig()), series_cdf(m))
    assert rep.passed() and rep.n == 1_000_000


def test_series_cdf_interpolant_matches_quadrature():
    m = ProductModel.from_params(1.1, 1.2, 10.0, 2.7)
    z = np.linspace(0.05, 2.5, 97)
    np.testing.assert_allclose(series_cdf(m)(z), product_cdf_quadrature_many(m, z)[0], atol=5e-7)
    np.testing.assert_allclose(quadrature_cdf(m)(z), product_cdf_quadrature_many(m, z)[0], atol=5e-7)


def test_ks_null_distribution():
    # Rayleigh samples against the exact Rayleigh CDF
    cdf = lambda r: -np.expm1(-r * r)  # noqa: E731
    passes = 0
    for seed in range(100):
        r = np.sqrt(np.random.default_rng(seed).exponential(size=10_000))
        passes += ks_test(r, cdf).passed()
    assert passes >= 98


def test_ks_rejects_gross_mismatch():
    r = np.sqrt(np.random.default_rng(0).exponential(size=100_000))
    assert ks_test(r, lambda x: -np.expm1(-x)).ks_p_value < 1e-6


def test_ks_rejects_non_monotone_cdf():
    x = np.random.default_rng(1).random(1000)
    with pytest.raises(MonotonicityError):
        ks_test(x, lambda t: np.sin(10 * t))
    with pytest.raises(ValueError):
        ks_test(x[:10], lambda t: t)


def test_ecc_estimate_zero_snr():
    assert ecc_estimate(FIG6, 0.0, LN2, McConfig()) == (0.0, 0.0)
    with pytest.raises(ValueError):
        ecc_estimate(FIG6, -1.0, LN2, McConfig())


def test_ecc_estimate_brackets_quadrature():
    q = ecc_quadrature(FIG6, SnrPoint(10.0))
    est, se = ecc_estimate(FIG6, 10.0, LN2, McConfig(n_samples=10_000_000))
    assert abs(est - q) < 3 * se


def test_ecc_estimate_many_matches_single():
    cfg = McConfig(n_samples=100_000)
    many = ecc_estimate_many(FIG6, [0.0, 1.0, 10.0], LN2, cfg)
    assert many[0] == (0.0, 0.0)
    assert many[2] == ecc_estimate(FIG6, 10.0, LN2, cfg)


def test_standard_error_is_honest():
    q = ecc_quadrature(FIG6, SnrPoint(5.0))
    hits = 0
    for seed in range(100):
        est, se = ecc_estimate(FIG6, 10 ** 0.5, LN2, McConfig(n_samples=20_000, seed=seed))
        hits += abs(est - q) <= 2 * se
    assert hits >= 90


def test_concentration_approaches_awgn():
    gamma_bar = 10.0
    bound = math.log1p(gamma_bar)  # (B / ln 2) ln(1 + gamma_bar) at B = ln 2
    gaps = []
    for mu in (1.0, 10.0, 100.0):
        m = ProductModel.from_params(0.0, mu, 2.0, mu)
        est, _ = ecc_estimate(m, gamma_bar, LN2, McConfig(n_samples=200_000))
        gaps.append(bound - est)
    assert gaps[0] > gaps[1] > gaps[2] > 0
    assert gaps[2] < 0.01 * bound


@pytest.mark.parametrize("params", [(1.1, 1.2, 2.0, 1.3), (0.0, 0.5, 10.0, 0.9), (1.5, 2.3, 6.0, 2.7)])
def test_histogram_consistency(params):
    m = ProductModel.from_params(*params)
    chi2, dof, p = histogram_chi2(sample_product(m, McConfig()), m)
    assert dof > 50
    assert p > 0.01


def test_ks_statistic_matches_scipy():
    m = ProductModel.from_params(0.7, 1.1, 2.0, 0.9)
    z = sample_product(m, McConfig(n_samples=20_000, seed=5))
    cdf = quadrature_cdf(m)
    ours = ks_test(z, cdf)
    ref = stats.kstest(z, cdf)
    assert ours.ks_statistic == pytest.approx(ref.statistic, rel=1e-12)
