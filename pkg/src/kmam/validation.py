"""Acceptance checks shared by the ``validate`` command and the test-suite.

Each check returns a :class:`CriterionResult`; ``render_report`` turns a
list of them into the text table the CLI prints. Reports hold no timings
or other run-dependent values, so two runs with the same seed and profile
produce identical bytes.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import k0

from ._logquad import log_axis_integral
from .capacity import SnrPoint, ecc_quadrature, ecc_series, power_pdf_many
from .montecarlo import DEFAULT_SEED, McConfig, ecc_estimate_many, ks_test, sample_product, series_cdf
from .product import (
    ProductModel,
    product_cdf_quadrature_many,
    product_cdf_series_many,
    product_pdf_quadrature_many,
    product_pdf_series_many,
)
from .product.tails import w_tail_window

# ---------------------------------------------------------------------------
# parameter sets

KAPPAS = (0.0, 0.7, 1.1, 1.5)
MU_XS = (0.5, 1.0, 1.2, 2.3)
ALPHAS = (2.0, 6.0, 10.0)
MU_YS = (0.9, 1.3, 2.7)
Z_POINTS = (0.25, 0.5, 1.0, 2.0, 4.0)
ECC_DB = (-5.0, 0.0, 5.0, 10.0, 15.0)

FIG3 = ((2.0, 0.9), (6.0, 1.3), (10.0, 2.7))  # (alpha_2, mu_2) with kappa_1 = 1.1, mu_1 = 1.2
FIG45_LADDER = ((0.9, 0.9), (1.2, 1.3), (2.3, 2.7))  # (mu_1, mu_2) with alpha_2 = 2
FIG6_ALPHAS = (2.0, 4.0, 6.0)  # kappa_1 = 0.7, mu_1 = 1.1, mu_2 = 0.9


def grid_models(quick: bool = False):
    """The (kappa_1, mu_1, alpha_2, mu_2) grid, unit rms on both factors."""
    if quick:
        combos = [(0.0, 1.0, 2.0, 0.9), (0.7, 1.2, 6.0, 1.3), (1.5, 2.3, 10.0, 2.7), (1.1, 0.5, 2.0, 2.7)]
    else:
        combos = itertools.product(KAPPAS, MU_XS, ALPHAS, MU_YS)
    return [(c, ProductModel.from_params(*c)) for c in combos]


def ecc_models():
    """The capacity-figure parameter sets, keyed by a short label."""
    out = []
    for kappa, fig in ((0.7, 4), (1.5, 5)):
        for mu1, mu2 in FIG45_LADDER:
            out.append((f"fig{fig}:k={kappa},m1={mu1},m2={mu2}", ProductModel.from_params(kappa, mu1, 2.0, mu2)))
    for a in FIG6_ALPHAS:
        out.append((f"fig6:a2={a:g}", ProductModel.from_params(0.7, 1.1, a, 0.9)))
    return out


@dataclass
class CriterionResult:
    number: str
    name: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.name}: {self.detail}"


def _fmt(x: float) -> str:
    return f"{x:.3e}"


# ---------------------------------------------------------------------------
# 1. oracle triangle


def check_series_vs_quadrature(quick: bool = False) -> CriterionResult:
    """Series PDF against quadrature on the grid (1e-5, or 1e-3 when perturbed)."""
    z = np.array(Z_POINTS)
    worst, worst_pert, failures = 0.0, 0.0, []
    for combo, model in grid_models(quick):
        q = product_pdf_quadrature_many(model, z)[0]
        s = product_pdf_series_many(model, z)
        rel = np.abs(s.value / q - 1.0)
        tol = 1e-3 if s.perturbed else 1e-5
        if s.perturbed:
            worst_pert = max(worst_pert, float(rel.max()))
        else:
            worst = max(worst, float(rel.max()))
        if np.any(rel > tol) or not np.all(s.converged):
            failures.append(combo)
    detail = f"max rel err {_fmt(worst)} (clean), {_fmt(worst_pert)} (perturbed); failures {len(failures)}"
    return CriterionResult("1a", "series vs quadrature PDF", not failures, detail,
                           {"worst": worst, "worst_perturbed": worst_pert, "failures": failures})


def check_ks(seed: int = DEFAULT_SEED, n_samples: int = 1_000_000, quick: bool = False) -> CriterionResult:
    """KS test of Monte Carlo samples against the series CDF at every grid point."""
    cfg = McConfig(n_samples=n_samples, seed=seed)
    p_values, failures = [], []
    for combo, model in grid_models(quick):
        rep = ks_test(sample_product(model, cfg), series_cdf(model))
        p_values.append(rep.ks_p_value)
        if not rep.passed(0.01):
            failures.append((combo, rep.ks_p_value))
    detail = f"{len(p_values)} points, min p {min(p_values):.4f}, failures {len(failures)} (seed {seed}, n {n_samples})"
    return CriterionResult("1b", "KS of Monte Carlo vs series CDF", not failures, detail,
                           {"p_values": p_values, "failures": failures})


# ---------------------------------------------------------------------------
# 2. closed form


def check_double_rayleigh() -> CriterionResult:
    model = ProductModel.from_params(0.0, 1.0, 2.0, 1.0)
    z = np.array([0.25, 0.5, 1.0, 2.0])
    exact = 4 * z * k0(2 * z)
    s = product_pdf_series_many(model, z)
    q = product_pdf_quadrature_many(model, z)[0]
    es = float(np.max(np.abs(s.value / exact - 1)))
    eq = float(np.max(np.abs(q / exact - 1)))
    ok = es <= 1e-3 and eq <= 1e-8 and s.perturbed
    detail = f"series rel err {_fmt(es)} (perturbed={s.perturbed}), quadrature rel err {_fmt(eq)}"
    return CriterionResult("2", "double-Rayleigh closed form", ok, detail, {"series": es, "quadrature": eq})


# ---------------------------------------------------------------------------
# 3. normalization and consistency


def _z_window(model: ProductModel, eps: float, order: float = 0.0):
    lo, hi = w_tail_window(model, eps, order)
    g = model.power_scale
    return math.sqrt(lo / g), math.sqrt(hi / g)


def normalization_metrics(model: ProductModel) -> dict:
    """Deviations of the integral identities for one model."""
    fast = model.with_config(rel_tol=1e-9, abs_tol=1e-10)
    z_lo, z_hi = _z_window(model, 1e-9)
    series_mass, _ = log_axis_integral(lambda z: product_pdf_series_many(fast, z).value, z_lo, z_hi,
                                       rel_tol=1e-8, abs_tol=1e-9)
    quad_mass, _ = log_axis_integral(lambda z: product_pdf_quadrature_many(model, z)[0], z_lo, z_hi,
                                     rel_tol=1e-10, abs_tol=1e-12)
    # power density at unit average SNR: mass and mean
    lo0, hi0 = w_tail_window(model, 1e-9)
    lo1, hi1 = w_tail_window(model, 1e-9, order=1.0)
    g_lo, g_hi = min(lo0, lo1), max(hi0, hi1)
    a = 1.0 / model.mean_w()

    def power(gam):
        f = power_pdf_many(fast, gam, 1.0).value
        return np.stack([f, gam * f], axis=1)

    (p_mass, p_mean), _ = log_axis_integral(power, a * g_lo, a * g_hi, rel_tol=1e-8, abs_tol=1e-9)
    # CDF derivative at interior points, five-point central difference
    z = np.array([0.5, 1.0, 2.0])
    h = 1e-3 * z
    f = product_cdf_series_many(model, np.concatenate([z - 2 * h, z - h, z + h, z + 2 * h])).value.reshape(4, -1)
    deriv = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
    pdf = product_pdf_series_many(model, z).value
    return {
        "series_mass": abs(float(series_mass) - 1.0),
        "quadrature_mass": abs(float(quad_mass) - 1.0),
        "cdf_derivative": float(np.max(np.abs(deriv / pdf - 1.0))),
        "power_mass": abs(float(p_mass) - 1.0),
        "power_mean": abs(float(p_mean) - 1.0),
    }


NORMALIZATION_TOL = {"series_mass": 1e-5, "quadrature_mass": 1e-8, "cdf_derivative": 1e-4,
                     "power_mass": 1e-4, "power_mean": 1e-4}


def check_normalization(quick: bool = False) -> CriterionResult:
    worst = dict.fromkeys(NORMALIZATION_TOL, 0.0)
    failures = []
    for combo, model in grid_models(quick):
        m = normalization_metrics(model)
        for key, val in m.items():
            worst[key] = max(worst[key], val)
        if any(m[k] > NORMALIZATION_TOL[k] for k in m):
            failures.append(combo)
    detail = ", ".join(f"{k} {_fmt(v)}" for k, v in worst.items()) + f"; failures {len(failures)}"
    return CriterionResult("3", "normalization and consistency", not failures, detail,
                           {"worst": worst, "failures": failures})


# ---------------------------------------------------------------------------
# 4. capacity


def check_ecc(seed: int = DEFAULT_SEED, n_samples: int = 10_000_000, quick: bool = False) -> CriterionResult:
    cfg = McConfig(n_samples=n_samples, seed=seed)
    models = ecc_models()[::4] if quick else ecc_models()
    worst_z, worst_rel, mc_fail, series_fail = 0.0, 0.0, [], []
    for label, model in models:
        quad = [ecc_quadrature(model, SnrPoint(db)) for db in ECC_DB]
        est = ecc_estimate_many(model, [10 ** (db / 10) for db in ECC_DB], math.log(2.0), cfg)
        for db, q, (m, se) in zip(ECC_DB, quad, est):
            zscore = abs(m - q) / se
            worst_z = max(worst_z, zscore)
            if zscore > 3:
                mc_fail.append((label, db, zscore))
            s = ecc_series(model, SnrPoint(db))
            rel = abs(s.value / q - 1)
            worst_rel = max(worst_rel, rel)
            if rel > 1e-4:
                series_fail.append((label, db, rel))
    detail = (f"max |MC - quad| / SE {worst_z:.2f} (failures {len(mc_fail)}), "
              f"max series rel err {_fmt(worst_rel)} (failures {len(series_fail)})")
    return CriterionResult("4", "ECC agreement", not mc_fail and not series_fail, detail,
                           {"worst_z": worst_z, "worst_series": worst_rel, "mc_failures": mc_fail,
                            "series_failures": series_fail})


# ---------------------------------------------------------------------------
# 5. figure-level behavior


def check_fig3() -> CriterionResult:
    """Ordering of the three CDF curves at z = 1 and their approach to one."""
    at1, at2 = [], []
    for a, mu2 in FIG3:
        model = ProductModel.from_params(1.1, 1.2, a, mu2)
        v = product_cdf_series_many(model, [1.0, 2.0]).value
        at1.append(float(v[0]))
        at2.append(float(v[1]))
    ordered_at_1 = at1[0] > at1[1] > at1[2]
    faster = (1 - at2[0]) > (1 - at2[1]) > (1 - at2[2])
    detail = (f"F(1) = {', '.join(f'{v:.5f}' for v in at1)} (strictly ordered: {ordered_at_1}); "
              f"1 - F(2) = {', '.join(f'{1 - v:.2e}' for v in at2)} (faster approach to 1: {faster})")
    return CriterionResult("5a", "Fig. 3 CDF ordering", ordered_at_1 and faster, detail,
                           {"F1": at1, "F2": at2})


def check_fig45() -> CriterionResult:
    grid = [db for db in ECC_DB if db > 0]
    curves = {}
    for kappa in (0.7, 1.5):
        for mu1, mu2 in FIG45_LADDER:
            model = ProductModel.from_params(kappa, mu1, 2.0, mu2)
            curves[(kappa, mu1, mu2)] = np.array([ecc_quadrature(model, SnrPoint(db)) for db in grid])
    ok = True
    for kappa in (0.7, 1.5):
        ladder = [curves[(kappa, m1, m2)] for m1, m2 in FIG45_LADDER]
        ok &= all(np.all(hi > lo) for lo, hi in zip(ladder, ladder[1:]))
    for m1, m2 in FIG45_LADDER:
        ok &= bool(np.all(curves[(1.5, m1, m2)] > curves[(0.7, m1, m2)]))
    detail = "ECC increases along the (mu_1, mu_2) ladder and with kappa_1 at " + ", ".join(f"{d:g}" for d in grid) + " dB" \
        if ok else "ordering violated"
    return CriterionResult("5b", "Fig. 4/5 ECC ordering", bool(ok), detail)


def fig6_crossovers(db_grid=np.arange(-10.0, 20.01, 0.5)):
    """Sign changes of ECC(alpha_2 = 2) - ECC(alpha_2 = a) over the grid, per a."""
    curves = {a: np.array([ecc_quadrature(ProductModel.from_params(0.7, 1.1, a, 0.9), SnrPoint(db))
                           for db in db_grid]) for a in FIG6_ALPHAS}
    out = {}
    for a in FIG6_ALPHAS[1:]:
        diff = curves[FIG6_ALPHAS[0]] - curves[a]
        idx = np.flatnonzero(np.sign(diff[1:]) != np.sign(diff[:-1]))
        out[a] = [float(db_grid[i] - diff[i] * (db_grid[i + 1] - db_grid[i]) / (diff[i + 1] - diff[i])) for i in idx]
    return out, curves


def check_fig6(quick: bool = False) -> CriterionResult:
    grid = np.arange(-10.0, 20.01, 2.5) if quick else np.arange(-10.0, 20.01, 0.5)
    cross, curves = fig6_crossovers(grid)
    ok = all(len(c) == 1 and 0.0 < c[0] < 5.0 for c in cross.values())
    parts = []
    for a, c in cross.items():
        parts.append(f"alpha_2 = 2 vs {a:g}: " + (", ".join(f"{v:.2f} dB" for v in c) if c else "no crossover"))
    low = "lower alpha_2 larger at -10 dB" if curves[2.0][0] > curves[6.0][0] else "higher alpha_2 larger at -10 dB"
    return CriterionResult("5c", "Fig. 6 crossover in (0, 5) dB", ok, "; ".join(parts) + f"; {low}",
                           {"crossovers": cross})


# ---------------------------------------------------------------------------
# 6. Jensen bound


def check_jensen(quick: bool = False) -> CriterionResult:
    """Capacity strictly below the AWGN value at equal average SNR, for every model."""
    worst, failures = -math.inf, []
    models = ecc_models() + [(str(c), m) for c, m in grid_models(quick)]
    for label, model in models:
        for db in ECC_DB:
            # the bound's slack is tens of percent, so a loose tolerance suffices
            c = ecc_quadrature(model, SnrPoint(db), rel_tol=1e-6)
            bound = math.log1p(10 ** (db / 10))  # (B / ln 2) ln(1 + gamma_bar) with B = ln 2
            worst = max(worst, c / bound)
            if not c < bound:
                failures.append((label, db))
    return CriterionResult("6", "Jensen bound", not failures,
                           f"{len(models)} models x {len(ECC_DB)} SNRs, max C / ((B / ln 2) ln(1 + gamma_bar)) = {worst:.6f}; "
                           f"failures {len(failures)}", {"worst_ratio": worst})


# ---------------------------------------------------------------------------
# report


def run_all(seed: int = DEFAULT_SEED, quick: bool = False) -> list[CriterionResult]:
    n1 = 100_000 if quick else 1_000_000
    n4 = 1_000_000 if quick else 10_000_000
    return [
        check_series_vs_quadrature(quick),
        check_ks(seed, n1, quick),
        check_double_rayleigh(),
        check_normalization(quick),
        check_ecc(seed, n4, quick),
        check_fig3(),
        check_fig45(),
        check_fig6(quick),
        check_jensen(quick),
    ]


def render_report(results: list[CriterionResult], fmt: str = "text", seed: int | None = None,
                  quick: bool = False) -> str:
    if fmt == "json":
        payload = {"seed": seed, "quick": quick,
                   "criteria": [{"number": r.number, "name": r.name, "passed": r.passed, "detail": r.detail}
                                for r in results]}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    lines = [f"acceptance report (seed {seed}, profile {'quick' if quick else 'full'})"]
    lines += [r.line() for r in results]
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} passed")
    return "\n".join(lines) + "\n"


__all__ = ["CriterionResult", "run_all", "render_report", "grid_models", "ecc_models", "asdict"]
