"""Acceptance gate: one PASS/FAIL line per criterion (see the terminal summary).

Tolerances are the pinned acceptance values; runtime budgets are asserted
here and kept out of the reports, which must be byte-reproducible.
"""
import time

import pytest

from kmam import cli, validation
from kmam.montecarlo import DEFAULT_SEED


def timed(fn, *args, **kwargs):
    t = time.perf_counter()
    result = fn(*args, **kwargs)
    return result, time.perf_counter() - t


def test_criterion_1_oracle_triangle(record_criterion):
    series, t1 = timed(validation.check_series_vs_quadrature)
    ks, t2 = timed(validation.check_ks, DEFAULT_SEED, 1_000_000)
    record_criterion(series)
    record_criterion(ks)
    assert series.passed and ks.passed
    assert len(ks.metrics["p_values"]) == 144
    assert t1 + t2 < 600


def test_criterion_2_double_rayleigh(record_criterion):
    res = validation.check_double_rayleigh()
    record_criterion(res)
    assert res.passed


def test_criterion_3_normalization(record_criterion):
    res = validation.check_normalization()
    record_criterion(res)
    assert res.passed


def test_criterion_4_ecc_agreement(record_criterion):
    res, seconds = timed(validation.check_ecc, DEFAULT_SEED, 10_000_000)
    record_criterion(res)
    assert res.passed
    assert seconds < 300


def test_criterion_5a_fig3(record_criterion):
    res = validation.check_fig3()
    record_criterion(res)
    assert res.passed


def test_criterion_5b_fig45(record_criterion):
    res = validation.check_fig45()
    record_criterion(res)
    assert res.passed


@pytest.mark.xfail(strict=True, reason="crossover not reproducible under the normalized SNR; see decisions ledger")
def test_criterion_5c_fig6(record_criterion):
    res = validation.check_fig6()
    record_criterion(res)
    assert res.passed


def test_criterion_6_jensen(record_criterion):
    res = validation.check_jensen()
    record_criterion(res)
    assert res.passed


def test_criterion_7_determinism(tmp_path, record_criterion):
    reports = []
    for name in ("first.txt", "second.txt"):
        path = tmp_path / name
        cli.main(["validate", "--quick", "--seed", str(DEFAULT_SEED), "-o", str(path)])
        reports.append(path.read_bytes())
    same = reports[0] == reports[1]
    record_criterion(validation.CriterionResult(
        "7", "determinism", same,
        f"two quick validate runs with seed {DEFAULT_SEED}: {'byte-identical' if same else 'differ'} "
        f"({len(reports[0])} bytes)"))
    assert same
