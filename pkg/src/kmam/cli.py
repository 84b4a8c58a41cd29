"""Command-line front end: curves, figure data sets and the validation suite.

Examples::

    kmam pdf --kappa1 0 --mu1 1 --alpha2 2 --mu2 1 --start 0.25 --stop 2 --count 8
    kmam ecc --kappa1 0.7 --mu1 1.1 --alpha2 6 --mu2 0.9 --start -10 --stop 20 --count 31 --format json
    kmam figure 3 --outdir fig3
    kmam validate --seed 12345

Every flag can also come from a flat ``key = value`` file given with
``--config`` (keys are flag names without the dashes, ``-`` or ``_``);
flags on the command line win. ``KMAM_SEED`` sets the default seed.

Exit codes: 0 success, 1 a validation criterion failed, 2 invalid input,
3 numerical failure (the failing grid point is reported on stderr).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .capacity import LN2, SnrPoint, ecc_quadrature_detail, ecc_series
from .distributions import AlphaMuParams, KappaMuParams
from .errors import NonConvergence, PoleError, QuadratureError
from .montecarlo import DEFAULT_SEED, McConfig, ecc_estimate_many, sample_product
from .product import (
    ProductModel,
    SeriesConfig,
    product_cdf_quadrature_many,
    product_cdf_series_many,
    product_pdf_quadrature_many,
    product_pdf_series_many,
)

CSV_HEADER = ["abscissa", "value", "method", "terms_used", "perturbed", "trunc_est"]
SEED_ENV = "KMAM_SEED"


class SpecError(ValueError):
    """Invalid run specification (exit code 2)."""


class NumericalFailure(RuntimeError):
    """A grid point could not be evaluated (exit code 3)."""

    def __init__(self, abscissa: float, cause: str):
        super().__init__(f"numerical failure at abscissa={abscissa!r}: {cause}")
        self.abscissa = abscissa


@dataclass(frozen=True)
class Row:
    abscissa: float
    value: float
    method: str
    terms_used: int
    perturbed: bool
    trunc_est: float

    def csv_fields(self) -> list[str]:
        return [repr(self.abscissa), repr(self.value), self.method, str(self.terms_used),
                "true" if self.perturbed else "false", repr(self.trunc_est)]


@dataclass
class CurveSpec:
    """One curve: the model, its grid, and how to evaluate it."""

    quantity: str  # pdf | cdf | ecc
    kappa1: float
    mu1: float
    alpha2: float
    mu2: float
    r_hat1: float | None = 1.0
    r_bar1: float | None = None
    r_hat2: float | None = 1.0
    r_bar2: float | None = None
    start: float = 0.05
    stop: float = 3.0
    count: int = 60
    scale: str = "linear"
    method: str = "series"
    bandwidth: float = LN2
    seed: int = DEFAULT_SEED
    n_samples: int = 1_000_000
    streams: int = 4
    k_max: int = 200
    rel_tol: float = 1e-10
    split: float = 1.0
    workers: int = 1
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.quantity not in ("pdf", "cdf", "ecc"):
            raise SpecError(f"unknown quantity {self.quantity!r}")
        if self.method not in ("series", "quadrature", "monte_carlo"):
            raise SpecError(f"unknown method {self.method!r}")
        if self.scale not in ("linear", "db"):
            raise SpecError("scale must be 'linear' or 'db'")
        if self.quantity != "ecc" and self.scale == "db":
            raise SpecError("the dB scale applies to the ecc command only")
        if self.count < 2:
            raise SpecError("grid count must be at least 2")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)) or self.stop <= self.start:
            raise SpecError("grid needs finite start < stop")
        if self.quantity != "ecc" or self.scale == "linear":
            if self.start < 0 or (self.quantity != "ecc" and self.start <= 0):
                raise SpecError("linear grid values must be positive")
        for i in (1, 2):
            hat, bar = getattr(self, f"r_hat{i}"), getattr(self, f"r_bar{i}")
            if (hat is None) == (bar is None):
                raise SpecError(f"give exactly one of r_hat{i} / r_bar{i}")
        if not self.bandwidth > 0:
            raise SpecError("bandwidth must be positive")
        if self.workers < 1:
            raise SpecError("workers must be positive")
        try:
            self.model()
            if self.method == "monte_carlo":
                self.mc_config()
        except ValueError as exc:
            raise SpecError(str(exc)) from exc

    def model(self) -> ProductModel:
        x = (KappaMuParams(self.kappa1, self.mu1, self.r_hat1) if self.r_bar1 is None
             else KappaMuParams.from_mean(self.kappa1, self.mu1, self.r_bar1))
        y = (AlphaMuParams(self.alpha2, self.mu2, self.r_hat2) if self.r_bar2 is None
             else AlphaMuParams.from_mean(self.alpha2, self.mu2, self.r_bar2))
        cfg = SeriesConfig(k_max=self.k_max, rel_tol=self.rel_tol)
        return ProductModel(x, y, series_cfg=cfg)

    def mc_config(self) -> McConfig:
        return McConfig(n_samples=self.n_samples, seed=self.seed, streams=self.streams)

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


# ---------------------------------------------------------------------------
# evaluation


def _series_rows(batch, grid, method) -> list[Row]:
    rows = []
    for i, x in enumerate(grid):
        if not batch.converged[i] or not math.isfinite(batch.value[i]):
            raise NumericalFailure(float(x), f"series did not converge (estimate {batch.error[i]!r})")
        rows.append(Row(float(x), float(batch.value[i]), method, int(batch.terms[i]),
                        bool(batch.perturbed), float(batch.error[i])))
    return rows


def _map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))  # map keeps grid order
    return [fn(x) for x in items]


def evaluate(spec: CurveSpec) -> list[Row]:
    """Rows for every grid point of one curve."""
    model = spec.model()
    grid = spec.grid()
    q, m = spec.quantity, spec.method
    try:
        if q in ("pdf", "cdf"):
            if m == "series":
                fn = product_pdf_series_many if q == "pdf" else product_cdf_series_many
                return _series_rows(fn(model, grid), grid, m)
            if m == "quadrature":
                fn = product_pdf_quadrature_many if q == "pdf" else product_cdf_quadrature_many
                vals, errs = fn(model, grid)
                return [Row(float(x), float(v), m, 0, False, float(e)) for x, v, e in zip(grid, vals, errs)]
            return _mc_rows(spec, model, grid)
        # ecc
        gammas = 10 ** (grid / 10) if spec.scale == "db" else grid
        if m == "monte_carlo":
            est = ecc_estimate_many(model, gammas, spec.bandwidth, spec.mc_config())
            return [Row(float(x), v, m, spec.n_samples, False, se) for x, (v, se) in zip(grid, est)]

        def point(args):
            x, gb = args
            if gb == 0:
                return Row(float(x), 0.0, m, 0, False, 0.0)
            p = SnrPoint.from_linear(float(gb), spec.bandwidth)
            try:
                res = ecc_series(model, p, spec.split) if m == "series" else ecc_quadrature_detail(model, p)
            except (NonConvergence, PoleError, QuadratureError, ArithmeticError) as exc:
                raise NumericalFailure(float(x), f"{type(exc).__name__}: {exc}") from exc
            if not res.converged:
                raise NumericalFailure(float(x), f"series did not converge (estimate {res.truncation_estimate!r})")
            return Row(float(x), float(res.value), m, int(res.terms_used), bool(res.perturbed),
                       float(res.truncation_estimate))

        return _map(point, list(zip(grid, gammas)), spec.workers)
    except NumericalFailure:
        raise
    except (NonConvergence, PoleError, QuadratureError, ArithmeticError) as exc:
        raise NumericalFailure(float(grid[0]), f"{type(exc).__name__}: {exc}") from exc


def _mc_rows(spec: CurveSpec, model: ProductModel, grid) -> list[Row]:
    """Empirical CDF, or a centred relative-width bin for the density."""
    z = np.sort(sample_product(model, spec.mc_config()))
    n = z.size
    rows = []
    for x in grid:
        if spec.quantity == "cdf":
            f = np.searchsorted(z, x, side="right") / n
            se = math.sqrt(f * (1 - f) / n)
        else:
            h = 0.02 * x
            c = np.searchsorted(z, x + h, side="right") - np.searchsorted(z, x - h, side="left")
            f = c / (n * 2 * h)
            se = math.sqrt(c) / (n * 2 * h)
        rows.append(Row(float(x), float(f), "monte_carlo", n, False, float(se)))
    return rows


# ---------------------------------------------------------------------------
# output


def render_csv(rows: list[Row]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def render_json(spec: CurveSpec, rows: list[Row]) -> str:
    model = spec.model()
    payload = {
        "spec": {k: v for k, v in asdict(spec).items() if k != "extra"} | spec.extra,
        "rows": [asdict(r) for r in rows],
        "diagnostics": {
            "exponent": [model.exponent.p, model.exponent.q],
            "mean_power": model.mean_power(),
            "any_perturbed": any(r.perturbed for r in rows),
            "max_trunc_est": max(r.trunc_est for r in rows),
        },
    }
    return json.dumps(payload, indent=2) + "\n"


def _emit(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# figures


def figure_curves(number: int) -> tuple[str, list[dict], dict]:
    """(quantity, per-curve parameter dicts, grid) for figure 1..6.

    Values stated in the captions are fixed; where a caption leaves the
    parameter ladder open, the ladder below is used and recorded in the
    manifest.
    """
    ladder = [(0.9, 0.9), (1.2, 1.3), (2.3, 2.7)]
    z_grid = {"start": 0.02, "stop": 3.0, "count": 150, "scale": "linear"}
    snr_grid = {"start": -10.0, "stop": 20.0, "count": 31, "scale": "db"}
    if number == 1:
        curves = [dict(kappa1=k, mu1=m1, alpha2=2.0, mu2=m2) for k in (0.7, 1.5) for m1, m2 in ladder]
        return "pdf", curves, z_grid
    if number == 2:
        curves = [dict(kappa1=1.1, mu1=1.2, alpha2=a, mu2=m2) for a in (2.0, 6.0, 10.0) for m2 in (0.9, 1.3, 2.7)]
        return "pdf", curves, z_grid
    if number == 3:
        curves = [dict(kappa1=1.1, mu1=1.2, alpha2=a, mu2=m2) for a, m2 in ((2.0, 0.9), (6.0, 1.3), (10.0, 2.7))]
        return "cdf", curves, z_grid
    if number in (4, 5):
        k = 0.7 if number == 4 else 1.5
        return "ecc", [dict(kappa1=k, mu1=m1, alpha2=2.0, mu2=m2) for m1, m2 in ladder], snr_grid
    if number == 6:
        return "ecc", [dict(kappa1=0.7, mu1=1.1, alpha2=a, mu2=0.9) for a in (2.0, 4.0, 6.0)], snr_grid
    raise SpecError("figure number must be 1..6")


def _override(curves: list[dict], key: str, raw: str | None):
    if raw is None:
        return
    vals = [float(v) for v in str(raw).split(",")]
    if len(vals) == 1:
        vals = vals * len(curves)
    if len(vals) != len(curves):
        raise SpecError(f"--{key} needs 1 or {len(curves)} values")
    for c, v in zip(curves, vals):
        c[key] = v


def run_figure(args) -> int:
    quantity, curves, grid = figure_curves(args.number)
    for key in ("kappa1", "mu1", "alpha2", "mu2", "r_hat1", "r_bar1", "r_hat2", "r_bar2"):
        _override(curves, key, getattr(args, key))
    for key in ("start", "stop", "count", "scale"):
        if getattr(args, key) is not None:
            grid[key] = getattr(args, key)
    method = args.method or ("quadrature" if quantity == "ecc" else "series")
    outdir = Path(args.outdir or f"figure{args.number}")
    fmt = args.format
    manifest = {"figure": args.number, "quantity": quantity, "method": method, "grid": grid, "curves": []}
    specs = []
    for i, c in enumerate(curves):
        for f in (1, 2):
            if c.get(f"r_bar{f}") is not None:
                c[f"r_hat{f}"] = None
        spec = CurveSpec(quantity=quantity, method=method, **_common(args), **grid, **c)
        spec.validate()
        specs.append(spec)
    for i, spec in enumerate(specs):
        rows = evaluate(spec)
        name = f"curve_{i + 1:02d}.{fmt}"
        _emit(render_csv(rows) if fmt == "csv" else render_json(spec, rows), str(outdir / name))
        entry = {k: getattr(spec, k) for k in ("kappa1", "mu1", "alpha2", "mu2", "r_hat1", "r_bar1",
                                              "r_hat2", "r_bar2")}
        entry["file"] = name
        manifest["curves"].append(entry)
    manifest["seed"] = specs[0].seed
    manifest["bandwidth"] = specs[0].bandwidth
    _emit(json.dumps(manifest, indent=2) + "\n", str(outdir / "manifest.json"))
    return 0


# ---------------------------------------------------------------------------
# argument handling


def _common(args) -> dict:
    out = {}
    for key in ("bandwidth", "seed", "n_samples", "streams", "k_max", "rel_tol", "split", "workers"):
        v = getattr(args, key, None)
        if v is not None:
            out[key] = v
    return out


def _bandwidth(text: str) -> float:
    return LN2 if str(text).strip().lower() in ("ln2", "ln 2") else float(text)


def _add_model_flags(p, required: bool):
    num = float if required else str
    p.add_argument("--kappa1", type=num, required=required, help="kappa of the kappa-mu factor")
    p.add_argument("--mu1", type=num, required=required, help="mu of the kappa-mu factor")
    p.add_argument("--alpha2", type=num, required=required, help="alpha of the alpha-mu factor")
    p.add_argument("--mu2", type=num, required=required, help="mu of the alpha-mu factor")
    for i in (1, 2):
        p.add_argument(f"--r-hat{i}", dest=f"r_hat{i}", type=num, help=f"rms value of factor {i} (default 1)")
        p.add_argument(f"--r-bar{i}", dest=f"r_bar{i}", type=num, help=f"mean envelope of factor {i}")


def _add_grid_flags(p, defaults: bool):
    p.add_argument("--start", type=float, help="first grid value (z, or SNR for ecc)")
    p.add_argument("--stop", type=float, help="last grid value")
    p.add_argument("--count", type=int, help="number of grid points")
    p.add_argument("--scale", choices=("linear", "db"), help="SNR grid units for ecc")


def _add_run_flags(p):
    p.add_argument("--method", choices=("series", "quadrature", "monte_carlo"),
                   help="evaluation engine (series for pdf/cdf, quadrature for ecc)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--bandwidth", type=_bandwidth, help="B in Hz, or 'ln2' (default)")
    p.add_argument("--seed", type=int, help="Monte Carlo seed (env KMAM_SEED, default 12345)")
    p.add_argument("--n-samples", dest="n_samples", type=int, help="Monte Carlo sample count")
    p.add_argument("--streams", type=int, help="independent random streams")
    p.add_argument("--k-max", dest="k_max", type=int, help="outer series truncation cap")
    p.add_argument("--rel-tol", dest="rel_tol", type=float, help="series relative tolerance")
    p.add_argument("--split", type=float, help="Taylor split point in (0, 1] for the ecc series")
    p.add_argument("--workers", type=int, help="threads for grid evaluation")
    p.add_argument("--config", help="flat key = value file with defaults for any flag")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kmam", description="kappa-mu / alpha-mu product fading toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, what in (("pdf", "envelope density"), ("cdf", "envelope CDF"), ("ecc", "ergodic capacity")):
        p = sub.add_parser(name, help=f"{what} curve")
        _add_model_flags(p, required=False)
        _add_grid_flags(p, True)
        _add_run_flags(p)
        p.add_argument("--output", "-o", help="output file (default stdout)")
    p = sub.add_parser("figure", help="data files for one of the six figures")
    p.add_argument("number", type=int, help="figure number, 1-6")
    _add_model_flags(p, required=False)
    _add_grid_flags(p, False)
    _add_run_flags(p)
    p.add_argument("--outdir", help="output directory (default figureN)")
    p = sub.add_parser("validate", help="run the acceptance checks and print a pass/fail table")
    p.add_argument("--seed", type=int)
    p.add_argument("--quick", action="store_true", help="reduced grid and sample sizes")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--output", "-o", help="output file (default stdout)")
    p.add_argument("--config", help="flat key = value file with defaults for any flag")
    return parser


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SpecError(f"{path}:{n}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        known = vars(args)
        unknown = set(cfg) - set(known)
        if unknown:
            raise SpecError(f"unknown config keys: {', '.join(sorted(unknown))}")
        # re-parse with the file as defaults so that flags still win
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
        for action in sub._actions:
            value = getattr(args, action.dest, None)
            if isinstance(value, str) and action.type is not None and action.dest in cfg:
                setattr(args, action.dest, action.type(value))
    if getattr(args, "seed", None) is None:
        env = os.environ.get(SEED_ENV)
        try:
            args.seed = int(env) if env else DEFAULT_SEED
        except ValueError as exc:
            raise SpecError(f"{SEED_ENV} must be an integer") from exc
    return args


def run_curve(args) -> int:
    defaults = {"pdf": {}, "cdf": {}, "ecc": {"start": -10.0, "stop": 20.0, "count": 31, "scale": "db"}}
    fields = {}
    for key in ("kappa1", "mu1", "alpha2", "mu2"):
        v = getattr(args, key)
        if v is None:
            raise SpecError(f"--{key} is required")
        fields[key] = float(v)
    for i in (1, 2):
        hat, bar = getattr(args, f"r_hat{i}"), getattr(args, f"r_bar{i}")
        if hat is not None and bar is not None:
            raise SpecError(f"give only one of --r-hat{i} / --r-bar{i}")
        fields[f"r_hat{i}"] = None if bar is not None else float(hat if hat is not None else 1.0)
        fields[f"r_bar{i}"] = None if bar is None else float(bar)
    grid = dict(defaults[args.command])
    for key in ("start", "stop", "count", "scale"):
        if getattr(args, key) is not None:
            grid[key] = getattr(args, key)
    method = args.method or ("quadrature" if args.command == "ecc" else "series")
    spec = CurveSpec(quantity=args.command, method=method, **grid, **fields, **_common(args))
    spec.validate()
    rows = evaluate(spec)
    _emit(render_csv(rows) if args.format == "csv" else render_json(spec, rows), args.output)
    return 0


def run_validate(args) -> int:
    from .validation import render_report, run_all

    results = run_all(seed=args.seed, quick=args.quick)
    _emit(render_report(results, args.format, seed=args.seed, quick=args.quick), args.output)
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        if args.command == "validate":
            return run_validate(args)
        if args.command == "figure":
            return run_figure(args)
        return run_curve(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
