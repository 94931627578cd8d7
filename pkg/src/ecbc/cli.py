"""Command-line front door: fit, eval, curve, simulate.

Emits plot-ready CSV/JSON only (no rendering). All numbers are printed
with 12 significant digits; exit code 0 on success, 2 on validation
errors, 1 on internal errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .bernstein import select_degrees
from .conditional import (
    cond_copula_derivative,
    conditional_copula_cdf,
    conditional_copula_grid,
    fit_conditional_copula,
    load_fit,
    save_fit,
)
from .data import count_tie_groups, empirical_cdf_at, empirical_quantile, load_dataset
from .depmeasures import dependence_curve, kendall_tau, spearman_rho
from .errors import EcbcError, TiesWarning, ValidationError
from .simbench import load_scenario, performance_metrics, simulate_replicates, true_tau_curve

__all__ = ["main", "build_parser"]


def _fmt(value: float) -> str:
    return f"{float(value):.12g}"


def _parse_degrees(spec: str, n: int, seed: int):
    if spec == "plugin":
        return select_degrees(n, policy="plugin", seed=seed)
    if spec.startswith("prior:"):
        try:
            draws = int(spec.split(":", 1)[1])
        except ValueError:
            raise ValidationError(f"bad prior draw count in {spec!r}") from None
        return select_degrees(n, policy="prior-sample", seed=seed, draws=draws)
    try:
        l1, l2, m = (int(tok) for tok in spec.split(","))
    except ValueError:
        raise ValidationError(
            f"bad degrees {spec!r}; expected plugin, l1,l2,m, or prior:K"
        ) from None
    return select_degrees(n, policy="fixed", seed=seed, degrees=(l1, l2, m))


def _parse_grid(spec: str) -> np.ndarray:
    """Comma list ``a,b,c`` or inclusive range ``lo:hi:count``."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValidationError(f"bad grid {spec!r}; expected lo:hi:count")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1 or not lo <= hi:
            raise ValidationError(f"bad grid range {spec!r}")
        return np.linspace(lo, hi, count)
    try:
        return np.asarray([float(tok) for tok in spec.split(",")], dtype=float)
    except ValueError:
        raise ValidationError(f"bad grid {spec!r}") from None


def _covariate_level(fit, args) -> float:
    if args.v is not None:
        if not 0.0 <= args.v <= 1.0:
            raise ValidationError(f"--v must lie in [0, 1], got {args.v}")
        return args.v
    if args.x is None:
        raise ValidationError("provide --x (raw covariate) or --v (quantile level)")
    return float(empirical_cdf_at(fit.covariate_sample, args.x))


def cmd_fit(args) -> int:
    cols = [tok.strip() for tok in args.cols.split(",")]
    if len(cols) != 3:
        raise ValidationError(f"--cols needs 3 names, got {args.cols!r}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TiesWarning)
        dataset, dropped = load_dataset(
            args.input, cols, log10_columns=tuple(args.log10), delimiter=args.delimiter
        )
        degrees = _parse_degrees(args.degrees, dataset.n, args.seed)
        fit = fit_conditional_copula(dataset, degrees)
    save_fit(fit, args.out)
    ties = {
        name: count_tie_groups(col)
        for name, col in zip(cols, dataset.columns())
    }
    print(f"fitted n={dataset.n} observations ({dropped} rows dropped)")
    print(f"degrees: l1={degrees.l1} l2={degrees.l2} m={degrees.m} policy={degrees.policy}")
    tie_msg = ", ".join(f"{k}: {c}" for k, c in ties.items() if c) or "none"
    print(f"tie groups: {tie_msg}")
    print(f"fit written to {args.out}")
    return 0


def cmd_eval(args) -> int:
    fit = load_fit(args.fit)
    v = _covariate_level(fit, args)
    if args.grid is not None:
        size = int(args.grid)
        if size < 1:
            raise ValidationError(f"--grid must be positive, got {args.grid}")
        pts = np.arange(1, size + 1) / (size + 1)
        surface = conditional_copula_grid(fit, pts, pts, v, tol=args.tol)
        out = args.out or "copula_grid.csv"
        with open(out, "w", encoding="utf-8") as fh:
            fh.write("u1,u2,value\n")
            for i, u1 in enumerate(pts):
                for j, u2 in enumerate(pts):
                    fh.write(f"{_fmt(u1)},{_fmt(u2)},{_fmt(surface[i, j])}\n")
        print(f"{size}x{size} grid at v={_fmt(v)} written to {out}")
        return 0
    if args.u1 is None or args.u2 is None:
        raise ValidationError("provide --u1 and --u2 (or --grid N)")
    if args.raw_derivative:
        value = cond_copula_derivative(fit, args.u1, args.u2, v)
    else:
        value = conditional_copula_cdf(fit, args.u1, args.u2, v, tol=args.tol)
    print(_fmt(value))
    return 0


def cmd_curve(args) -> int:
    fits = [load_fit(p) for p in args.fit]
    base = fits[0]
    grid = _parse_grid(args.grid)
    if args.use_v:
        v_grid = grid
    else:
        v_grid = np.asarray(empirical_cdf_at(base.covariate_sample, grid), dtype=float)
    if (np.diff(v_grid) <= 0).any():
        raise ValidationError("grid must map to strictly increasing quantile levels")
    v_grid = np.clip(v_grid, 1e-9, 1 - 1e-9)

    curves = [dependence_curve(f, v_grid) for f in fits]
    x_col = grid if not args.use_v else np.asarray(
        empirical_quantile(base.covariate_sample, v_grid), dtype=float
    )
    taus = np.vstack([c.tau for c in curves])
    rhos = np.vstack([c.rho for c in curves])

    rows = []
    for i, v in enumerate(v_grid):
        row = {"x": float(x_col[i]), "v": float(v)}
        if len(fits) == 1:
            row.update(tau=float(taus[0, i]), rho=float(rhos[0, i]))
        else:
            row.update(
                tau=float(taus[:, i].mean()),
                tau_lo=float(np.percentile(taus[:, i], 5)),
                tau_hi=float(np.percentile(taus[:, i], 95)),
                rho=float(rhos[:, i].mean()),
                rho_lo=float(np.percentile(rhos[:, i], 5)),
                rho_hi=float(np.percentile(rhos[:, i], 95)),
            )
        rows.append(row)

    if args.format == "json":
        text = json.dumps(rows, indent=2)
    else:
        header = list(rows[0].keys())
        lines = [",".join(header)]
        lines += [",".join(_fmt(r[k]) for k in header) for r in rows]
        text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"curve written to {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_simulate(args) -> int:
    model, grid, policy = load_scenario(args.scenario)
    degrees = (
        select_degrees(model.n, policy="plugin", seed=model.seed)
        if policy == "plugin"
        else _parse_degrees(policy, model.n, model.seed)
    )
    result = simulate_replicates(model, v_grid=grid, degrees=degrees, workers=args.workers)
    truth = true_tau_curve(model, grid)
    bench = performance_metrics(result.taus, truth, model.range_length, grid)

    prefix = Path(args.out)
    metrics_path = prefix.with_suffix(".metrics.json")
    bands_path = prefix.with_suffix(".bands.csv")
    payload = bench.to_dict()
    payload["failures"] = list(result.failures)
    metrics_path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    lo, hi = model.covariate_range
    with open(bands_path, "w", encoding="utf-8") as fh:
        fh.write("x,v,truth,mean_tau,band_lower,band_upper\n")
        for i, v in enumerate(grid):
            fh.write(
                ",".join(
                    _fmt(val)
                    for val in (
                        lo + v * (hi - lo),
                        v,
                        truth[i],
                        bench.mean_tau[i],
                        bench.band_lower[i],
                        bench.band_upper[i],
                    )
                )
                + "\n"
            )
    print(
        f"IBIAS2={_fmt(bench.ibias2)} IVAR={_fmt(bench.ivar)} IMSE={_fmt(bench.imse)} "
        f"({bench.replicates_used}/{model.N} replicates)"
    )
    print(f"metrics written to {metrics_path}, bands to {bands_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecbc",
        description="Nonparametric conditional copulas and dependence curves",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a conditional copula to a delimited file")
    p_fit.add_argument("--input", required=True, help="delimited text file with header")
    p_fit.add_argument("--cols", required=True, help="y1,y2,x column names")
    p_fit.add_argument(
        "--log10", action="append", default=[], metavar="COL",
        help="apply log10 to a column (repeatable)",
    )
    p_fit.add_argument("--delimiter", default=",", help="field delimiter (default ',')")
    p_fit.add_argument(
        "--degrees", default="plugin", help="plugin | l1,l2,m | prior:K (default plugin)"
    )
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--out", required=True, help="output fit file (JSON)")
    p_fit.set_defaults(func=cmd_fit)

    p_eval = sub.add_parser("eval", help="evaluate a fitted conditional copula")
    p_eval.add_argument("--fit", required=True)
    p_eval.add_argument("--u1", type=float)
    p_eval.add_argument("--u2", type=float)
    p_eval.add_argument("--x", type=float, help="raw covariate value")
    p_eval.add_argument("--v", type=float, help="covariate quantile level in [0,1]")
    p_eval.add_argument("--grid", type=int, help="emit an NxN unit-square grid CSV")
    p_eval.add_argument("--tol", type=float, default=1e-10, help="margin inversion tolerance")
    p_eval.add_argument(
        "--raw-derivative", action="store_true",
        help="print the unnormalized conditional CDF instead of the copula",
    )
    p_eval.add_argument("--out", help="output CSV for grid mode")
    p_eval.set_defaults(func=cmd_eval)

    p_curve = sub.add_parser("curve", help="dependence measures over a covariate grid")
    p_curve.add_argument(
        "--fit", action="append", required=True,
        help="fit file (repeat for replicate bands)",
    )
    p_curve.add_argument(
        "--grid", required=True, help="covariate values a,b,c or lo:hi:count"
    )
    p_curve.add_argument(
        "--use-v", action="store_true", help="interpret the grid as quantile levels"
    )
    p_curve.add_argument("--out", help="output path (stdout if omitted)")
    p_curve.add_argument("--format", choices=("csv", "json"), default="csv")
    p_curve.set_defaults(func=cmd_curve)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo benchmark scenario")
    p_sim.add_argument("--scenario", required=True, help="scenario JSON file")
    p_sim.add_argument("--out", required=True, help="output prefix")
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EcbcError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
