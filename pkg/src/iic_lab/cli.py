"""Command-line interface.

Subcommands: ``solve``, ``iic``, ``oracle``, ``sweep``, ``corr``.  Exit
codes: 0 success, 2 usage error (argparse), 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import DataError, IICLabError, NumericalError
from .experiment import (
    emit,
    ingest_csv,
    load_sweep_config,
    max_cell_threads,
    run_sweep,
    split,
    _json_token,
)
from .iic import MC_DIM_LIMIT, iic_ridge, iic_smooth, iic_sparse, v0_closed, v0_monte_carlo
from .interpolate import SolverOptions, min_norm_l1, min_norm_l2, min_norm_lp
from .linalg import validate_design
from .oracle import (
    OracleBudget,
    dual_prior_numeric,
    dual_prior_residue_n1,
    dual_prior_ridge_asymptotic,
    dual_prior_smooth_asymptotic,
    dual_prior_sparse_asymptotic,
    free_energy_numeric_min,
)
from .stats import bootstrap_ci


def _print_json(obj: dict) -> None:
    fields = ", ".join(f'"{k}": {_json_value(v)}' for k, v in obj.items())
    print("{" + fields + "}")


def _json_value(v) -> str:
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(x) for x in np.asarray(v).tolist()) + "]"
    return _json_token(v)


def _load_xy(args):
    dataset = ingest_csv(args.csv, args.target)
    return dataset


def _parse_p(text: str) -> float:
    p = float(text)
    if not (p == 1 or p >= 2):
        raise DataError(f"p must be 1 or >= 2, got {p}")
    return p


def _solve_for(D, Y, p, seed=0):
    if p == 1:
        return min_norm_l1(D, Y, SolverOptions(seed=seed))
    if p == 2:
        return min_norm_l2(D, Y)
    return min_norm_lp(D, Y, p, SolverOptions(seed=seed))


def _cmd_solve(args) -> int:
    dataset = _load_xy(args)
    if args.n_train is not None:
        train, _ = split(dataset, args.n_train, args.seed)
    else:
        train = dataset
    D = validate_design(train.X0)
    p = _parse_p(args.p)
    interp = _solve_for(D, train.y, p, seed=args.seed)
    a = np.abs(interp.theta)
    _print_json({
        "p": interp.p,
        "n": D.n,
        "d": D.d,
        "norm_p": float(np.sum(a**p) ** (1.0 / p)),
        "norm_p_to_p": float(np.sum(a**p)),
        "support": interp.support.tolist(),
        "signs": interp.signs.tolist(),
        "residual": interp.residual,
        "stationarity": interp.stationarity,
        "iterations": interp.iterations,
        "certificate_margin": interp.certificate.margin if interp.certificate else None,
        "theta": interp.theta.tolist(),
    })
    return 0


def _cmd_iic(args) -> int:
    dataset = _load_xy(args)
    D = validate_design(dataset.X0)
    p = _parse_p(args.p)
    interp = _solve_for(D, dataset.y, p, seed=args.seed)
    if p == 2:
        br = iic_ridge(D, interp)
    elif p > 2:
        br = iic_smooth(D, interp, p)
    else:
        full = interp.support.size == D.n
        if args.v0 == "closed" or (args.v0 == "auto" and full):
            v0 = v0_closed(D, interp.support, interp.signs)
        else:
            v0 = v0_monte_carlo(
                D, interp.support, interp.signs,
                samples=args.mc_samples, seed=args.seed, dim_limit=MC_DIM_LIMIT,
            )
        br = iic_sparse(D, interp, v0)
    _print_json({
        "p": br.p,
        "total": br.total,
        "reg_term": br.reg_term,
        "sharpness_term": br.sharpness_term,
        "ambient_constant": br.ambient_constant,
        "tau_star": br.tau_star,
        "log_det_gram": br.log_det_gram,
        "sum_log_abs_theta": br.sum_log_abs_theta,
        "log_v0": br.log_v0,
        "v0_method": br.v0_method,
    })
    return 0


def _cmd_oracle(args) -> int:
    dataset = _load_xy(args)
    tau = args.tau
    if args.mode == "residue":
        x = dataset.X0[args.row]
        Y = float(dataset.y[args.row])
        est = dual_prior_residue_n1(x, Y, tau)
    else:
        D = validate_design(dataset.X0)
        Y = dataset.y
        if args.mode == "numeric":
            p = _parse_p(args.p)
            budget = OracleBudget(
                max_subdivisions=args.max_subdivisions,
                mc_samples=args.mc_samples,
                seed=args.seed,
            )
            est = dual_prior_numeric(D, Y, p, tau, method=args.method, budget=budget)
        elif args.mode == "ridge":
            est = dual_prior_ridge_asymptotic(D, Y, tau)
        elif args.mode == "smooth":
            est = dual_prior_smooth_asymptotic(D, Y, _parse_p(args.p), tau)
        elif args.mode == "sparse":
            interp = min_norm_l1(D, Y, SolverOptions(seed=args.seed))
            full = interp.support.size == D.n
            v0 = (v0_closed(D, interp.support, interp.signs) if full
                  else v0_monte_carlo(D, interp.support, interp.signs,
                                      samples=args.mc_samples, seed=args.seed))
            est = dual_prior_sparse_asymptotic(D, Y, tau, v0, interp=interp)
        elif args.mode == "tau-min":
            p = _parse_p(args.p)
            interp = _solve_for(D, Y, p, seed=args.seed)
            if p == 1:
                center = float(np.sum(np.abs(interp.theta))) / D.n
            elif p == 2:
                center = 2.0 * float(interp.theta @ interp.theta) / D.n
            else:
                t = 2.0 * D.d - p * (D.d - D.n)
                if t <= 0:
                    raise NumericalError("no finite tau* at or beyond the dimension bound")
                center = 2.0 * p * float(np.sum(np.abs(interp.theta) ** p)) / t
            grid = np.geomspace(center / args.grid_span, center * args.grid_span,
                                args.grid_points)
            res = free_energy_numeric_min(D, Y, p, grid)
            _print_json({
                "mode": "tau-min",
                "p": p,
                "tau_min": res.tau_min,
                "tau_star_closed_form": center,
                "rel_difference": abs(res.tau_min - center) / center,
                "value": res.value,
            })
            return 0
        else:
            raise DataError(f"unknown oracle mode {args.mode!r}")
    _print_json({
        "mode": args.mode,
        "log_value": est.log_value,
        "method": est.method,
        "abs_error_estimate": est.abs_error_estimate,
        "tau": est.tau,
    })
    return 0


def _cmd_sweep(args) -> int:
    cfg, extras = load_sweep_config(args.config)
    if "csv" not in extras:
        raise DataError("sweep config must carry a 'csv' key pointing at the dataset")
    dataset = ingest_csv(extras["csv"], extras.get("target"))
    records = run_sweep(dataset, cfg, max_workers=max_cell_threads())
    emit(records, "csv", args.out)
    n_err = sum(1 for r in records if r.status == "error")
    print(f"wrote {len(records)} records ({n_err} failed cells) to {args.out}")
    return 0


def _cmd_corr(args) -> int:
    import csv as _csv

    xs, ys = [], []
    with open(args.infile, newline="") as fh:
        reader = _csv.DictReader(fh)
        if reader.fieldnames is None or args.x not in reader.fieldnames \
                or args.y not in reader.fieldnames:
            raise DataError(
                f"columns {args.x!r}/{args.y!r} not found in {args.infile}"
            )
        for row in reader:
            try:
                xv, yv = float(row[args.x]), float(row[args.y])
            except (TypeError, ValueError):
                continue  # non-applicable cells are empty on error rows
            if np.isfinite(xv) and np.isfinite(yv):
                xs.append(xv)
                ys.append(yv)
    report = bootstrap_ci(xs, ys, n_resamples=args.resamples, seed=args.seed,
                          pair=f"{args.x}~{args.y}")
    _print_json({
        "pair": report.pair,
        "rho": report.rho,
        "ci_low": report.ci_low,
        "ci_high": report.ci_high,
        "n_points": report.n_points,
        "n_resamples": report.n_resamples,
        "seed": report.seed,
        "n_degenerate_skipped": report.n_degenerate_skipped,
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iic-lab",
        description="Minimum l^p-norm interpolators and their selection criterion",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve one interpolation problem from a CSV")
    ps.add_argument("--csv", required=True)
    ps.add_argument("--target", required=True)
    ps.add_argument("--p", required=True)
    ps.add_argument("--n-train", type=int, default=None)
    ps.add_argument("--seed", type=int, default=0)
    ps.set_defaults(func=_cmd_solve)

    pi = sub.add_parser("iic", help="criterion breakdown for a CSV design")
    pi.add_argument("--csv", required=True)
    pi.add_argument("--target", required=True)
    pi.add_argument("--p", required=True)
    pi.add_argument("--v0", choices=["closed", "mc", "auto"], default="auto")
    pi.add_argument("--mc-samples", type=int, default=1_000_000)
    pi.add_argument("--seed", type=int, default=0)
    pi.set_defaults(func=_cmd_iic)

    po = sub.add_parser("oracle", help="numerical dual-prior oracles")
    po.add_argument("--mode", required=True,
                    choices=["numeric", "ridge", "smooth", "sparse", "residue", "tau-min"])
    po.add_argument("--csv", required=True)
    po.add_argument("--target", required=True)
    po.add_argument("--p", default="2")
    po.add_argument("--tau", type=float, default=0.1)
    po.add_argument("--method", choices=["auto", "quadrature", "monte_carlo"],
                    default="auto")
    po.add_argument("--row", type=int, default=0, help="row index for residue mode")
    po.add_argument("--mc-samples", type=int, default=200_000)
    po.add_argument("--max-subdivisions", type=int, default=200)
    po.add_argument("--seed", type=int, default=0)
    po.add_argument("--grid-span", type=float, default=100.0)
    po.add_argument("--grid-points", type=int, default=25)
    po.set_defaults(func=_cmd_oracle)

    pw = sub.add_parser("sweep", help="run a dimension sweep from a TOML config")
    pw.add_argument("--config", required=True)
    pw.add_argument("--out", required=True)
    pw.set_defaults(func=_cmd_sweep)

    pc = sub.add_parser("corr", help="Spearman correlation with bootstrap CI")
    pc.add_argument("--in", dest="infile", required=True)
    pc.add_argument("--x", required=True)
    pc.add_argument("--y", required=True)
    pc.add_argument("--resamples", type=int, default=1000)
    pc.add_argument("--seed", type=int, default=0)
    pc.set_defaults(func=_cmd_corr)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except IICLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
