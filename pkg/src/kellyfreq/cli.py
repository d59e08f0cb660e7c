"""Command-line entry point: ``kellyfreq {optimize,sweep,dominance,backtest,scan}``.

Exit codes: 0 success, 1 input or validation error, 2 optimizer did not converge.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import backtest, distributions, dominance, empirical, growth

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NONCONVERGED = 2
DEFAULT_SEED = 0


class UsageError(ValueError):
    pass


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, output: str | None) -> None:
    if output:
        write_atomic(output, text)
    else:
        sys.stdout.write(text)


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of numbers: {text!r}") from None


def _parse_n_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = (int(v) for v in part.split("-", 1))
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise UsageError(f"bad --n-list entry {part!r}") from None
    if not out or min(out) < 1:
        raise UsageError("--n-list needs integers >= 1")
    return out


def _load_dist(args) -> distributions.JointReturnDistribution:
    dist = distributions.load_distribution(args.input)
    if args.rate is not None:
        dist = distributions.add_riskless(dist, args.rate, args.cash_name, args.allow_negative_rate)
    return dist


def _config(args) -> growth.OptimizeConfig:
    return growth.OptimizeConfig(tol=args.tol, max_iter=args.max_iter)


def _check_positive(value, flag):
    if value is not None and value < 1:
        raise UsageError(f"{flag} must be >= 1")


def cmd_optimize(args) -> int:
    _check_positive(args.n, "--n")
    if args.samples is not None and args.samples < 100:
        raise UsageError("--samples must be >= 100")
    dist = _load_dist(args)
    result = growth.optimize(dist, args.n, _config(args))
    verdict = dominance.find_dominant(dist)
    doc = result.to_json(dist.asset_names)
    notes = []
    if verdict.dominant_asset is not None:
        notes.append(f"dominant asset detected: {verdict.dominant_name}")
    doc["notes"] = notes
    if args.samples:
        mc = growth.growth_mc(dist, result.optimal_weights, args.n, args.samples, args.seed)
        doc["monte_carlo_check"] = {
            "value": mc.value,
            "std_error": mc.std_error,
            "samples": mc.sample_count,
            "seed": args.seed,
        }
    summary = [f"n={args.n}  g*={result.optimal_value:.12g} nats/step  converged={result.converged}"]
    summary += [f"  {name:>12s}  {w:.9f}" for name, w in zip(dist.asset_names, result.optimal_weights.weights)]
    summary += [f"  note: {n}" for n in notes]
    summary_text = "\n".join(summary) + "\n"
    if args.output:
        write_atomic(args.output, _dumps(doc))
        sys.stdout.write(summary_text)
    else:
        sys.stdout.write(_dumps(doc))
        sys.stderr.write(summary_text)
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def cmd_sweep(args) -> int:
    n_list = _parse_n_list(args.n_list)
    dist = _load_dist(args)
    rows = growth.frequency_sweep(dist, n_list, _config(args))
    _emit(growth.sweep_rows_to_csv(rows, dist.m), args.output)
    for row in rows:
        if row.error:
            sys.stderr.write(f"n={row.n}: {row.error}\n")
    if any(row.result is None for row in rows):
        return EXIT_INPUT
    return EXIT_OK if all(row.result.converged for row in rows) else EXIT_NONCONVERGED


def cmd_dominance(args) -> int:
    dist = _load_dist(args)
    matrix = dominance.attractiveness_matrix(dist)
    verdict = dominance.find_dominant(dist, args.tol_dominance)
    _emit(_dumps(verdict.to_json()), args.output)
    matrix_out = args.matrix_output
    if matrix_out is None and args.output:
        matrix_out = str(Path(args.output).with_suffix(".matrix.csv"))
    if matrix_out:
        write_atomic(matrix_out, matrix.to_csv())
    else:
        sys.stdout.write(matrix.to_csv())
    return EXIT_OK


def cmd_backtest(args) -> int:
    if args.weights is None:
        raise UsageError("--weights is required")
    _check_positive(args.n, "--n")
    _check_positive(args.blocks, "--blocks")
    if not args.v0 > 0:
        raise UsageError("--v0 must be positive")
    weights = _parse_floats(args.weights, "--weights")
    if str(args.input).lower().endswith(".csv"):
        hist = empirical.load_prices(args.input).returns()
        if args.rate is not None:
            if args.rate < 0 and not args.allow_negative_rate:
                raise UsageError("negative --rate requires --allow-negative-rate")
            hist = hist.with_riskless(args.rate, args.cash_name)
        traj = backtest.replay(hist.returns, weights, args.n, args.v0)
    else:
        dist = _load_dist(args)
        traj = backtest.simulate(dist, weights, args.n, args.blocks, args.v0, args.seed)
    _emit(traj.to_csv(), args.output)
    sys.stderr.write(f"realized log-growth {traj.realized_log_growth:.12g} nats/step\n")
    return EXIT_OK


def cmd_scan(args) -> int:
    _check_positive(args.window, "--window")
    rate = 0.0 if args.rate is None else args.rate
    if rate < 0 and not args.allow_negative_rate:
        raise UsageError("negative --rate requires --allow-negative-rate")
    prices = empirical.load_prices(args.input)
    pairs = None
    if args.pairs:
        pairs = []
        for item in args.pairs.split(","):
            if ":" not in item:
                raise UsageError(f"--pairs entries look like I:J, got {item!r}")
            i, j = item.split(":", 1)
            pairs.append((i.strip(), j.strip()))
    try:
        result = empirical.scan(prices, pairs, rate, args.window, args.cash_name)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(result.to_csv(), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kellyfreq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_dist=True):
        p.add_argument("--input", required=True, help="distribution JSON or price CSV")
        p.add_argument("--output", help="output file (stdout when omitted)")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--tol", type=float, default=1e-9, help="optimizer first-order gap tolerance")
        p.add_argument("--max-iter", type=int, default=100_000)
        p.add_argument("--rate", type=float, default=None, help="append a riskless asset with this per-step rate")
        p.add_argument("--cash-name", default="CASH")
        p.add_argument("--allow-negative-rate", action="store_true")

    p = sub.add_parser("optimize", help="log-optimal weights for one rebalancing period")
    common(p)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--samples", type=int, default=None, help="Monte Carlo cross-check of the optimum")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="optimal growth as a function of the rebalancing period")
    common(p)
    p.add_argument("--n-list", default="1-4", help="e.g. 1,2,3 or 1-6")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("dominance", help="attractiveness matrix and dominant-asset verdict")
    common(p)
    p.add_argument("--tol-dominance", type=float, default=0.0)
    p.add_argument("--matrix-output", default=None)
    p.set_defaults(func=cmd_dominance)

    p = sub.add_parser("backtest", help="simulate (distribution JSON) or replay (price CSV)")
    common(p)
    p.add_argument("--weights", help="comma-separated weights in asset order")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--blocks", type=int, default=1000)
    p.add_argument("--v0", type=float, default=1.0)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("scan", help="sliding-window dominance statistics from prices")
    common(p)
    p.add_argument("--window", type=int, default=empirical.DEFAULT_WINDOW)
    p.add_argument("--pairs", default=None, help="I:J pairs to emit, e.g. FB:NFLX,CASH:NFLX")
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
