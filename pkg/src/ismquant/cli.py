"""Command-line entry point: orchestration and deterministic reporting.

Subcommands: ``dims`` (exponent table, optional crossing search),
``antichain`` (level-sum tables), ``bounds`` (constructive upper bounds
plus codebooks), ``empirical`` (sampled quantization errors and order
fits), ``verify`` (the named invariant suite), ``report`` (everything,
plus figures and a summary).  Exit codes: 0 success, 2 configuration
rejected, 3 numeric or invariant failure, 4 resource cap exceeded.

Every run writes ``run_manifest.json`` (config hash, versions, seeds,
output list — never a timestamp); CSV bytes are identical across reruns
with the same config, regardless of ``--threads``.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys as _sys

from . import __version__, antichain, antichain2, dims, model
from . import quantizer, report
from . import verify as verify_mod
from .config import ConfigError, RunConfig, load_config
from .dims import EQUAL, NumericFailure
from .model import CASE_I, CaseMismatch, DegenerateSystem
from .words import CardinalityCapExceeded, DepthCapExceeded

SUBCOMMANDS = ("dims", "antichain", "bounds", "empirical", "verify", "report")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_CAP = 4

_CASE_II_NOTICE = (
    "note: case-II threshold weights for branch words combine branch "
    "probabilities with the outer contraction ratios (p_i * s_i^r); the "
    "level threshold uses the smallest per-symbol weight across both "
    "families. See README: threshold conventions."
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ismquant",
        description="quantization diagnostics for inhomogeneous "
        "self-similar measures",
    )
    parser.add_argument("command", nargs="?", choices=SUBCOMMANDS,
                        help="subcommand (positional alias)")
    parser.add_argument("--subcommand", choices=SUBCOMMANDS,
                        help="subcommand to run")
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker thread budget (results independent)")
    return parser


def _classify_cached(cfg: RunConfig, cache: dict, r: float) -> dims.XiReport:
    if r not in cache:
        cache[r] = dims.classify(cfg.system, r)
    return cache[r]


# ---------------------------------------------------------------------------
# subcommand bodies (each returns the list of files it wrote)


def _run_dims(cfg: RunConfig, out_dir: str, cache: dict):
    reports = [_classify_cached(cfg, cache, r) for r in cfg.r_list]
    report.write_dims_csv(os.path.join(out_dir, "dims.csv"), reports)
    files = ["dims.csv"]
    crossing = None
    if cfg.crossing_bracket is not None:
        lo, hi = cfg.crossing_bracket
        r_star = dims.find_crossing_r(cfg.system, lo, hi)
        rep = dims.classify(cfg.system, r_star)
        report.write_crossing_csv(
            os.path.join(out_dir, "crossing.csv"),
            [(lo, hi, r_star, rep.xi1, rep.xi2, rep.regime)],
        )
        files.append("crossing.csv")
        crossing = (r_star, rep)
    return files, reports, crossing


def _antichain_records(cfg: RunConfig, cache: dict):
    """Per-(r, k) level records, case-appropriate."""
    out = []
    for r in cfg.r_list:
        xi_r = _classify_cached(cfg, cache, r).xi_r
        for k in cfg.k_list:
            if cfg.system.case_tag == CASE_I:
                rec = antichain.build_lambda(
                    cfg.system, k, r, xi_r=xi_r, store_words=False
                )
            else:
                rec = antichain2.lambda_tilde(
                    cfg.system, k, r, xi_r=xi_r, include_root=cfg.psi_h0
                )
            out.append(rec)
    return out


def _run_antichain(cfg: RunConfig, out_dir: str, cache: dict):
    records = _antichain_records(cfg, cache)
    if cfg.system.case_tag == CASE_I:
        name = "lambda_series.csv"
        report.write_lambda_series_csv(os.path.join(out_dir, name), records)
    else:
        name = "lambda_tilde.csv"
        report.write_lambda_tilde_csv(os.path.join(out_dir, name), records)
    return [name], records


def _run_bounds(cfg: RunConfig, out_dir: str, cache: dict):
    sys_ = cfg.system
    rows = []
    files = ["bounds.csv"]
    cap = antichain.DEFAULT_CAP
    for r in cfg.r_list:
        xi_r = _classify_cached(cfg, cache, r).xi_r
        for k in cfg.k_list:
            if sys_.case_tag == CASE_I:
                rec = antichain.build_lambda(sys_, k, r, xi_r=xi_r,
                                             store_words=True)
                n = rec.n_kr
                bound = rec.upper_bound
                book = (
                    None if cfg.aggregates_only
                    else antichain.codebook_from_antichain(sys_, rec)
                )
                kind = "cylinder"
            else:
                rec = antichain2.lambda_tilde(
                    sys_, k, r, xi_r=xi_r, include_root=cfg.psi_h0
                )
                n = rec.pair_count + rec.gamma_count
                bound = rec.upper_bound
                book = None
                if not cfg.aggregates_only and n <= cap:
                    book = antichain2.patch_codebook(
                        sys_, k, r, include_root=cfg.psi_h0
                    )
                kind = "patch"
            fname = ""
            if book is not None:
                fname = report.codebook_filename(r, k)
                report.write_codebook_csv(os.path.join(out_dir, fname), book)
                files.append(fname)
            rows.append((kind, k, r, n, bound, fname))
    report.write_bounds_csv(os.path.join(out_dir, "bounds.csv"), rows)
    return files, rows


def _run_empirical(cfg: RunConfig, out_dir: str, cache: dict):
    sys_ = cfg.system
    emp_rows = []
    fit_rows = []
    curves = {}
    bound_pairs_by_r = {}
    for r in cfg.r_list:
        rep = _classify_cached(cfg, cache, r)
        xi_r = rep.xi_r
        warm: dict[int, list] = {}
        bound_pairs = []
        for k in cfg.k_list:
            if sys_.case_tag == CASE_I:
                want_book = cfg.warm_start
                rec = antichain.build_lambda(sys_, k, r, xi_r=xi_r,
                                             store_words=want_book)
                n = rec.n_kr
                bound_pairs.append((n, rec.upper_bound))
                if want_book and n in cfg.n_list:
                    warm.setdefault(n, []).append(
                        antichain.codebook_from_antichain(sys_, rec)
                    )
            else:
                rec = antichain2.lambda_tilde(
                    sys_, k, r, xi_r=xi_r, include_root=cfg.psi_h0
                )
                n = rec.pair_count + rec.gamma_count
                bound_pairs.append((n, rec.upper_bound))
                if cfg.warm_start and n in cfg.n_list:
                    warm.setdefault(n, []).append(
                        antichain2.patch_codebook(
                            sys_, k, r, include_root=cfg.psi_h0
                        )
                    )
        curve = quantizer.empirical_curve(
            sys_, r, cfg.n_list, cfg.samples, cfg.restarts, cfg.seed,
            warm_starts=warm or None,
        )
        curves[r] = curve
        bound_pairs_by_r[r] = bound_pairs
        for est in curve:
            emp_rows.append((
                est.n, r, est.e_r_pow_r, est.std_error,
                quantizer.scaled_coefficient(est.n, r, xi_r, est.e_r_pow_r),
                "lloyd",
            ))
        for n, bound in bound_pairs:
            emp_rows.append((
                n, r, bound, 0.0,
                quantizer.scaled_coefficient(n, r, xi_r, bound),
                "antichain_upper",
            ))
        fit = quantizer.fit_order(curve, with_log_term=(rep.regime == EQUAL))
        fit_rows.append((
            r, fit.model, fit.slope, fit.log_exponent, fit.intercept,
            fit.r_squared, len(curve),
        ))
    report.write_empirical_csv(os.path.join(out_dir, "empirical.csv"),
                               emp_rows)
    report.write_order_fit_csv(os.path.join(out_dir, "order_fit.csv"),
                               fit_rows)
    return (["empirical.csv", "order_fit.csv"], curves, bound_pairs_by_r,
            fit_rows)


def _run_verify(cfg: RunConfig, out_dir: str):
    rows = verify_mod.run_checks(cfg)
    report.write_verify_csv(os.path.join(out_dir, "verify.csv"), rows)
    for name, status, detail in rows:
        print(f"{status:4s}  {name}: {detail}")
    failed = [name for name, status, _ in rows if status == "fail"]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}",
              file=_sys.stderr)
    return ["verify.csv"], not failed


def _run_report(cfg: RunConfig, out_dir: str, cache: dict):
    files, dim_reports, crossing = _run_dims(cfg, out_dir, cache)
    a_files, records = _run_antichain(cfg, out_dir, cache)
    b_files, bound_rows = _run_bounds(cfg, out_dir, cache)
    e_files, curves, bound_pairs_by_r, fit_rows = _run_empirical(
        cfg, out_dir, cache
    )
    files += a_files + b_files + e_files

    dense = [
        dims.classify(cfg.system, r)
        for r in report.dense_r_grid(cfg.r_list)
    ]
    report.figure_xi_vs_r(dense, os.path.join(out_dir, "xi_vs_r.png"))
    files.append("xi_vs_r.png")

    series_by_r: dict[float, list] = {}
    for rec in records:
        val = rec.lambda_kr if hasattr(rec, "lambda_kr") else rec.lambda_tilde
        series_by_r.setdefault(rec.r, []).append((rec.k, val))
    report.figure_lambda_series(
        series_by_r, os.path.join(out_dir, "lambda_series.png")
    )
    files.append("lambda_series.png")

    for r, curve in curves.items():
        emp_pairs = [(est.n, est.e_r_pow_r) for est in curve]
        bnd_pairs = [
            (n, b) for n, b in bound_pairs_by_r[r]
            if b > 0.0 and n <= 10 * max(cfg.n_list)
        ]
        fname = f"error_decay_r{r:.6g}.png"
        report.figure_error_decay(
            emp_pairs, bnd_pairs, os.path.join(out_dir, fname)
        )
        files.append(fname)

    lines = []
    keyvals = []
    sys_ = cfg.system
    case_name = "I" if sys_.case_tag == CASE_I else "II"
    lines.append(
        f"system: case {case_name}, dimension {sys_.dimension}, "
        f"{sys_.n_outer} branch maps, p0 = {sys_.p[0]:.6g}"
    )
    sep = model.check_separation(sys_)
    lines.append(f"separation: min gap {sep.min_gap:.6g}"
                 + (" (over-approximate boxes)" if sep.overapprox else ""))
    keyvals.append(("separation_min_gap", sep.min_gap))
    for rep in dim_reports:
        lines.append(
            f"r = {rep.r:g}: regime {rep.regime}, xi1 = {rep.xi1:.9g}, "
            f"xi2 = {rep.xi2:.9g}, predicted order {rep.order.model} "
            f"(power exponent {rep.order.power_exponent:.6g})"
        )
        keyvals.append((f"regime_r{rep.r:g}", rep.regime))
        keyvals.append((f"xi_r{rep.r:g}", rep.xi_r))
    if crossing is not None:
        r_star, rep = crossing
        lines.append(
            f"exponent crossing: r* = {r_star:.9g} "
            f"(|xi1 - xi2| = {abs(rep.xi1 - rep.xi2):.2e})"
        )
        keyvals.append(("crossing_r", r_star))
    for r, pairs in sorted(series_by_r.items()):
        vals = [v for _, v in pairs]
        lines.append(
            f"level sums at r = {r:g}: min {min(vals):.6g}, "
            f"max {max(vals):.6g} over k in {sorted(k for k, _ in pairs)}"
        )
        keyvals.append((f"level_sum_max_r{r:g}", max(vals)))
    for row in fit_rows:
        r, fit_model, slope = row[0], row[1], row[2]
        xi_r = _classify_cached(cfg, cache, r).xi_r
        predicted = -r / xi_r
        gap = abs(slope - predicted) / abs(predicted)
        lines.append(
            f"decay fit at r = {r:g}: slope {slope:.6g} vs predicted "
            f"{predicted:.6g} ({100 * gap:.1f}% off, model {fit_model})"
        )
        keyvals.append((f"fit_slope_r{r:g}", slope))
    matched = 0
    compared = 0
    for r, curve in curves.items():
        bound_at = {n: b for n, b in bound_pairs_by_r[r]}
        for est in curve:
            if est.n in bound_at:
                compared += 1
                if est.e_r_pow_r <= bound_at[est.n] * 1.05 \
                        + 4.0 * est.std_error:
                    matched += 1
    if compared:
        lines.append(
            f"optimized error within the constructive bound at "
            f"{matched}/{compared} matched codebook sizes"
        )
        keyvals.append(("bound_matches", f"{matched}/{compared}"))
    if cfg.rounding_notes:
        lines.append(f"rounding notes ({len(cfg.rounding_notes)}):")
        lines.extend(f"  {note}" for note in cfg.rounding_notes)
    report.write_summary(out_dir, lines, keyvals)
    files += ["summary.txt", "summary.csv"]
    return files


# ---------------------------------------------------------------------------


def _write_manifest(out_dir: str, command: str, cfg: RunConfig,
                    config_path: str, threads: int, files: list[str]) -> None:
    import importlib.metadata

    import matplotlib
    import numpy

    with open(config_path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    manifest = {
        "command": command,
        "config": config_path,
        "config_sha256": digest,
        "seed": cfg.seed,
        "threads": threads,
        "versions": {
            "ismquant": __version__,
            "python": ".".join(str(v) for v in _sys.version_info[:3]),
            "numpy": numpy.__version__,
            "matplotlib": matplotlib.__version__,
            "jsonschema": importlib.metadata.version("jsonschema"),
        },
        "rounding_notes": list(cfg.rounding_notes),
        "outputs": sorted(set(files) | {"run_manifest.json"}),
    }
    path = os.path.join(out_dir, "run_manifest.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    command = args.subcommand or args.command
    if command is None:
        print("error: no subcommand given (use --subcommand or the "
              "positional form)", file=_sys.stderr)
        return EXIT_CONFIG
    if args.subcommand and args.command and args.subcommand != args.command:
        print(
            f"error: positional subcommand {args.command!r} conflicts with "
            f"--subcommand {args.subcommand!r}",
            file=_sys.stderr,
        )
        return EXIT_CONFIG
    if args.threads < 1:
        print("error: --threads must be >= 1", file=_sys.stderr)
        return EXIT_CONFIG

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG

    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    out_dir = args.out if args.out is not None else cfg.out_dir
    cfg = dataclasses.replace(cfg, out_dir=out_dir)
    os.makedirs(out_dir, exist_ok=True)

    if cfg.system.case_tag != CASE_I and command != "dims":
        print(_CASE_II_NOTICE, file=_sys.stderr)

    if command != "verify":
        sep = model.check_separation(cfg.system)
        if not sep.passed:
            print(f"separation check failed: {sep.detail}", file=_sys.stderr)
            return EXIT_NUMERIC

    cache: dict = {}
    try:
        if command == "dims":
            files, _, _ = _run_dims(cfg, out_dir, cache)
        elif command == "antichain":
            files, _ = _run_antichain(cfg, out_dir, cache)
        elif command == "bounds":
            files, _ = _run_bounds(cfg, out_dir, cache)
        elif command == "empirical":
            files = _run_empirical(cfg, out_dir, cache)[0]
        elif command == "verify":
            files, ok = _run_verify(cfg, out_dir)
            _write_manifest(out_dir, command, cfg, args.config,
                            args.threads, files)
            return EXIT_OK if ok else EXIT_NUMERIC
        else:
            files = _run_report(cfg, out_dir, cache)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except (DepthCapExceeded, CardinalityCapExceeded) as exc:
        print(f"resource cap exceeded: {exc}", file=_sys.stderr)
        return EXIT_CAP
    except (NumericFailure, CaseMismatch, DegenerateSystem) as exc:
        print(f"numeric failure: {exc}", file=_sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"invalid request: {exc}", file=_sys.stderr)
        return EXIT_CONFIG

    _write_manifest(out_dir, command, cfg, args.config, args.threads, files)
    print(f"{command}: wrote {len(files)} file(s) to {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
