"""Deterministic emission of CSV tables, figures, and run summaries.

Every float serializes with 17 significant digits, columns have a fixed
order, and nothing here reads the clock — identical inputs must give
byte-identical files.  Figures are rendered with the Agg backend so the
CLI never needs a display; they sit next to the CSVs they visualize.
"""

from __future__ import annotations

import math
import os

import numpy as np

FLOAT_FMT = ".17g"


def fmt(value) -> str:
    """Fixed, locale-free cell formatting."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), FLOAT_FMT)
    return str(value)


def write_csv(path: str, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(cell) for cell in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_dims_csv(path: str, reports) -> None:
    write_csv(
        path,
        ["r", "xi1", "xi2", "xi_r", "regime", "order_model",
         "power_exponent", "log_exponent_lower", "log_exponent_upper"],
        [
            (
                rep.r, rep.xi1, rep.xi2, rep.xi_r, rep.regime,
                rep.order.model, rep.order.power_exponent,
                rep.order.log_exponent_lower, rep.order.log_exponent_upper,
            )
            for rep in reports
        ],
    )


def write_crossing_csv(path: str, rows) -> None:
    write_csv(
        path,
        ["r_lo", "r_hi", "r_star", "xi1", "xi2", "regime"],
        rows,
    )


def write_lambda_series_csv(path: str, records) -> None:
    write_csv(
        path,
        ["k", "r", "n_kr", "lambda_kr", "upper_bound", "l1", "l2"],
        [
            (rec.k, rec.r, rec.n_kr, rec.lambda_kr, rec.upper_bound,
             rec.l1, rec.l2)
            for rec in records
        ],
    )


def write_lambda_tilde_csv(path: str, records) -> None:
    write_csv(
        path,
        ["k", "r", "gamma_count", "psi_count", "phi_kr", "lambda_tilde",
         "l1", "l2", "upper_bound"],
        [
            (rec.k, rec.r, rec.gamma_count, rec.psi_count, rec.phi_kr,
             rec.lambda_tilde, rec.l1, rec.l2, rec.upper_bound)
            for rec in records
        ],
    )


def write_bounds_csv(path: str, rows) -> None:
    write_csv(
        path,
        ["kind", "k", "r", "n", "upper_bound", "codebook_file"],
        rows,
    )


def write_codebook_csv(path: str, codebook: np.ndarray) -> None:
    points = np.asarray(codebook, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    header = ["x"] if points.shape[1] == 1 else ["x", "y"]
    write_csv(path, header, points.tolist())


def write_empirical_csv(path: str, rows) -> None:
    write_csv(
        path,
        ["n", "r", "e_r_pow_r", "std_error", "scaled_coefficient", "source"],
        rows,
    )


def write_order_fit_csv(path: str, rows) -> None:
    write_csv(
        path,
        ["r", "model", "slope", "log_exponent", "intercept", "r_squared",
         "n_points"],
        rows,
    )


def write_verify_csv(path: str, results) -> None:
    write_csv(path, ["check", "status", "detail"], results)


def write_summary(out_dir: str, lines: list[str],
                  keyvals: list[tuple[str, object]]) -> None:
    with open(os.path.join(out_dir, "summary.txt"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    write_csv(os.path.join(out_dir, "summary.csv"), ["key", "value"], keyvals)


def codebook_filename(r: float, k: int) -> str:
    return f"codebook_r{r:.6g}_k{k}.csv"


# ---------------------------------------------------------------------------
# Figures


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def figure_xi_vs_r(reports, path: str) -> None:
    """Both exponents against the moment order, crossing visible."""
    plt = _pyplot()
    rs = [rep.r for rep in reports]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(rs, [rep.xi1 for rep in reports], marker="o", markersize=3,
            label="xi1 (seed family)")
    ax.plot(rs, [rep.xi2 for rep in reports], marker="s", markersize=3,
            label="xi2 (branch family)")
    ax.set_xscale("log")
    ax.set_xlabel("moment order r")
    ax.set_ylabel("exponent")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def figure_error_decay(empirical_rows, bound_rows, path: str) -> None:
    """Log-log decay of e^r: optimized estimates vs constructive bounds.

    Rows are (n, value) pairs; either list may be empty.
    """
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if empirical_rows:
        ns, es = zip(*empirical_rows)
        ax.plot(ns, es, marker="o", markersize=4, linestyle="",
                label="optimized codebooks")
    if bound_rows:
        ns, es = zip(*sorted(bound_rows))
        ax.plot(ns, es, marker="x", markersize=5, linestyle="--",
                label="constructive upper bounds")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("codebook size n")
    ax.set_ylabel("e^r estimate")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def figure_lambda_series(series_by_r: dict, path: str) -> None:
    """Level sums against k; bounded curves witness the finite regimes."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for r, pairs in sorted(series_by_r.items()):
        ks = [k for k, _ in pairs]
        vals = [v for _, v in pairs]
        ax.plot(ks, vals, marker="o", markersize=3, label=f"r = {r:g}")
    ax.set_xscale("log")
    ax.set_xlabel("level k")
    ax.set_ylabel("level sum")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def dense_r_grid(r_list, points: int = 33) -> list[float]:
    """Log-spaced grid covering the configured orders (for figures)."""
    lo = min(r_list)
    hi = max(r_list)
    if lo == hi:
        return [float(lo)]
    return [
        float(math.exp(v))
        for v in np.linspace(math.log(lo), math.log(hi), points)
    ]
