"""Empirical quantization error via codebook optimization on samples.

This is the independent numerical check on the constructive bounds: draw
samples from the measure, optimize an ``n``-point codebook by alternating
assignment and cell-center updates, and report the plug-in estimate of
the ``r``-th power quantization error together with its Monte-Carlo
standard error.  A small regression utility fits the decay order of an
``(n, e^r)`` table on log scales.

Cell centers minimize ``sum |x - a|^r`` over the cell: the mean for
``r = 2``, the coordinatewise median for ``r = 1``, a derivative
bisection for other ``r >= 1`` in dimension one, and a damped
Weiszfeld-type fixed-point iteration otherwise.  All randomness flows
through explicit numpy generators; identical seeds give identical
output regardless of thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dims import LOG_CORRECTED, PURE_POWER, NumericFailure
from .model import IsmSystem, sample_batch

_CHUNK = 4096
_MAX_ROUNDS = 500
_REL_TOL = 1e-10

# spawn_key purposes for seed derivation (keep distinct across the package)
_SPAWN_EMPIRICAL = 2


@dataclass(frozen=True)
class QuantEstimate:
    """One optimized codebook and its plug-in error estimate."""

    n: int
    r: float
    codebook: np.ndarray
    e_r_pow_r: float
    std_error: float
    samples_used: int
    restarts: int


@dataclass(frozen=True)
class OrderFit:
    """Least-squares decay order of an ``(n, e^r)`` table.

    ``slope`` multiplies ``log n`` and ``log_exponent`` multiplies
    ``log log n`` (zero when the log term is not fitted).
    """

    model: str
    slope: float
    log_exponent: float
    intercept: float
    r_squared: float


def _as_points(arr) -> np.ndarray:
    pts = np.asarray(arr, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValueError(f"expected a point array, got shape {pts.shape}")
    return pts


def _nearest(samples: np.ndarray, codebook: np.ndarray):
    """Index of and squared distance to the nearest codebook row."""
    m = samples.shape[0]
    idx = np.empty(m, dtype=np.intp)
    d2 = np.empty(m, dtype=float)
    for lo in range(0, m, _CHUNK):
        chunk = samples[lo:lo + _CHUNK]
        diff = chunk[:, None, :] - codebook[None, :, :]
        dist2 = np.einsum("ijk,ijk->ij", diff, diff)
        idx[lo:lo + _CHUNK] = np.argmin(dist2, axis=1)
        d2[lo:lo + _CHUNK] = np.take_along_axis(
            dist2, idx[lo:lo + _CHUNK, None], axis=1
        )[:, 0]
    return idx, d2


def estimate_error(samples, codebook, r: float) -> tuple[float, float]:
    """Mean of min-distance^r over the samples, with its standard error."""
    samples = _as_points(samples)
    codebook = _as_points(codebook)
    if samples.shape[0] == 0:
        raise ValueError("samples must be nonempty")
    if codebook.shape[0] == 0:
        raise ValueError("codebook must be nonempty")
    if samples.shape[1] != codebook.shape[1]:
        raise ValueError("samples and codebook dimensions differ")
    if r <= 0.0:
        raise ValueError(f"order r must be positive, got {r}")
    _, d2 = _nearest(samples, codebook)
    vals = np.power(d2, r / 2.0)
    mean = float(np.mean(vals))
    m = samples.shape[0]
    std = float(np.std(vals, ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    return mean, std


def _center_bisection(points: np.ndarray, r: float) -> float:
    """1-D minimizer of sum |x - a|^r for r >= 1 (monotone derivative)."""
    x = points[:, 0]
    lo, hi = float(np.min(x)), float(np.max(x))
    if lo == hi:
        return lo

    def deriv(a: float) -> float:
        d = a - x
        return float(np.sum(np.sign(d) * np.abs(d) ** (r - 1.0)))

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if deriv(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _center_fixed_point(points: np.ndarray, r: float) -> np.ndarray:
    """Damped Weiszfeld iteration on sum |x - a|^r, any dimension."""
    a = np.median(points, axis=0) if r < 1.0 else np.mean(points, axis=0)

    def objective(c: np.ndarray) -> float:
        d2 = np.sum((points - c) ** 2, axis=1)
        return float(np.sum(np.power(d2, r / 2.0)))

    best = objective(a)
    tiny = 1e-300
    for _ in range(100):
        d2 = np.sum((points - a) ** 2, axis=1) + tiny
        w = np.power(d2, (r - 2.0) / 2.0)
        target = w @ points / np.sum(w)
        step = 1.0
        moved = False
        for _ in range(20):
            cand = a + step * (target - a)
            val = objective(cand)
            if val < best:
                a, best, moved = cand, val, True
                break
            step *= 0.5
        if not moved:
            break
        if np.allclose(target, a, rtol=0.0, atol=1e-14):
            break
    return a


def _cell_center(points: np.ndarray, r: float) -> np.ndarray:
    if r == 2.0:
        return np.mean(points, axis=0)
    if r == 1.0:
        return np.median(points, axis=0)
    if points.shape[1] == 1 and r >= 1.0:
        return np.array([_center_bisection(points, r)])
    return _center_fixed_point(points, r)


def _repair_empty(samples: np.ndarray, codebook: np.ndarray, r: float,
                  idx: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """Reseed empty cells on the samples currently served worst."""
    counts = np.bincount(idx, minlength=codebook.shape[0])
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return codebook
    codebook = codebook.copy()
    contrib = np.power(d2, r / 2.0)
    for cell in empty:
        j = int(np.argmax(contrib))
        codebook[cell] = samples[j]
        contrib[j] = -1.0
    return codebook


def _lloyd(samples: np.ndarray, codebook: np.ndarray, r: float,
           max_rounds: int = _MAX_ROUNDS,
           rel_tol: float = _REL_TOL) -> tuple[np.ndarray, float]:
    """Alternate assignment and cell updates until improvement stalls.

    Updates that fail to improve (possible for the non-Euclidean cell
    rules) roll back, so the returned objective never exceeds the
    starting one.
    """
    codebook = codebook.copy()
    idx, d2 = _nearest(samples, codebook)
    best = float(np.mean(np.power(d2, r / 2.0)))
    for _ in range(max_rounds):
        repaired = _repair_empty(samples, codebook, r, idx, d2)
        if repaired is not codebook:
            codebook = repaired
            idx, d2 = _nearest(samples, codebook)
        new = codebook.copy()
        for cell in range(codebook.shape[0]):
            members = samples[idx == cell]
            if members.shape[0] > 0:
                new[cell] = _cell_center(members, r)
        new_idx, new_d2 = _nearest(samples, new)
        obj = float(np.mean(np.power(new_d2, r / 2.0)))
        if obj > best:
            break
        codebook, idx, d2 = new, new_idx, new_d2
        if best - obj <= rel_tol * max(best, 1e-300):
            best = obj
            break
        best = obj
    return codebook, best


def _seed_codebook(samples: np.ndarray, n: int, r: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Distance^r-weighted greedy seeding (k-means++ generalized)."""
    m = samples.shape[0]
    chosen = [int(rng.integers(m))]
    d2 = np.sum((samples - samples[chosen[0]]) ** 2, axis=1)
    while len(chosen) < n:
        w = np.power(d2, r / 2.0)
        total = float(np.sum(w))
        if total <= 0.0:
            j = int(np.flatnonzero(d2 > 0.0)[0]) if np.any(d2 > 0.0) else 0
        else:
            j = int(rng.choice(m, p=w / total))
        chosen.append(j)
        d2 = np.minimum(d2, np.sum((samples - samples[j]) ** 2, axis=1))
    return samples[chosen].copy()


def _sorted_rows(codebook: np.ndarray) -> np.ndarray:
    order = np.lexsort(tuple(codebook[:, c] for c in range(
        codebook.shape[1] - 1, -1, -1)))
    return codebook[order]


def optimize_codebook(samples, n: int, r: float, restarts: int = 8,
                      rng: np.random.Generator | None = None,
                      warm_starts: tuple = ()) -> QuantEstimate:
    """Best codebook over seeded restarts and optional warm starts.

    Warm starts (e.g. constructive codebooks) may carry fewer than ``n``
    rows; seeded restarts always use exactly ``n``.  Ties on the final
    objective keep the earliest candidate, so results are reproducible
    for a fixed generator state.
    """
    samples = _as_points(samples)
    if n < 1:
        raise ValueError(f"codebook size must be >= 1, got {n}")
    if r <= 0.0:
        raise ValueError(f"order r must be positive, got {r}")
    if samples.shape[0] < 10 * n:
        raise ValueError(
            f"need at least {10 * n} samples for n={n}, got {samples.shape[0]}"
        )
    distinct = np.unique(samples, axis=0).shape[0]
    if n > distinct:
        raise ValueError(
            f"codebook size {n} exceeds distinct sample count {distinct}"
        )
    if restarts > 0 and rng is None:
        raise ValueError("rng is required when restarts > 0")
    if restarts <= 0 and not warm_starts:
        raise ValueError("need restarts > 0 or at least one warm start")

    best_book: np.ndarray | None = None
    best_obj = math.inf
    for start in warm_starts:
        book = _as_points(start)
        if book.shape[0] > n:
            raise ValueError(
                f"warm start has {book.shape[0]} rows, exceeds n={n}"
            )
        book, obj = _lloyd(samples, book, r)
        if obj < best_obj:
            best_book, best_obj = book, obj
    for _ in range(restarts):
        book = _seed_codebook(samples, n, r, rng)
        book, obj = _lloyd(samples, book, r)
        if obj < best_obj:
            best_book, best_obj = book, obj

    assert best_book is not None
    mean, std = estimate_error(samples, best_book, r)
    return QuantEstimate(
        n=n,
        r=r,
        codebook=_sorted_rows(best_book),
        e_r_pow_r=mean,
        std_error=std,
        samples_used=samples.shape[0],
        restarts=restarts,
    )


def empirical_curve(sys: IsmSystem, r: float, n_list, samples_per_n: int,
                    restarts: int, seed: int,
                    warm_starts: dict | None = None) -> list[QuantEstimate]:
    """Optimized estimates for each codebook size in ``n_list``.

    Each size draws a fresh sample batch from its own derived seed, so
    entries are independent of list order and of one another.
    ``warm_starts`` optionally maps a size ``n`` to a sequence of
    starting codebooks (e.g. constructive ones of matching size).
    """
    out: list[QuantEstimate] = []
    for pos, n in enumerate(n_list):
        ss = np.random.SeedSequence(
            entropy=seed, spawn_key=(_SPAWN_EMPIRICAL, pos)
        )
        sample_rng, opt_rng = (np.random.default_rng(s) for s in ss.spawn(2))
        samples = sample_batch(sys, samples_per_n, sample_rng)
        starts = tuple(warm_starts.get(int(n), ())) if warm_starts else ()
        out.append(
            optimize_codebook(
                samples, int(n), r,
                restarts=restarts, rng=opt_rng, warm_starts=starts,
            )
        )
    return out


def fit_order(table, with_log_term: bool = False) -> OrderFit:
    """Fit ``log e^r ~ intercept + slope*log n (+ log_exponent*log log n)``.

    ``table`` is a sequence of ``QuantEstimate``-like records or
    ``(n, e_r_pow_r)`` pairs.  Requires at least four points spanning
     1.5 decades in ``n``; the fit is descriptive — it never certifies
    an asymptotic statement by itself.
    """
    pairs = []
    for row in table:
        if hasattr(row, "n"):
            pairs.append((float(row.n), float(row.e_r_pow_r)))
        else:
            n, e = row
            pairs.append((float(n), float(e)))
    if len(pairs) < 4:
        raise NumericFailure(f"order fit needs >= 4 points, got {len(pairs)}")
    ns = np.array([p[0] for p in pairs])
    es = np.array([p[1] for p in pairs])
    if np.any(ns < 2.0) and with_log_term:
        raise NumericFailure("log-corrected fit needs all n >= 2")
    if np.any(es <= 0.0):
        raise NumericFailure("order fit needs positive error values")
    span = math.log10(float(np.max(ns)) / float(np.min(ns)))
    if span < 1.5:
        raise NumericFailure(
            f"order fit needs n spanning >= 1.5 decades, got {span:.3g}"
        )
    ln_n = np.log(ns)
    ln_e = np.log(es)
    cols = [np.ones_like(ln_n), ln_n]
    if with_log_term:
        cols.append(np.log(ln_n))
    design = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(design, ln_e, rcond=None)
    fitted = design @ coef
    ss_res = float(np.sum((ln_e - fitted) ** 2))
    ss_tot = float(np.sum((ln_e - np.mean(ln_e)) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return OrderFit(
        model=LOG_CORRECTED if with_log_term else PURE_POWER,
        slope=float(coef[1]),
        log_exponent=float(coef[2]) if with_log_term else 0.0,
        intercept=float(coef[0]),
        r_squared=r_squared,
    )


def scaled_coefficient(n: int, r: float, xi_r: float, e_r_pow_r: float) -> float:
    """``n^(r/xi_r) * e^r`` — the quantity whose boundedness window the
    reports track.  Evaluated in log space: ``n`` may be astronomically
    large (constructive codebook cardinalities) while ``e^r`` underflows,
    and only the product is meaningful."""
    if e_r_pow_r == 0.0:
        return 0.0
    if e_r_pow_r < 0.0:
        raise ValueError(f"e^r must be nonnegative, got {e_r_pow_r}")
    log_val = (r / xi_r) * math.log(n) + math.log(e_r_pow_r)
    try:
        return math.exp(log_val)
    except OverflowError:
        return math.inf
