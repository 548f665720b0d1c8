"""Threshold antichains of the cylinder tree (same-family seed systems).

Each word ``w`` carries the weight ``h(w) = mass(w) * diam_scale(w)**r``
(cylinder mass times the composed contraction ratio to the r-th power).
The weight is strictly decreasing along branches, so for a threshold
``T = eta_lower / k`` the set of words that drop below ``T`` while their
parent stays at or above it is a maximal antichain.  Its weighted sums
feed both the constructive error upper bound and the boundedness / log
growth diagnostics; construction and all comparisons run in log space
because the weights underflow doubles long before the interesting range
of ``k`` is reached.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass

import numpy as np

from . import dims
from .model import CASE_I, IsmSystem, NumericFailure, attractor_hull, word_map
from .words import (
    MAX_DEPTH,
    AntichainSet,
    CardinalityCapExceeded,
    DepthCapExceeded,
    Word,
)

#: Default cap on explicitly stored antichain members.
DEFAULT_CAP = 5_000_000


@dataclass(frozen=True)
class AntichainRecord:
    """One threshold antichain with its aggregate statistics.

    ``words`` is None when the construction ran in aggregates-only
    mode (or the store flag was off); the counts and sums are always
    populated.  ``lambda_kr`` is the sum of ``h(w) ** (xi_r/(xi_r+r))``
    over members, ``upper_bound`` the plain sum of ``h(w)``.
    """

    k: int
    r: float
    words: AntichainSet | None
    n_kr: int
    lambda_kr: float
    upper_bound: float
    l1: int
    l2: int


def eta_bounds(sys: IsmSystem, r: float) -> tuple[float, float]:
    """Per-step decay bounds of the branch weight ``h``.

    Extending a word by symbol ``i`` multiplies ``h`` by a factor
    between ``min(p0*t_i + p_i, t_i) * s_i**r`` and
    ``max(p0*t_i + p_i, t_i) * s_i**r``; the returned pair is the
    (min, max) of these over the alphabet.
    """
    _require_case_i(sys, "eta_bounds")
    if r <= 0.0:
        raise ValueError(f"moment order r must be positive, got {r}")
    lows = []
    highs = []
    for i, m in enumerate(sys.outer_maps):
        mix = sys.p[0] * sys.t[i] + sys.p[i + 1]
        sr = m.scale**r
        lows.append(min(mix, sys.t[i]) * sr)
        highs.append(max(mix, sys.t[i]) * sr)
    return min(lows), max(highs)


def _require_case_i(sys: IsmSystem, op: str) -> None:
    if sys.case_tag != CASE_I:
        from .model import CaseMismatch

        raise CaseMismatch(f"{op} requires a CASE_I system")


def build_lambda(sys: IsmSystem, k: int, r: float, xi_r: float | None = None,
                 store_words: bool = True, cap: int = DEFAULT_CAP,
                 max_depth: int | None = None) -> AntichainRecord:
    """Construct the threshold antichain at level ``k``.

    Emits exactly the words whose weight first drops below
    ``eta_lower / k``.  The walk asserts the monotone decay of ``h``
    along each branch at every step — a violation means the system
    's first-level pieces overlap and the mass recursion is unsound,
    so it aborts with a diagnostic instead of returning garbage.
    ``k`` may be an arbitrarily large integer; thresholds are handled
    as logarithms.
    """
    _require_case_i(sys, "build_lambda")
    try:
        k = int(operator.index(k))
    except TypeError as exc:
        raise ValueError(f"k must be a positive integer, got {k!r}") from exc
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    depth_cap = MAX_DEPTH if max_depth is None else max_depth
    eta_lo, _ = eta_bounds(sys, r)
    log_thresh = math.log(eta_lo) - math.log(k)
    if xi_r is None:
        xi_r = dims.classify(sys, r).xi_r
    x = xi_r / (xi_r + r)
    log_scales = [math.log(m.scale) for m in sys.outer_maps]

    members: list[Word] | None = [] if store_words else None
    lam_terms: list[float] = []
    upper_terms: list[float] = []
    count = 0
    l_min = depth_cap + 1
    l_max = 0

    # Stack entries: (symbols, mass, branch weight, sum of log scales, log h).
    stack: list[tuple[tuple[int, ...], float, float, float, float]] = [
        ((), 1.0, 1.0, 0.0, 0.0)
    ]
    while stack:
        syms, mass, p_word, log_s, log_h = stack.pop()
        if len(syms) >= depth_cap:
            raise DepthCapExceeded(
                f"antichain construction for k={k} needs depth > {depth_cap}"
            )
        # Reverse order so the (LIFO) stack walks branches in lexicographic
        # order, keeping emission order deterministic.
        for i in range(sys.n_outer, 0, -1):
            t_i = sys.t[i - 1]
            p_i = sys.p[i]
            child_mass = t_i * mass + p_word * (sys.p[0] * t_i + p_i - t_i)
            child_logs = log_s + log_scales[i - 1]
            child_logh = math.log(child_mass) + r * child_logs
            if child_logh > log_h + 1e-9:
                raise NumericFailure(
                    "branch weight increased along a descent; the system "
                    "violates the separation assumptions this construction "
                    "relies on"
                )
            child = syms + (i,)
            if child_logh < log_thresh:
                count += 1
                if count > cap:
                    raise CardinalityCapExceeded(
                        f"antichain for k={k}, r={r} exceeds cap {cap}"
                    )
                lam_terms.append(math.exp(x * child_logh))
                upper_terms.append(math.exp(child_logh))
                l_min = min(l_min, len(child))
                l_max = max(l_max, len(child))
                if members is not None:
                    members.append(Word(sys.n_outer, child))
            else:
                stack.append((child, child_mass, p_word * p_i, child_logs,
                              child_logh))

    words = None
    if members is not None:
        words = AntichainSet(sys.n_outer, tuple(members))
    return AntichainRecord(
        k=k,
        r=r,
        words=words,
        n_kr=count,
        lambda_kr=math.fsum(lam_terms),
        upper_bound=math.fsum(upper_terms),
        l1=l_min,
        l2=l_max,
    )


def error_bounds(rec: AntichainRecord) -> tuple[float, float]:
    """(upper, lower_raw) error figures attached to an antichain.

    ``upper`` is a rigorous n-point error bound at ``n = n_kr``: one
    reproduction point per member cylinder already achieves it.  The
    matching lower bound of the theory holds only up to a non-explicit
    constant, so ``lower_raw`` returns the same weighted sum purely as
    an order-of-magnitude reference — it must never be quoted as a
    certified lower bound.
    """
    return rec.upper_bound, rec.upper_bound


def codebook_from_antichain(sys: IsmSystem, rec: AntichainRecord,
                            anchor: str = "fixed_point") -> np.ndarray:
    """One reproduction point per member cylinder.

    ``anchor="fixed_point"`` places the image of the first map's fixed
    point; ``anchor="midpoint"`` (dimension 1 only) places cylinder
    midpoints, which is the natural choice for interval supports.
    """
    if rec.words is None:
        raise ValueError("record carries no explicit words (aggregates only)")
    if anchor == "fixed_point":
        base = np.array(sys.outer_maps[0].fixed_point())
    elif anchor == "midpoint":
        if sys.dimension != 1:
            raise ValueError("midpoint anchor is only defined in dimension 1")
        base = np.array(attractor_hull(sys).midpoint())
    else:
        raise ValueError(f"unknown anchor {anchor!r}")
    return np.array([word_map(sys, w).apply(base) for w in rec.words.members])


def lambda_series(sys: IsmSystem, r: float, k_list, xi_r: float | None = None,
                  aggregates_only: bool = False, cap: int = DEFAULT_CAP,
                  max_depth: int | None = None) -> list[AntichainRecord]:
    """Antichain records for each ``k``, sharing one exponent solve."""
    if xi_r is None:
        xi_r = dims.classify(sys, r).xi_r
    return [
        build_lambda(sys, int(k), r, xi_r=xi_r, store_words=not aggregates_only,
                     cap=cap, max_depth=max_depth)
        for k in k_list
    ]
