"""Threshold constructions for systems with a separate inner family.

Outer words here carry the multiplicative weight ``p_sigma * s_sigma**r``
(branch probabilities times outer contraction ratios — note the ratios
are the outer ones by convention, also for the threshold constants) and
inner words carry ``t_rho * c_rho**r`` with the empty inner word at
weight 1.  For a level ``k`` the threshold is ``pi_lower ** k`` where
``pi_lower`` is the smallest per-symbol weight across both families:

* ``Gamma`` — outer words that cross the threshold while their parent
  does not: a maximal antichain;
* ``Gamma(sigma)`` — for a still-live outer word, the inner words whose
  combined weight crosses: a maximal inner antichain (empty once sigma
  itself has crossed);
* ``Psi`` — all still-live outer words (every proper ancestor of a
  ``Gamma`` member, plus the root).

Cardinalities grow exponentially in ``k``, so aggregate statistics are
computed by dynamic programming over symbol multisets: the weight of a
word depends only on how many times each symbol occurs, and the number
of words sharing a multiset is an exact integer multinomial.  Explicit
enumerations are kept for small ``k`` and used to cross-check the
aggregation.  All threshold comparisons run on logarithms; the raw
weights underflow doubles already at moderate ``k``.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass

import numpy as np

from . import dims
from .model import CASE_II, IsmSystem, word_map
from .words import (
    MAX_DEPTH,
    AntichainSet,
    CardinalityCapExceeded,
    DepthCapExceeded,
    Word,
)

DEFAULT_CAP = 5_000_000


@dataclass(frozen=True)
class PsiResult:
    """Count of still-live outer words, with optional enumeration."""

    count: int
    words: tuple[Word, ...] | None


@dataclass(frozen=True)
class CaseTwoRecord:
    """Aggregates of one level-``k`` construction.

    ``phi_kr = gamma_count + psi_count`` is the headline size statistic;
    ``pair_count`` additionally counts the (outer word, inner word)
    pairs behind the mixed sum — that is also the cardinality of the
    inner part of the patch codebook realizing ``upper_bound``.
    ``lambda_tilde`` is the mixed power sum at exponent
    ``xi_r / (xi_r + r)``; ``upper_bound`` the same double sum at
    exponent 1 (it may underflow to 0.0 at large ``k``; it is exact as
    a logarithm internally).
    """

    k: int
    r: float
    gamma_count: int
    psi_count: int
    phi_kr: int
    lambda_tilde: float
    l1: int
    l2: int
    upper_bound: float
    pair_count: int


def _require_case_ii(sys: IsmSystem, op: str) -> None:
    if sys.case_tag != CASE_II:
        from .model import CaseMismatch

        raise CaseMismatch(f"{op} requires a CASE_II system")


def _outer_log_weights(sys: IsmSystem, r: float) -> list[float]:
    return [
        math.log(sys.p[i + 1]) + r * math.log(m.scale)
        for i, m in enumerate(sys.outer_maps)
    ]


def _inner_log_weights(sys: IsmSystem, r: float) -> list[float]:
    return [
        math.log(sys.t[j]) + r * math.log(m.scale)
        for j, m in enumerate(sys.inner_maps)
    ]


def _check_r(r: float) -> None:
    if r <= 0.0:
        raise ValueError(f"moment order r must be positive, got {r}")


def _check_k(k) -> int:
    try:
        k = int(operator.index(k))
    except TypeError as exc:
        raise ValueError(f"k must be a positive integer, got {k!r}") from exc
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    return k


def pi_bounds(sys: IsmSystem, r: float) -> tuple[float, float]:
    """(min, max) per-symbol weight across both families."""
    _require_case_ii(sys, "pi_bounds")
    _check_r(r)
    logs = _outer_log_weights(sys, r) + _inner_log_weights(sys, r)
    return math.exp(min(logs)), math.exp(max(logs))


def _log_threshold(sys: IsmSystem, k: int, r: float) -> float:
    logs = _outer_log_weights(sys, r) + _inner_log_weights(sys, r)
    return k * min(logs)


# ---------------------------------------------------------------------------
# Explicit enumerations (small k; oracles for the aggregation)


def build_gamma(sys: IsmSystem, k: int, r: float, cap: int = DEFAULT_CAP,
                max_depth: int | None = None) -> AntichainSet:
    """Outer threshold antichain, enumerated explicitly."""
    _require_case_ii(sys, "build_gamma")
    _check_r(r)
    k = _check_k(k)
    depth_cap = MAX_DEPTH if max_depth is None else max_depth
    log_w = _outer_log_weights(sys, r)
    thresh = _log_threshold(sys, k, r)
    members: list[Word] = []
    stack: list[tuple[tuple[int, ...], float]] = [((), 0.0)]
    while stack:
        syms, lw = stack.pop()
        if len(syms) >= depth_cap:
            raise DepthCapExceeded(
                f"outer antichain for k={k} needs depth > {depth_cap}"
            )
        for i in range(sys.n_outer, 0, -1):
            child_lw = lw + log_w[i - 1]
            child = syms + (i,)
            if child_lw < thresh:
                members.append(Word(sys.n_outer, child))
                if len(members) > cap:
                    raise CardinalityCapExceeded(
                        f"outer antichain for k={k}, r={r} exceeds cap {cap}"
                    )
            else:
                stack.append((child, child_lw))
    return AntichainSet(sys.n_outer, tuple(members))


def build_gamma_sigma(sys: IsmSystem, sigma: Word, k: int, r: float,
                      cap: int = DEFAULT_CAP,
                      max_depth: int | None = None) -> AntichainSet:
    """Inner threshold antichain below the outer word ``sigma``.

    The empty inner word carries weight 1, so the construction starts
    from the budget left over after ``sigma``.  If ``sigma`` has already
    crossed the threshold the result is empty.
    """
    _require_case_ii(sys, "build_gamma_sigma")
    _check_r(r)
    k = _check_k(k)
    if sigma.alphabet_size != sys.n_outer:
        from .model import CaseMismatch

        raise CaseMismatch("sigma must address the outer family")
    depth_cap = MAX_DEPTH if max_depth is None else max_depth
    log_w_out = _outer_log_weights(sys, r)
    lw_sigma = 0.0
    for s in sigma.symbols:
        lw_sigma += log_w_out[s - 1]
    budget = _log_threshold(sys, k, r) - lw_sigma
    if budget > 0.0:
        return AntichainSet(sys.n_inner, ())
    log_w_in = _inner_log_weights(sys, r)
    members: list[Word] = []
    stack: list[tuple[tuple[int, ...], float]] = [((), 0.0)]
    while stack:
        syms, lw = stack.pop()
        if len(syms) >= depth_cap:
            raise DepthCapExceeded(
                f"inner antichain for k={k} needs depth > {depth_cap}"
            )
        for j in range(sys.n_inner, 0, -1):
            child_lw = lw + log_w_in[j - 1]
            child = syms + (j,)
            if child_lw < budget:
                members.append(Word(sys.n_inner, child))
                if len(members) > cap:
                    raise CardinalityCapExceeded(
                        f"inner antichain for k={k}, r={r} exceeds cap {cap}"
                    )
            else:
                stack.append((child, child_lw))
    return AntichainSet(sys.n_inner, tuple(members))


def build_psi(sys: IsmSystem, k: int, r: float, include_root: bool = True,
              enumerate_words: bool = False, cap: int = DEFAULT_CAP,
              max_depth: int | None = None) -> PsiResult:
    """Still-live outer words: every proper ancestor of the antichain.

    These are exactly the words whose weight has not yet crossed the
    threshold (the root included unless ``include_root`` is off — the
    variant that starts the union at depth 1 shifts the count by one
    and changes nothing else).  The count comes from the multiset
    aggregation; the explicit word list is optional and cap-guarded.
    """
    _require_case_ii(sys, "build_psi")
    _check_r(r)
    k = _check_k(k)
    agg = _aggregate(sys, k, r, x=0.0, max_depth=max_depth)
    count = agg.psi_count if include_root else agg.psi_count - 1
    words: tuple[Word, ...] | None = None
    if enumerate_words:
        if count > cap:
            raise CardinalityCapExceeded(
                f"psi enumeration for k={k}, r={r} exceeds cap {cap}"
            )
        depth_cap = MAX_DEPTH if max_depth is None else max_depth
        log_w = _outer_log_weights(sys, r)
        thresh = _log_threshold(sys, k, r)
        found: list[Word] = []
        stack: list[tuple[tuple[int, ...], float]] = [((), 0.0)]
        while stack:
            syms, lw = stack.pop()
            if syms or include_root:
                found.append(Word(sys.n_outer, syms))
            if len(syms) >= depth_cap:
                raise DepthCapExceeded(
                    f"psi enumeration for k={k} needs depth > {depth_cap}"
                )
            for i in range(sys.n_outer, 0, -1):
                child_lw = lw + log_w[i - 1]
                if child_lw >= thresh:
                    stack.append((syms + (i,), child_lw))
        words = tuple(sorted(found, key=lambda w: w.symbols))
    return PsiResult(count, words)


# ---------------------------------------------------------------------------
# Multiset aggregation


@dataclass(frozen=True)
class _Aggregates:
    gamma_count: int
    psi_count: int
    pair_count: int
    l1: int
    l2: int
    lambda_psi: float
    lambda_gamma: float
    log_upper: float


def _live_multisets(log_w: list[float], thresh: float, depth_cap: int):
    """Yield ``(counts, weight_log, multiplicity)`` for every multiset of
    symbols whose words are still live (``weight_log >= thresh``).

    The dot product is accumulated left to right over symbol classes so
    that equal multisets always produce bit-identical weights, which
    keeps boundary comparisons consistent with the explicit walks.
    """
    n_sym = len(log_w)
    max_per = max(log_w)
    if max_per >= 0.0:
        raise ValueError("all per-symbol log weights must be negative")
    if thresh / max_per > depth_cap:
        raise DepthCapExceeded(
            f"live multisets need depth > {depth_cap}"
        )
    counts = [0] * n_sym

    def rec(idx: int, partial: float, total: int, multi: int):
        if idx == n_sym:
            yield tuple(counts), partial, multi
            return
        c = 0
        acc = partial
        tot = total
        mult = multi
        while acc >= thresh:
            counts[idx] = c
            yield from rec(idx + 1, acc, tot, mult)
            c += 1
            acc = partial + c * log_w[idx]
            tot = total + c
            mult = multi * math.comb(total + c, c)
        counts[idx] = 0

    yield from rec(0, 0.0, 0, 1)


def _log_sum_exp(terms: list[float]) -> float:
    if not terms:
        return -math.inf
    m = max(terms)
    if m == -math.inf:
        return m
    return m + math.log(math.fsum(math.exp(t - m) for t in terms))


def _aggregate(sys: IsmSystem, k: int, r: float, x: float,
               max_depth: int | None = None) -> _Aggregates:
    """One pass of the multiset dynamic program.

    ``x`` is the exponent applied to weights in the power sums (pass 0
    when only counts are needed).  Inner sums are memoized on the exact
    remaining budget, which collapses to a handful of distinct values
    when branch weights repeat.
    """
    depth_cap = MAX_DEPTH if max_depth is None else max_depth
    log_w_out = _outer_log_weights(sys, r)
    log_w_in = _inner_log_weights(sys, r)
    thresh = _log_threshold(sys, k, r)

    inner_cache: dict[float, tuple[int, float, float]] = {}

    def inner_sums(budget: float) -> tuple[int, float, float]:
        """(pair count, power sum at x, log of plain sum) of the inner
        antichain at ``budget``."""
        got = inner_cache.get(budget)
        if got is not None:
            return got
        count = 0
        power_terms: list[float] = []
        log_terms: list[float] = []
        for _, lw, multi in _live_multisets(log_w_in, budget, depth_cap):
            for b in log_w_in:
                if lw + b < budget:
                    count += multi
                    power_terms.append(multi * math.exp(x * (lw + b)))
                    log_terms.append(math.log(multi) + lw + b)
        out = (count, math.fsum(power_terms), _log_sum_exp(log_terms))
        inner_cache[budget] = out
        return out

    gamma_count = 0
    psi_count = 0
    pair_count = 0
    l1 = depth_cap + 1
    l2 = 0
    lam_psi_terms: list[float] = []
    lam_gamma_terms: list[float] = []
    log_upper_terms: list[float] = []

    for counts, lw, multi in _live_multisets(log_w_out, thresh, depth_cap):
        depth = sum(counts)
        psi_count += multi
        log_multi = math.log(multi)
        for a in log_w_out:
            if lw + a < thresh:
                gamma_count += multi
                l1 = min(l1, depth + 1)
                l2 = max(l2, depth + 1)
                lam_gamma_terms.append(multi * math.exp(x * (lw + a)))
                log_upper_terms.append(log_multi + lw + a)
        in_count, in_power, in_log = inner_sums(thresh - lw)
        pair_count += multi * in_count
        lam_psi_terms.append(multi * math.exp(x * lw) * in_power)
        if in_log > -math.inf:
            log_upper_terms.append(log_multi + lw + in_log)

    return _Aggregates(
        gamma_count=gamma_count,
        psi_count=psi_count,
        pair_count=pair_count,
        l1=l1,
        l2=l2,
        lambda_psi=math.fsum(lam_psi_terms),
        lambda_gamma=math.fsum(lam_gamma_terms),
        log_upper=_log_sum_exp(log_upper_terms),
    )


def lambda_tilde(sys: IsmSystem, k: int, r: float, xi_r: float | None = None,
                 include_root: bool = True,
                 max_depth: int | None = None) -> CaseTwoRecord:
    """Mixed power sum and size statistics at level ``k``.

    The sum runs over all (still-live outer word, crossing inner word)
    pairs plus the outer antichain itself, each weight raised to
    ``xi_r / (xi_r + r)``.  Computed by multiset aggregation, so ``k``
    is limited by the depth cap rather than by the (astronomical)
    cardinalities.  ``include_root=False`` drops the root from the live
    set: counts shift by one and the root's inner antichain leaves the
    sum; no asymptotic statement changes.
    """
    _require_case_ii(sys, "lambda_tilde")
    _check_r(r)
    k = _check_k(k)
    if xi_r is None:
        xi_r = dims.classify(sys, r).xi_r
    x = xi_r / (xi_r + r)
    agg = _aggregate(sys, k, r, x=x, max_depth=max_depth)

    lam = agg.lambda_psi + agg.lambda_gamma
    psi_count = agg.psi_count
    pair_count = agg.pair_count
    log_upper = agg.log_upper
    if not include_root:
        psi_count -= 1
        root_count, root_power, root_log = _root_inner_sums(
            sys, k, r, x, max_depth
        )
        pair_count -= root_count
        lam -= root_power
        # Remove the root's contribution from the log-space total.
        if root_log > -math.inf:
            rest = math.exp(log_upper) - math.exp(root_log)
            log_upper = math.log(rest) if rest > 0.0 else -math.inf

    return CaseTwoRecord(
        k=k,
        r=r,
        gamma_count=agg.gamma_count,
        psi_count=psi_count,
        phi_kr=agg.gamma_count + psi_count,
        lambda_tilde=lam,
        l1=agg.l1,
        l2=agg.l2,
        upper_bound=math.exp(log_upper) if log_upper > -math.inf else 0.0,
        pair_count=pair_count,
    )


def _root_inner_sums(sys: IsmSystem, k: int, r: float, x: float,
                     max_depth: int | None):
    depth_cap = MAX_DEPTH if max_depth is None else max_depth
    log_w_in = _inner_log_weights(sys, r)
    thresh = _log_threshold(sys, k, r)
    count = 0
    power_terms: list[float] = []
    log_terms: list[float] = []
    for _, lw, multi in _live_multisets(log_w_in, thresh, depth_cap):
        for b in log_w_in:
            if lw + b < thresh:
                count += multi
                power_terms.append(multi * math.exp(x * (lw + b)))
                log_terms.append(math.log(multi) + lw + b)
    return count, math.fsum(power_terms), _log_sum_exp(log_terms)


def lambda_tilde_explicit(sys: IsmSystem, k: int, r: float,
                          xi_r: float | None = None,
                          include_root: bool = True,
                          cap: int = DEFAULT_CAP,
                          max_depth: int | None = None) -> CaseTwoRecord:
    """Reference implementation by explicit enumeration (small ``k``).

    Same contract as :func:`lambda_tilde`; used to cross-check the
    multiset aggregation word by word.
    """
    _require_case_ii(sys, "lambda_tilde_explicit")
    _check_r(r)
    k = _check_k(k)
    if xi_r is None:
        xi_r = dims.classify(sys, r).xi_r
    x = xi_r / (xi_r + r)
    log_w_out = _outer_log_weights(sys, r)
    thresh = _log_threshold(sys, k, r)

    gamma = build_gamma(sys, k, r, cap=cap, max_depth=max_depth)
    psi = build_psi(sys, k, r, include_root=include_root,
                    enumerate_words=True, cap=cap, max_depth=max_depth)
    assert psi.words is not None

    log_w_in = _inner_log_weights(sys, r)
    lam_terms: list[float] = []
    log_upper_terms: list[float] = []
    pair_count = 0
    for w in gamma.members:
        lw = 0.0
        for s in w.symbols:
            lw += log_w_out[s - 1]
        lam_terms.append(math.exp(x * lw))
        log_upper_terms.append(lw)
    for sigma in psi.words:
        lw_sigma = 0.0
        for s in sigma.symbols:
            lw_sigma += log_w_out[s - 1]
        inner = build_gamma_sigma(sys, sigma, k, r, cap=cap, max_depth=max_depth)
        for rho in inner.members:
            lw_rho = 0.0
            for s in rho.symbols:
                lw_rho += log_w_in[s - 1]
            pair_count += 1
            lam_terms.append(math.exp(x * (lw_sigma + lw_rho)))
            log_upper_terms.append(lw_sigma + lw_rho)

    lengths = [len(w) for w in gamma.members]
    log_upper = _log_sum_exp(log_upper_terms)
    return CaseTwoRecord(
        k=k,
        r=r,
        gamma_count=len(gamma),
        psi_count=psi.count,
        phi_kr=len(gamma) + psi.count,
        lambda_tilde=math.fsum(lam_terms),
        l1=min(lengths),
        l2=max(lengths),
        upper_bound=math.exp(log_upper) if log_upper > -math.inf else 0.0,
        pair_count=pair_count,
    )


def patch_codebook(sys: IsmSystem, k: int, r: float, include_root: bool = True,
                   cap: int = DEFAULT_CAP,
                   max_depth: int | None = None) -> np.ndarray:
    """Reproduction points realizing the constructive upper bound.

    One point per (live outer word, crossing inner word) patch — the
    image of the first inner map's fixed point — plus one point per
    outer antichain cylinder (image of the first outer map's fixed
    point).  The total cardinality is ``pair_count + gamma_count``;
    the expected r-th power distance of the measure to this set is at
    most ``upper_bound`` of the matching record.  Cap-guarded using the
    aggregate counts before anything is enumerated.
    """
    _require_case_ii(sys, "patch_codebook")
    _check_r(r)
    k = _check_k(k)
    agg = _aggregate(sys, k, r, x=0.0, max_depth=max_depth)
    total = agg.pair_count + agg.gamma_count
    if total > cap:
        raise CardinalityCapExceeded(
            f"patch codebook for k={k}, r={r} has {total} points, cap {cap}"
        )
    psi = build_psi(sys, k, r, include_root=include_root,
                    enumerate_words=True, cap=cap, max_depth=max_depth)
    assert psi.words is not None
    gamma = build_gamma(sys, k, r, cap=cap, max_depth=max_depth)
    inner_anchor = np.array(sys.inner_maps[0].fixed_point())
    outer_anchor = np.array(sys.outer_maps[0].fixed_point())
    points: list[np.ndarray] = []
    for sigma in psi.words:
        f_sigma = word_map(sys, sigma, family="outer")
        inner = build_gamma_sigma(sys, sigma, k, r, cap=cap, max_depth=max_depth)
        for rho in inner.members:
            g_rho = word_map(sys, rho, family="inner")
            points.append(f_sigma.apply(g_rho.apply(inner_anchor)))
    for gam in gamma.members:
        points.append(word_map(sys, gam, family="outer").apply(outer_anchor))
    return np.array(points)


def lambda_tilde_series(sys: IsmSystem, r: float, k_list,
                        xi_r: float | None = None, include_root: bool = True,
                        max_depth: int | None = None) -> list[CaseTwoRecord]:
    """Records for each ``k``, sharing one exponent solve."""
    if xi_r is None:
        xi_r = dims.classify(sys, r).xi_r
    return [
        lambda_tilde(sys, int(k), r, xi_r=xi_r, include_root=include_root,
                     max_depth=max_depth)
        for k in k_list
    ]
