"""Quantization exponents from weighted moment sums.

For weights ``w_i`` and contraction ratios ``c_i`` the map
``s -> sum_i (w_i * c_i**r) ** (s / (s + r))`` is strictly decreasing in
``s`` (every base is < 1), so the value where it crosses 1 is a
well-defined exponent.  A system carries two of these: one from its
seed weights/inner ratios, one from its branch weights/outer ratios.
Which of the two is larger decides the asymptotic order of the optimal
quantization error, so the classification is exposed alongside the raw
roots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import CASE_I, IsmSystem, NumericFailure

XI1_GREATER = "XI1_GREATER"
XI2_GREATER = "XI2_GREATER"
EQUAL = "EQUAL"

PURE_POWER = "pure_power"
LOG_CORRECTED = "log_corrected"


@dataclass(frozen=True)
class OrderPrediction:
    """Predicted decay of the n-point error: ``n**power`` times, in the
    log-corrected regime, a ``log n`` factor with exponent between
    ``log_exponent_lower / (xi + r)``-normalized bounds."""

    model: str
    power_exponent: float
    log_exponent_lower: float
    log_exponent_upper: float


@dataclass(frozen=True)
class XiReport:
    """Both exponents at a given moment order plus the regime call."""

    r: float
    xi1: float
    xi2: float
    xi_r: float
    regime: str
    equal_tol: float
    order: OrderPrediction


def _validate_inputs(weights, ratios, r) -> tuple[tuple[float, ...], tuple[float, ...]]:
    w = tuple(float(x) for x in weights)
    c = tuple(float(x) for x in ratios)
    if len(w) != len(c):
        raise ValueError("weights and ratios must have equal length")
    if len(w) < 2:
        raise ValueError("need at least two (weight, ratio) pairs")
    if min(w) <= 0.0:
        raise ValueError("weights must be strictly positive")
    if not all(0.0 < x < 1.0 for x in c):
        raise ValueError("ratios must lie strictly in (0, 1)")
    if r <= 0.0:
        raise ValueError(f"moment order r must be positive, got {r}")
    return w, c


def moment_sum(weights, ratios, r: float, s: float) -> float:
    """``sum_i (w_i * c_i**r) ** (s / (s + r))``, computed in log space."""
    w, c = _validate_inputs(weights, ratios, r)
    if s < 0.0:
        raise ValueError(f"s must be non-negative, got {s}")
    x = s / (s + r)
    return math.fsum(
        math.exp(x * (math.log(wi) + r * math.log(ci))) for wi, ci in zip(w, c)
    )


def solve_xi(weights, ratios, r: float, tol: float = 1e-12,
             max_iter: int = 200, newton: bool = False) -> float:
    """Root of ``moment_sum(w, c, r, s) = 1`` in ``s``.

    Bracket by doubling, then bisect to absolute tolerance ``tol``.
    With ``newton=True`` a safeguarded Newton step is tried first at
    each iteration and falls back to bisection whenever it leaves the
    bracket, so the bracket guarantee is preserved.
    Requires ``w_i * c_i**r < 1`` for every ``i`` (otherwise the sum
    never drops below 1 and there is no root).
    """
    w, c = _validate_inputs(weights, ratios, r)
    logbase = [math.log(wi) + r * math.log(ci) for wi, ci in zip(w, c)]
    if max(logbase) >= 0.0:
        raise NumericFailure(
            "no root: some w_i * c_i**r >= 1, the moment sum never crosses 1"
        )

    def f(s: float) -> float:
        x = s / (s + r)
        return math.fsum(math.exp(x * lb) for lb in logbase) - 1.0

    def fprime(s: float) -> float:
        x = s / (s + r)
        dx = r / (s + r) ** 2
        return math.fsum(math.exp(x * lb) * lb for lb in logbase) * dx

    lo = 0.0  # moment_sum at s=0 is len(w) >= 2, so f(lo) > 0
    hi = 1.0
    for _ in range(max_iter):
        if f(hi) < 0.0:
            break
        lo = hi
        hi *= 2.0
    else:
        raise NumericFailure("failed to bracket the exponent by doubling")

    for _ in range(max_iter):
        if hi - lo <= tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if newton:
            ref = 0.5 * (lo + hi)
            fv, dv = f(ref), fprime(ref)
            if dv != 0.0:
                cand = ref - fv / dv
                if lo < cand < hi:
                    mid = cand
        f_mid = f(mid)
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
    raise NumericFailure(
        f"exponent not bracketed to {tol} within {max_iter} iterations"
    )


def xi_derivative(weights, ratios, r: float, xi: float | None = None,
                  tol: float = 1e-13) -> float:
    """d(xi)/dr by implicit differentiation of the defining root equation.

    ``xi' = (xi / r) * sum_i A_i (log w_i - xi log c_i)
                     / sum_i A_i (log w_i + r  log c_i)``
    with ``A_i = (w_i c_i**r) ** (xi / (xi + r))``.  The denominator
    vanishes only on a degenerate locus; that is reported as a failure
    rather than patched over.
    """
    w, c = _validate_inputs(weights, ratios, r)
    if xi is None:
        xi = solve_xi(w, c, r, tol=tol)
    x = xi / (xi + r)
    num_terms = []
    den_terms = []
    scale_terms = []
    for wi, ci in zip(w, c):
        lw, lc = math.log(wi), math.log(ci)
        a = math.exp(x * (lw + r * lc))
        num_terms.append(a * (lw - xi * lc))
        den_terms.append(a * (lw + r * lc))
        scale_terms.append(abs(a * (lw + r * lc)))
    den = math.fsum(den_terms)
    if abs(den) <= 1e-12 * math.fsum(scale_terms):
        raise NumericFailure("xi derivative undefined: denominator vanishes")
    return (xi / r) * math.fsum(num_terms) / den


def _system_vectors(sys: IsmSystem) -> tuple[tuple, tuple, tuple, tuple]:
    return sys.t, sys.inner_scales, sys.p[1:], sys.outer_scales


def classify(sys: IsmSystem, r: float, equal_tol: float = 1e-9,
             solver_tol: float = 1e-12) -> XiReport:
    """Solve both exponents and call the regime.

    ``EQUAL`` means the two roots agree within ``equal_tol``; the
    predicted order is then log-corrected.  ``CASE_I`` only bounds the
    log exponent (lower 1, upper ``(xi + r) / xi``); ``CASE_II`` pins it
    at ``(xi + r) / xi``.
    """
    t_w, t_c, p_w, p_c = _system_vectors(sys)
    xi1 = solve_xi(t_w, t_c, r, tol=solver_tol)
    xi2 = solve_xi(p_w, p_c, r, tol=solver_tol)
    xi_r = max(xi1, xi2)
    if abs(xi1 - xi2) <= equal_tol:
        regime = EQUAL
        upper = (xi_r + r) / xi_r
        lower = 1.0 if sys.case_tag == CASE_I else upper
        order = OrderPrediction(LOG_CORRECTED, -r / xi_r, lower, upper)
    else:
        regime = XI1_GREATER if xi1 > xi2 else XI2_GREATER
        order = OrderPrediction(PURE_POWER, -r / xi_r, 0.0, 0.0)
    return XiReport(r, xi1, xi2, xi_r, regime, equal_tol, order)


def find_crossing_r(sys: IsmSystem, r_lo: float, r_hi: float,
                    gap_tol: float = 1e-10, max_iter: int = 200) -> float:
    """Bisect ``r`` for the point where the two exponents coincide.

    Requires the endpoint regimes to differ (neither EQUAL).  Stops as
    soon as ``|xi1 - xi2|`` at the midpoint drops below ``gap_tol``.
    """
    if not 0.0 < r_lo < r_hi:
        raise ValueError("need 0 < r_lo < r_hi")

    def gap(r: float) -> float:
        t_w, t_c, p_w, p_c = _system_vectors(sys)
        return solve_xi(t_w, t_c, r, tol=1e-13) - solve_xi(p_w, p_c, r, tol=1e-13)

    g_lo, g_hi = gap(r_lo), gap(r_hi)
    if abs(g_lo) <= gap_tol or abs(g_hi) <= gap_tol or (g_lo > 0.0) == (g_hi > 0.0):
        raise NumericFailure(
            f"no regime change on [{r_lo}, {r_hi}]: gaps {g_lo:.3g}, {g_hi:.3g}"
        )
    for _ in range(max_iter):
        mid = 0.5 * (r_lo + r_hi)
        g_mid = gap(mid)
        if abs(g_mid) <= gap_tol:
            return mid
        if (g_mid > 0.0) == (g_lo > 0.0):
            r_lo, g_lo = mid, g_mid
        else:
            r_hi, g_hi = mid, g_mid
    raise NumericFailure(f"crossing not located to {gap_tol} in {max_iter} bisections")


def hausdorff_dim_nu(t, ratios) -> float:
    """Similarity dimension of the seed measure:
    ``sum t_i log t_i / sum t_i log c_i``."""
    w, c = _validate_inputs(t, ratios, 1.0)
    num = math.fsum(ti * math.log(ti) for ti in w)
    den = math.fsum(ti * math.log(ci) for ti, ci in zip(w, c))
    return num / den
