"""Named runtime checks covering the package's documented invariants.

Each check returns ``pass``/``fail``/``skip`` plus a one-line detail.
Checks are deterministic: all randomness derives from the config seed
via fixed spawn keys.  The CLI ``verify`` subcommand renders the rows
to CSV and exits nonzero on any failure.  Checks that apply only to one
system kind report ``skip`` on the other.
"""

from __future__ import annotations

import math
import os
import tempfile
from itertools import product

import numpy as np

from . import antichain, antichain2, dims, model, quantizer, words
from .config import RunConfig

# spawn_key purposes (distinct from the empirical-curve purpose 2)
_SPAWN_FREQ = 90
_SPAWN_SUPPORT = 91
_SPAWN_PLUGIN_A = 92
_SPAWN_PLUGIN_B = 93
_SPAWN_MC_UPPER = 94
_SPAWN_DOMINANCE = 95
_SPAWN_WINDOW = 96

_FREQ_SAMPLES = 1_000_000
_PLUGIN_SMALL = 1_000_000
_PLUGIN_LARGE = 10_000_000
_MC_SAMPLES = 100_000


class _Ctx:
    """Shared lazily-computed inputs for the checks."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.sys = cfg.system
        self._cache: dict = {}

    @property
    def r_check(self) -> float:
        return min(self.cfg.r_list, key=lambda r: (abs(r - 2.0), r))

    def rng(self, purpose: int, idx: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=self.cfg.seed, spawn_key=(purpose, idx)
        )
        return np.random.default_rng(ss)

    def classify(self, r: float) -> dims.XiReport:
        key = ("classify", r)
        if key not in self._cache:
            self._cache[key] = dims.classify(self.sys, r)
        return self._cache[key]

    def lam_record(self, k: int, r: float) -> antichain.AntichainRecord:
        key = ("lam", k, r)
        if key not in self._cache:
            self._cache[key] = antichain.build_lambda(
                self.sys, k, r, xi_r=self.classify(r).xi_r, store_words=True
            )
        return self._cache[key]

    def freq_batch(self) -> np.ndarray:
        if "freq" not in self._cache:
            self._cache["freq"] = model.sample_batch(
                self.sys, _FREQ_SAMPLES, self.rng(_SPAWN_FREQ)
            )
        return self._cache["freq"]

    def constructive_codebook(self) -> tuple[np.ndarray, float]:
        """A small constructive codebook and its rigorous upper bound."""
        if "book" not in self._cache:
            r = self.r_check
            if self.sys.case_tag == model.CASE_I:
                rec = self.lam_record(10, r)
                book = antichain.codebook_from_antichain(self.sys, rec)
                bound = rec.upper_bound
            else:
                book = antichain2.patch_codebook(self.sys, 2, r)
                bound = antichain2.lambda_tilde(
                    self.sys, 2, r, xi_r=self.classify(r).xi_r
                ).upper_bound
            self._cache["book"] = (book, bound)
        return self._cache["book"]


def _all_words(alphabet: int, max_len: int):
    for length in range(max_len + 1):
        for syms in product(range(1, alphabet + 1), repeat=length):
            yield words.Word(alphabet, syms)


def _brute_force_maximal(ac: words.AntichainSet) -> bool:
    members = set(w.symbols for w in ac.members)
    for a in members:
        for b in members:
            if a != b and len(a) <= len(b) and b[: len(a)] == a:
                return False
    depth = ac.max_length()
    for syms in product(range(1, ac.alphabet_size + 1), repeat=depth):
        if not any(syms[: len(m)] == m for m in members):
            return False
    return True


# ---------------------------------------------------------------------------
# words


def check_words_split_roundtrip(ctx: _Ctx):
    n = ctx.sys.n_outer
    for w in _all_words(n, 5):
        for h in range(len(w) + 1):
            back = words.concat(words.prefix(w, h), words.drop_prefix(w, h))
            if back != w:
                return "fail", f"split broke at {words.format_word(w)}, h={h}"
    return "pass", "prefix/suffix splits rebuild every word to length 5"


def check_words_antichain_weight_unity(ctx: _Ctx):
    sys = ctx.sys
    r = ctx.r_check
    if sys.case_tag == model.CASE_I:
        ac = ctx.lam_record(100, r).words
    else:
        ac = antichain2.build_gamma(sys, 3, r)
    w = [p / (1.0 - sys.p[0]) for p in sys.p[1:]]
    total = math.fsum(
        math.exp(math.fsum(math.log(w[s - 1]) for s in m.symbols))
        for m in ac.members
    )
    err = abs(total - 1.0)
    status = "pass" if err <= 1e-12 else "fail"
    return status, f"sum of branch weights over {len(ac)} words: 1 {err:+.2e}"


def check_words_maximality_brute(ctx: _Ctx):
    cases = []
    for alphabet in (2, 3):
        full = [
            words.Word(alphabet, s)
            for s in product(range(1, alphabet + 1), repeat=2)
        ]
        cases.append(words.AntichainSet(alphabet, tuple(full)))
        cases.append(words.AntichainSet(alphabet, tuple(full[:-1])))
        lopsided = [words.Word(alphabet, (1,))] + [
            words.Word(alphabet, (i,) + s)
            for i in range(2, alphabet + 1)
            for s in product(range(1, alphabet + 1), repeat=1)
        ]
        cases.append(words.AntichainSet(alphabet, tuple(lopsided)))
    if ctx.sys.case_tag == model.CASE_I:
        cases.append(ctx.lam_record(10, ctx.r_check).words)
    else:
        cases.append(antichain2.build_gamma(ctx.sys, 2, ctx.r_check))
    for ac in cases:
        fast = words.verify_maximal_antichain(ac)
        slow = _brute_force_maximal(ac)
        if fast != slow:
            return "fail", (
                f"disagreement on {len(ac)} words over alphabet "
                f"{ac.alphabet_size}: fast={fast}, brute={slow}"
            )
    return "pass", f"{len(cases)} antichains agree with brute force"


# ---------------------------------------------------------------------------
# model


def check_model_separation(ctx: _Ctx):
    rep = model.check_separation(ctx.sys)
    status = "pass" if rep.passed else "fail"
    return status, rep.detail


def check_model_normalize_idempotent(ctx: _Ctx):
    again = model.normalize(ctx.sys)
    err = abs(again.normalization_scale - 1.0)
    status = "pass" if err <= 1e-12 else "fail"
    return status, f"second normalization factor: 1 {err:+.2e}"


def check_model_case1_additivity(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_I:
        return "skip", "seed rides the branch family only in case I"
    root = math.fsum(
        model.cylinder_mass_case1(sys, words.Word(sys.n_outer, (i,)))
        for i in range(1, sys.n_outer + 1)
    )
    if abs(root - 1.0) > 1e-12:
        return "fail", f"level-1 masses sum to {root!r}"
    worst = 0.0
    for w in _all_words(sys.n_outer, 5):
        parent = model.cylinder_mass_case1(sys, w)
        kids = math.fsum(
            model.cylinder_mass_case1(sys, words.concat(
                w, words.Word(sys.n_outer, (i,))))
            for i in range(1, sys.n_outer + 1)
        )
        worst = max(worst, abs(kids - parent))
    status = "pass" if worst <= 1e-12 else "fail"
    return status, f"max |children - parent| mass gap: {worst:.2e}"


def check_model_case1_closed_vs_recursive(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_I:
        return "skip", "closed form applies to case I"
    worst = 0.0
    for w in _all_words(sys.n_outer, 12):
        a = model.cylinder_mass_case1(sys, w)
        b = model.cylinder_mass_case1_recursive(sys, w)
        worst = max(worst, abs(a - b))
    status = "pass" if worst <= 1e-12 else "fail"
    return status, f"max closed-vs-recursive gap to depth 12: {worst:.2e}"


def check_model_case2_total_mass(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_II:
        return "skip", "depth expansion applies to case II"
    branch = math.fsum(sys.p[1:])
    level = 1.0
    partial = []
    for _ in range(41):
        partial.append(sys.p[0] * level)
        level *= branch
    err = abs(math.fsum(partial) + level - 1.0)
    status = "pass" if err <= 1e-10 else "fail"
    return status, f"depth-40 mass + geometric tail: 1 {err:+.2e}"


def check_model_sampling_frequency(ctx: _Ctx):
    sys = ctx.sys
    if sys.dimension != 1:
        return "skip", "interval membership tests are one-dimensional"
    pts = ctx.freq_batch()
    x = pts[:, 0]
    targets: list[tuple[str, float, model.Hull]] = []
    if sys.case_tag == model.CASE_I:
        for w in _all_words(sys.n_outer, 2):
            if len(w) == 0:
                continue
            mass = model.cylinder_mass_case1(sys, w)
            if mass >= 0.01:
                hull = model.attractor_hull(sys)
                box = model.word_map(sys, w).apply(
                    np.array([hull.lo, hull.hi])
                )
                lo = float(np.min(box)) - 1e-12
                hi = float(np.max(box)) + 1e-12
                targets.append(
                    (words.format_word(w), mass, model.Hull(
                        (lo,), (hi,), overapprox=True))
                )
    else:
        hull = model.attractor_hull(sys)
        for i in range(1, sys.n_outer + 1):
            w = words.Word(sys.n_outer, (i,))
            mass = model.patch_mass_case2(sys, w)
            box = model.word_map(sys, w).apply(np.array([hull.lo, hull.hi]))
            lo = float(np.min(box)) - 1e-12
            hi = float(np.max(box)) + 1e-12
            targets.append(
                (words.format_word(w), mass,
                 model.Hull((lo,), (hi,), overapprox=True))
            )
        seed = model.seed_hull(sys)
        targets.append(
            ("seed", sys.p[0],
             model.Hull((seed.lo[0] - 1e-12,), (seed.hi[0] + 1e-12,),
                        overapprox=True))
        )
    m = len(x)
    worst = ""
    for name, mass, box in targets:
        inside = np.count_nonzero((x >= box.lo[0]) & (x <= box.hi[0]))
        freq = inside / m
        tol = 4.0 * math.sqrt(mass * (1.0 - mass) / m)
        if abs(freq - mass) > tol:
            worst = (
                f"{name}: frequency {freq:.6f} vs mass {mass:.6f} "
                f"(tol {tol:.2e})"
            )
            return "fail", worst
    return "pass", f"{len(targets)} cylinder frequencies within 4 sigma"


def check_model_sampler_support(ctx: _Ctx):
    hull = model.attractor_hull(ctx.sys)
    pts = ctx.freq_batch()
    lo = np.array(hull.lo) - 1e-12
    hi = np.array(hull.hi) + 1e-12
    ok = np.all((pts >= lo) & (pts <= hi))
    status = "pass" if ok else "fail"
    return status, f"{pts.shape[0]} samples inside the attractor hull"


# ---------------------------------------------------------------------------
# dims


def _family_vectors(sys: model.IsmSystem) -> list[tuple[str, tuple, tuple]]:
    return [
        ("seed", tuple(sys.t), tuple(sys.inner_scales)),
        ("branch", tuple(sys.p[1:]), tuple(sys.outer_scales)),
    ]


def check_dims_root_residual(ctx: _Ctx):
    worst = 0.0
    for r in ctx.cfg.r_list:
        for _, w, c in _family_vectors(ctx.sys):
            xi = dims.solve_xi(w, c, r)
            worst = max(worst, abs(dims.moment_sum(w, c, r, xi) - 1.0))
    status = "pass" if worst <= 1e-10 else "fail"
    return status, f"max |moment_sum(xi) - 1| over both families: {worst:.2e}"


def check_dims_moment_monotone(ctx: _Ctx):
    _, w, c = _family_vectors(ctx.sys)[0]
    r = ctx.r_check
    grid = [0.1 * i for i in range(51)]
    vals = [dims.moment_sum(w, c, r, s) for s in grid]
    ok = all(a > b for a, b in zip(vals, vals[1:]))
    status = "pass" if ok else "fail"
    return status, f"strictly decreasing over {len(grid)} grid points"


def check_dims_xi2_shrinks(ctx: _Ctx):
    sys = ctx.sys
    vals = [
        dims.solve_xi(sys.p[1:], sys.outer_scales, r)
        for r in (0.1, 0.05, 0.01)
    ]
    ok = vals[0] > vals[1] > vals[2]
    status = "pass" if ok else "fail"
    return status, (
        "branch-family exponent at r=0.1/0.05/0.01: "
        + "/".join(f"{v:.4f}" for v in vals)
    )


def check_dims_derivative_vs_fd(ctx: _Ctx):
    sys = ctx.sys
    r = ctx.r_check
    w, c = tuple(sys.t), tuple(sys.inner_scales)
    der = dims.xi_derivative(w, c, r)
    h = 1e-4 * r
    fd = (
        dims.solve_xi(w, c, r + h, tol=1e-13)
        - dims.solve_xi(w, c, r - h, tol=1e-13)
    ) / (2.0 * h)
    scale = max(abs(fd), 1e-9)
    rel = abs(der - fd) / scale
    status = "pass" if rel <= 1e-6 else "fail"
    return status, f"implicit {der:.6e} vs finite-difference {fd:.6e}"


def check_dims_relabel_invariance(ctx: _Ctx):
    sys = ctx.sys
    r = ctx.r_check
    outer = list(reversed(sys.outer_maps))
    p = [sys.p[0]] + list(reversed(sys.p[1:]))
    if sys.case_tag == model.CASE_I:
        flipped = model.case_i_system(
            tuple(outer), tuple(p), tuple(reversed(sys.t))
        )
    else:
        flipped = model.case_ii_system(
            tuple(outer), tuple(p), tuple(reversed(sys.inner_maps)),
            tuple(reversed(sys.t)),
        )
    a = ctx.classify(r).regime
    b = dims.classify(model.normalize(flipped), r).regime
    status = "pass" if a == b else "fail"
    return status, f"regime under relabeling: {a} vs {b}"


def check_dims_xi1_above_seed_dimension(ctx: _Ctx):
    sys = ctx.sys
    base = dims.hausdorff_dim_nu(sys.t, sys.inner_scales)
    for r in (0.5, 1.0, 2.0, 5.0):
        xi1 = dims.solve_xi(sys.t, sys.inner_scales, r)
        if xi1 < base - 1e-12:
            return "fail", f"xi1 at r={r} is {xi1:.6f} < {base:.6f}"
    return "pass", f"xi1 stays above the seed dimension {base:.6f}"


# ---------------------------------------------------------------------------
# antichain (case I)


def check_antichain_maximality(ctx: _Ctx):
    if ctx.sys.case_tag != model.CASE_I:
        return "skip", "case-I construction"
    for k in (1, 10, 100):
        rec = ctx.lam_record(k, ctx.r_check)
        if not words.verify_maximal_antichain(rec.words):
            return "fail", f"k={k} antichain is not maximal"
    return "pass", "levels 1/10/100 are maximal antichains"


def check_antichain_threshold_sandwich(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_I:
        return "skip", "case-I construction"
    r = ctx.r_check
    k = 100
    rec = ctx.lam_record(k, r)
    eta_lo, _ = antichain.eta_bounds(sys, r)
    thresh = eta_lo / k
    for w in rec.words.members:
        mass = model.cylinder_mass_case1(sys, w)
        log_s = math.fsum(
            math.log(sys.outer_maps[s - 1].scale) for s in w.symbols
        )
        h = mass * math.exp(r * log_s)
        if not (thresh * eta_lo * (1.0 - 1e-12) <= h < thresh):
            return "fail", (
                f"word {words.format_word(w)}: h={h:.3e} outside "
                f"[{thresh * eta_lo:.3e}, {thresh:.3e})"
            )
    return "pass", f"all {rec.n_kr} words inside the one-step window"


def check_antichain_partition_unity(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_I:
        return "skip", "case-I construction"
    rec = ctx.lam_record(100, ctx.r_check)
    total = math.fsum(
        model.cylinder_mass_case1(sys, w) for w in rec.words.members
    )
    err = abs(total - 1.0)
    status = "pass" if err <= 1e-10 else "fail"
    return status, f"cylinder masses over {rec.n_kr} words: 1 {err:+.2e}"


def check_antichain_exponent_unity(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_I:
        return "skip", "case-I construction"
    r = ctx.r_check
    rec = ctx.lam_record(100, r)
    xi2 = dims.solve_xi(sys.p[1:], sys.outer_scales, r)
    x = xi2 / (xi2 + r)
    total = math.fsum(
        math.exp(x * math.fsum(
            math.log(sys.p[s]) + r * math.log(sys.outer_maps[s - 1].scale)
            for s in w.symbols
        ))
        for w in rec.words.members
    )
    err = abs(total - 1.0)
    status = "pass" if err <= 1e-9 else "fail"
    return status, f"branch power sum over {rec.n_kr} words: 1 {err:+.2e}"


def check_antichain_depth_log_window(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_I:
        return "skip", "case-I construction"
    r = ctx.r_check
    ratios = []
    for k in (10, 100, 1000, 10000):
        rec = antichain.build_lambda(
            sys, k, r, xi_r=ctx.classify(r).xi_r, store_words=False
        )
        ratios.append(rec.l1 / math.log(k))
        ratios.append(rec.l2 / math.log(k))
    lo, hi = min(ratios), max(ratios)
    ok = 0.05 <= lo <= hi <= 20.0
    status = "pass" if ok else "fail"
    return status, f"depth/log k window over four levels: [{lo:.3f}, {hi:.3f}]"


# ---------------------------------------------------------------------------
# antichain2 (case II)


def check_a2_gamma_maximality(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_II:
        return "skip", "case-II construction"
    for k in (1, 2, 3):
        ac = antichain2.build_gamma(sys, k, ctx.r_check)
        if not words.verify_maximal_antichain(ac):
            return "fail", f"k={k} outer antichain is not maximal"
    return "pass", "levels 1/2/3 are maximal outer antichains"


def check_a2_gamma_exponent_unity(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_II:
        return "skip", "case-II construction"
    r = ctx.r_check
    ac = antichain2.build_gamma(sys, 3, r)
    xi2 = dims.solve_xi(sys.p[1:], sys.outer_scales, r)
    x = xi2 / (xi2 + r)
    total = math.fsum(
        math.exp(x * math.fsum(
            math.log(sys.p[s]) + r * math.log(sys.outer_maps[s - 1].scale)
            for s in w.symbols
        ))
        for w in ac.members
    )
    err = abs(total - 1.0)
    status = "pass" if err <= 1e-9 else "fail"
    return status, f"branch power sum over {len(ac)} words: 1 {err:+.2e}"


def check_a2_gamma_sigma(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_II:
        return "skip", "case-II construction"
    r = ctx.r_check
    k = 2
    psi = antichain2.build_psi(sys, k, r, enumerate_words=True)
    pi_lo, _ = antichain2.pi_bounds(sys, r)
    log_thresh = k * math.log(pi_lo)
    for sigma in psi.words:
        inner = antichain2.build_gamma_sigma(sys, sigma, k, r)
        lw = math.fsum(
            math.log(sys.p[s]) + r * math.log(sys.outer_maps[s - 1].scale)
            for s in sigma.symbols
        )
        if lw < log_thresh:
            if len(inner) != 0:
                return "fail", (
                    f"pre-crossed word {words.format_word(sigma)} got a "
                    f"nonempty inner antichain"
                )
        elif not words.verify_maximal_antichain(inner):
            return "fail", (
                f"inner antichain below {words.format_word(sigma)} "
                f"is not maximal"
            )
    return "pass", f"inner antichains below all {psi.count} live words check"


def check_a2_psi_ancestry(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_II:
        return "skip", "case-II construction"
    r = ctx.r_check
    k = 2
    gamma = antichain2.build_gamma(sys, k, r)
    psi = antichain2.build_psi(sys, k, r, enumerate_words=True)
    rec = antichain2.lambda_tilde(sys, k, r, xi_r=ctx.classify(r).xi_r)
    for w in psi.words:
        if len(w) < rec.l1:
            continue
        if not any(words.is_predecessor(w, g) and len(w) < len(g)
                   for g in gamma.members):
            return "fail", (
                f"live word {words.format_word(w)} has no antichain "
                f"descendant"
            )
    return "pass", f"all live words at depth >= {rec.l1} lead to the antichain"


def check_a2_dp_vs_explicit(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_II:
        return "skip", "case-II construction"
    r = ctx.r_check
    xi = ctx.classify(r).xi_r
    for k in (1, 2, 3):
        a = antichain2.lambda_tilde(sys, k, r, xi_r=xi)
        b = antichain2.lambda_tilde_explicit(sys, k, r, xi_r=xi)
        if (a.gamma_count, a.psi_count, a.pair_count, a.l1, a.l2) != (
            b.gamma_count, b.psi_count, b.pair_count, b.l1, b.l2
        ):
            return "fail", f"count mismatch at k={k}: {a} vs {b}"
        for fa, fb in ((a.lambda_tilde, b.lambda_tilde),
                       (a.upper_bound, b.upper_bound)):
            if abs(fa - fb) > 1e-12 * max(abs(fa), abs(fb), 1e-300):
                return "fail", f"sum mismatch at k={k}: {fa!r} vs {fb!r}"
    return "pass", "aggregation matches explicit enumeration at k=1..3"


def check_a2_depth_pinch(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_II:
        return "skip", "case-II construction"
    r = ctx.r_check
    pi_lo, pi_hi = antichain2.pi_bounds(sys, r)
    xi = ctx.classify(r).xi_r
    for k in (1, 2, 3, 5, 10):
        rec = antichain2.lambda_tilde(sys, k, r, xi_r=xi)
        left = rec.l1 * math.log(pi_lo) < k * math.log(pi_lo)
        right = k * math.log(pi_lo) <= (rec.l2 - 1) * math.log(pi_hi)
        if not (left and right):
            return "fail", (
                f"k={k}: depth pinch violated (l1={rec.l1}, l2={rec.l2})"
            )
    return "pass", "depth pinch holds verbatim at k=1/2/3/5/10"


def check_a2_lambda_ge_one(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_II:
        return "skip", "case-II construction"
    r = ctx.r_check
    xi = ctx.classify(r).xi_r
    worst = math.inf
    for k in ctx.cfg.k_list:
        rec = antichain2.lambda_tilde(sys, k, r, xi_r=xi)
        worst = min(worst, rec.lambda_tilde)
    status = "pass" if worst >= 1.0 - 1e-12 else "fail"
    return status, f"smallest level sum over configured k: {worst:.6f}"


def check_a2_phi_growth(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_II:
        return "skip", "case-II construction"
    r = ctx.r_check
    xi = ctx.classify(r).xi_r
    ratios = []
    prev = None
    for k in (1, 2, 3, 4, 5, 6):
        rec = antichain2.lambda_tilde(sys, k, r, xi_r=xi)
        ratios.append(math.log(rec.phi_kr) / k)
        if prev is not None and rec.phi_kr < prev:
            return "fail", f"phi dropped between k={k - 1} and k={k}"
        prev = rec.phi_kr
    lo, hi = min(ratios), max(ratios)
    ok = lo > 0.0 and hi / lo <= 50.0
    status = "pass" if ok else "fail"
    return status, f"log(phi)/k window over k=1..6: [{lo:.3f}, {hi:.3f}]"


def check_a2_equal_sandwich(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_II:
        return "skip", "case-II construction"
    if ctx.cfg.crossing_bracket is None:
        return "skip", "no crossing bracket configured"
    lo, hi = ctx.cfg.crossing_bracket
    r_star = dims.find_crossing_r(sys, lo, hi)
    rep = dims.classify(sys, r_star)
    if rep.regime != dims.EQUAL:
        return "fail", f"crossing search landed in regime {rep.regime}"
    for k in (2, 3, 5):
        rec = antichain2.lambda_tilde(sys, k, r_star, xi_r=rep.xi_r)
        if not (rec.l1 <= rec.lambda_tilde <= rec.l2 + 2):
            return "fail", (
                f"k={k}: sum {rec.lambda_tilde:.4f} outside "
                f"[{rec.l1}, {rec.l2 + 2}]"
            )
    return "pass", f"depth sandwich holds at the crossing r={r_star:.6f}"


def check_a2_mc_upper(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_II:
        return "skip", "case-II construction"
    r = ctx.r_check
    book, bound = ctx.constructive_codebook()
    samples = model.sample_batch(sys, _MC_SAMPLES, ctx.rng(_SPAWN_MC_UPPER))
    mean, std = quantizer.estimate_error(samples, book, r)
    limit = bound * 1.05 + 4.0 * std
    status = "pass" if mean <= limit else "fail"
    return status, (
        f"patch codebook ({book.shape[0]} points): estimate {mean:.4e} "
        f"vs bound {bound:.4e}"
    )


def check_antichain_mc_upper(ctx: _Ctx):
    sys = ctx.sys
    if sys.case_tag != model.CASE_I:
        return "skip", "case-I construction"
    r = ctx.r_check
    book, bound = ctx.constructive_codebook()
    samples = model.sample_batch(sys, _MC_SAMPLES, ctx.rng(_SPAWN_MC_UPPER))
    mean, std = quantizer.estimate_error(samples, book, r)
    limit = bound * 1.05 + 4.0 * std
    status = "pass" if mean <= limit else "fail"
    return status, (
        f"cylinder codebook ({book.shape[0]} points): estimate {mean:.4e} "
        f"vs bound {bound:.4e}"
    )


# ---------------------------------------------------------------------------
# quantizer


def check_quantizer_plugin_consistency(ctx: _Ctx):
    sys = ctx.sys
    r = ctx.r_check
    book, _ = ctx.constructive_codebook()
    small = model.sample_batch(
        sys, _PLUGIN_SMALL, ctx.rng(_SPAWN_PLUGIN_A)
    )
    m1, s1 = quantizer.estimate_error(small, book, r)
    chunks = []
    done = 0
    idx = 0
    while done < _PLUGIN_LARGE:
        take = min(_PLUGIN_LARGE - done, 1_000_000)
        batch = model.sample_batch(sys, take, ctx.rng(_SPAWN_PLUGIN_B, idx))
        _, d2 = quantizer._nearest(batch, book)
        chunks.append(np.power(d2, r / 2.0))
        done += take
        idx += 1
    vals = np.concatenate(chunks)
    m2 = float(np.mean(vals))
    s2 = float(np.std(vals, ddof=1) / math.sqrt(vals.size))
    tol = 4.0 * math.hypot(s1, s2)
    status = "pass" if abs(m1 - m2) <= tol else "fail"
    return status, (
        f"1e6-sample estimate {m1:.6e} vs 1e7-sample {m2:.6e} "
        f"(tol {tol:.2e})"
    )


def check_quantizer_feasibility_dominance(ctx: _Ctx):
    sys = ctx.sys
    r = ctx.r_check
    book, _ = ctx.constructive_codebook()
    n = book.shape[0]
    samples = model.sample_batch(sys, 20_000, ctx.rng(_SPAWN_DOMINANCE))
    supplied, _ = quantizer.estimate_error(samples, book, r)
    est = quantizer.optimize_codebook(
        samples, n, r, restarts=2, rng=ctx.rng(_SPAWN_DOMINANCE, 1),
        warm_starts=(book,),
    )
    ok = est.e_r_pow_r <= supplied * (1.0 + 1e-12) + 1e-300
    status = "pass" if ok else "fail"
    return status, (
        f"optimized {est.e_r_pow_r:.6e} <= supplied codebook "
        f"{supplied:.6e} at n={n}"
    )


def check_quantizer_scale_covariance(ctx: _Ctx):
    sys = ctx.sys
    r = ctx.r_check
    book, _ = ctx.constructive_codebook()
    samples = model.sample_batch(sys, 10_000, ctx.rng(_SPAWN_DOMINANCE, 2))
    base, _ = quantizer.estimate_error(samples, book, r)
    scaled, _ = quantizer.estimate_error(2.0 * samples, 2.0 * book, r)
    expect = 2.0 ** r * base
    rel = abs(scaled - expect) / max(abs(expect), 1e-300)
    status = "pass" if rel <= 1e-12 else "fail"
    return status, f"doubling all points scales e^r by 2^r {rel:+.2e}"


def check_quantizer_window_bounded(ctx: _Ctx):
    sys = ctx.sys
    r = ctx.r_check
    rep = ctx.classify(r)
    if rep.regime == dims.EQUAL:
        return "skip", "window claim applies away from the crossing"
    if sys.case_tag == model.CASE_I:
        sizes = sorted({
            ctx.lam_record(k, r).n_kr for k in (1, 100, 1000, 10000)
        })
    else:
        xi = rep.xi_r
        sizes = sorted({
            antichain2.lambda_tilde(sys, k, r, xi_r=xi).phi_kr
            for k in (1, 2, 3)
        })
    samples = model.sample_batch(sys, 20_000, ctx.rng(_SPAWN_WINDOW))
    coeffs = []
    for pos, n in enumerate(sizes):
        est = quantizer.optimize_codebook(
            samples, n, r, restarts=2, rng=ctx.rng(_SPAWN_WINDOW, pos + 1)
        )
        coeffs.append(
            quantizer.scaled_coefficient(n, r, rep.xi_r, est.e_r_pow_r)
        )
    lo, hi = min(coeffs), max(coeffs)
    ok = lo > 0.0 and hi / lo <= 100.0
    status = "pass" if ok else "fail"
    return status, (
        f"n^(r/xi)*e^r window over n in {sizes}: [{lo:.3e}, {hi:.3e}]"
    )


# ---------------------------------------------------------------------------
# cli


def check_cli_determinism(ctx: _Ctx):
    from . import cli

    cfg = ctx.cfg
    small = {
        "system": _system_dict(ctx),
        "r_list": [ctx.r_check],
        "k_list": [1, 2],
        "n_list": [2, 4, 8, 16, 32, 64],
        "samples": 4000,
        "restarts": 2,
        "seed": cfg.seed,
        "toggles": {"warm_start": False},
    }
    import json

    outputs = []
    with tempfile.TemporaryDirectory() as tmp:
        cfg_path = os.path.join(tmp, "probe.json")
        with open(cfg_path, "w", encoding="utf-8") as fh:
            json.dump(small, fh)
        for run in ("a", "b"):
            out_dir = os.path.join(tmp, run)
            code = cli.main([
                "empirical", "--config", cfg_path, "--out", out_dir,
            ])
            if code != 0:
                return "fail", f"probe run exited {code}"
            with open(os.path.join(out_dir, "empirical.csv"), "rb") as fh:
                outputs.append(fh.read())
    status = "pass" if outputs[0] == outputs[1] else "fail"
    return status, "two identical-config runs produced identical CSV bytes"


def _system_dict(ctx: _Ctx) -> dict:
    sys = ctx.sys

    def map_dict(m: model.Similitude) -> dict:
        return {
            "scale": m.scale,
            "rotation": m.rotation,
            "translation": list(m.translation),
        }

    data = {
        "case": "I" if sys.case_tag == model.CASE_I else "II",
        "dimension": sys.dimension,
        "outer_maps": [map_dict(m) for m in sys.outer_maps],
        "p": list(sys.p),
        "t": list(sys.t),
    }
    if sys.case_tag == model.CASE_II:
        data["inner_maps"] = [map_dict(m) for m in sys.inner_maps]
    return data


CHECKS: list[tuple[str, object]] = [
    ("words.split_roundtrip", check_words_split_roundtrip),
    ("words.antichain_weight_unity", check_words_antichain_weight_unity),
    ("words.maximality_brute_force", check_words_maximality_brute),
    ("model.separation", check_model_separation),
    ("model.normalize_idempotent", check_model_normalize_idempotent),
    ("model.case1_additivity", check_model_case1_additivity),
    ("model.case1_closed_vs_recursive", check_model_case1_closed_vs_recursive),
    ("model.case2_total_mass", check_model_case2_total_mass),
    ("model.sampling_frequency", check_model_sampling_frequency),
    ("model.sampler_support", check_model_sampler_support),
    ("dims.root_residual", check_dims_root_residual),
    ("dims.moment_monotone", check_dims_moment_monotone),
    ("dims.xi2_shrinks", check_dims_xi2_shrinks),
    ("dims.derivative_vs_fd", check_dims_derivative_vs_fd),
    ("dims.relabel_invariance", check_dims_relabel_invariance),
    ("dims.xi1_above_seed_dimension", check_dims_xi1_above_seed_dimension),
    ("antichain.maximality", check_antichain_maximality),
    ("antichain.threshold_sandwich", check_antichain_threshold_sandwich),
    ("antichain.partition_unity", check_antichain_partition_unity),
    ("antichain.exponent_unity", check_antichain_exponent_unity),
    ("antichain.depth_log_window", check_antichain_depth_log_window),
    ("antichain.mc_upper", check_antichain_mc_upper),
    ("antichain2.gamma_maximality", check_a2_gamma_maximality),
    ("antichain2.gamma_exponent_unity", check_a2_gamma_exponent_unity),
    ("antichain2.gamma_sigma", check_a2_gamma_sigma),
    ("antichain2.psi_ancestry", check_a2_psi_ancestry),
    ("antichain2.dp_vs_explicit", check_a2_dp_vs_explicit),
    ("antichain2.depth_pinch", check_a2_depth_pinch),
    ("antichain2.lambda_ge_one", check_a2_lambda_ge_one),
    ("antichain2.phi_growth", check_a2_phi_growth),
    ("antichain2.equal_sandwich", check_a2_equal_sandwich),
    ("antichain2.mc_upper", check_a2_mc_upper),
    ("quantizer.plugin_consistency", check_quantizer_plugin_consistency),
    ("quantizer.feasibility_dominance", check_quantizer_feasibility_dominance),
    ("quantizer.scale_covariance", check_quantizer_scale_covariance),
    ("quantizer.window_bounded", check_quantizer_window_bounded),
    ("cli.determinism", check_cli_determinism),
]


def run_checks(cfg: RunConfig, fast: bool = False):
    """Run the suite; yields (name, status, detail) rows in order.

    ``fast`` skips the two sampling-heavy consistency checks; the CLI
    default runs everything.
    """
    heavy = {"quantizer.plugin_consistency", "model.sampling_frequency",
             "model.sampler_support"}
    ctx = _Ctx(cfg)
    rows = []
    for name, fn in CHECKS:
        if fast and name in heavy:
            rows.append((name, "skip", "skipped in fast mode"))
            continue
        try:
            status, detail = fn(ctx)
        except Exception as exc:  # noqa: BLE001 - report, don't crash the suite
            status, detail = "fail", f"raised {type(exc).__name__}: {exc}"
        rows.append((name, status, detail))
    return rows
