"""Contracting similitude systems and the mixed measures they carry.

A system couples a finite family of outer contractions with a probability
vector ``p = (p0, p1, ..., pN)`` and a second probability vector ``t``
over an inner family.  The measure it defines splits mass ``p0`` onto a
seed measure (carried by the inner family) and pushes mass ``p_i``
through outer map ``i``, recursively.  Two shapes are supported:

* ``CASE_I`` — the seed measure lives on the same family (inner maps are
  the outer maps, weighted by ``t``);
* ``CASE_II`` — the seed measure lives on a separate inner family with
  its own weights, supported away from the outer images.

Everything downstream (mass formulas, threshold antichains, sampling)
assumes the images of the support hull under distinct maps are pairwise
disjoint; :func:`check_separation` decides that with explicit gaps.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

from .words import MAX_DEPTH, Word

CASE_I = "CASE_I"
CASE_II = "CASE_II"

_HULL_TOL = 1e-13
_HULL_MAX_ITER = 400


class CaseMismatch(ValueError):
    """Operation applied to a system of the wrong shape."""


class DegenerateSystem(ValueError):
    """System parameters violate a structural requirement."""


class NumericFailure(RuntimeError):
    """A named numeric invariant or solver requirement failed."""


@dataclass(frozen=True, slots=True)
class Similitude:
    """Affine contraction ``x -> scale * R x + translation``.

    In dimension 1 ``rotation`` is an orientation sign (+1 or -1); in
    dimension 2 it is an angle in radians.  ``scale`` may be 1 only for
    the identity element produced by :func:`identity_map`.
    """

    scale: float
    rotation: float
    translation: tuple[float, ...]

    def __post_init__(self) -> None:
        if not 0.0 < self.scale <= 1.0:
            raise ValueError(f"scale must lie in (0, 1], got {self.scale}")
        if len(self.translation) not in (1, 2):
            raise ValueError("translation must have 1 or 2 coordinates")
        if self.dimension == 1 and self.rotation not in (1.0, -1.0):
            raise ValueError(
                f"dimension-1 rotation must be +1 or -1, got {self.rotation}"
            )

    @property
    def dimension(self) -> int:
        return len(self.translation)

    def _unit(self) -> complex:
        if self.dimension == 1:
            return complex(self.rotation)
        return cmath.exp(1j * self.rotation)

    def _translation_c(self) -> complex:
        if self.dimension == 1:
            return complex(self.translation[0])
        return complex(self.translation[0], self.translation[1])

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Apply the map to an ``(m, q)`` array (or a single ``(q,)`` point)."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        if pts.shape[1] != self.dimension:
            raise ValueError(
                f"points have dimension {pts.shape[1]}, map has {self.dimension}"
            )
        if self.dimension == 1:
            out = self.scale * self.rotation * pts + self.translation[0]
        else:
            z = pts[:, 0] + 1j * pts[:, 1]
            w = self.scale * self._unit() * z + self._translation_c()
            out = np.stack([w.real, w.imag], axis=1)
        return out[0] if single else out

    def after(self, other: "Similitude") -> "Similitude":
        """Composition ``self ∘ other`` (apply ``other`` first)."""
        if self.dimension != other.dimension:
            raise ValueError("cannot compose maps of different dimensions")
        moved = self.apply(np.asarray(other.translation, dtype=float))
        if self.dimension == 1:
            rot = self.rotation * other.rotation
        else:
            rot = self.rotation + other.rotation
        return Similitude(self.scale * other.scale, rot, tuple(float(x) for x in moved))

    def fixed_point(self) -> tuple[float, ...]:
        """The unique fixed point; requires ``scale < 1``."""
        denom = 1.0 - self.scale * self._unit()
        if abs(denom) < 1e-15:
            raise DegenerateSystem("identity-like map has no unique fixed point")
        z = self._translation_c() / denom
        if self.dimension == 1:
            return (z.real,)
        return (z.real, z.imag)


def identity_map(dimension: int) -> Similitude:
    """Neutral element for composition (scale 1; not a contraction)."""
    if dimension == 1:
        return Similitude(1.0, 1.0, (0.0,))
    return Similitude(1.0, 0.0, (0.0, 0.0))


@dataclass(frozen=True)
class IsmSystem:
    """A validated outer/inner contraction system with mixing weights.

    ``p[0]`` is the seed weight and must be strictly positive: systems
    without the seed term degenerate to plain self-similar measures and
    are rejected rather than silently handled.
    """

    case_tag: str
    dimension: int
    outer_maps: tuple[Similitude, ...]
    p: tuple[float, ...]
    inner_maps: tuple[Similitude, ...]
    t: tuple[float, ...]
    normalization_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.case_tag not in (CASE_I, CASE_II):
            raise ValueError(f"unknown case tag {self.case_tag!r}")
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if len(self.outer_maps) < 2:
            raise DegenerateSystem("need at least two outer maps")
        if len(self.inner_maps) < 2:
            raise DegenerateSystem("need at least two inner maps")
        for m in self.outer_maps + self.inner_maps:
            if m.dimension != self.dimension:
                raise DegenerateSystem("map dimension differs from system dimension")
            if not 0.0 < m.scale < 1.0:
                raise DegenerateSystem(
                    f"contraction scale must lie strictly in (0, 1), got {m.scale}"
                )
        if len(self.p) != len(self.outer_maps) + 1:
            raise DegenerateSystem(
                f"p must have {len(self.outer_maps) + 1} entries (seed weight "
                f"first), got {len(self.p)}"
            )
        if min(self.p) <= 0.0:
            raise DegenerateSystem("all entries of p must be strictly positive")
        if self.p[0] >= 1.0:
            raise DegenerateSystem("seed weight p[0] must be < 1")
        if abs(math.fsum(self.p) - 1.0) > 1e-12:
            raise DegenerateSystem(
                f"p must sum to 1 within 1e-12, got {math.fsum(self.p)!r}"
            )
        if len(self.t) != len(self.inner_maps):
            raise DegenerateSystem(
                f"t must have one entry per inner map, got {len(self.t)} "
                f"for {len(self.inner_maps)} maps"
            )
        if min(self.t) <= 0.0:
            raise DegenerateSystem("all entries of t must be strictly positive")
        if abs(math.fsum(self.t) - 1.0) > 1e-12:
            raise DegenerateSystem(
                f"t must sum to 1 within 1e-12, got {math.fsum(self.t)!r}"
            )
        if self.case_tag == CASE_I and self.inner_maps != self.outer_maps:
            raise CaseMismatch("CASE_I requires inner maps identical to outer maps")
        if self.normalization_scale <= 0.0:
            raise DegenerateSystem("normalization_scale must be positive")

    @property
    def n_outer(self) -> int:
        return len(self.outer_maps)

    @property
    def n_inner(self) -> int:
        return len(self.inner_maps)

    @property
    def outer_scales(self) -> tuple[float, ...]:
        return tuple(m.scale for m in self.outer_maps)

    @property
    def inner_scales(self) -> tuple[float, ...]:
        return tuple(m.scale for m in self.inner_maps)


def case_i_system(maps: tuple[Similitude, ...], p: tuple[float, ...],
                  t: tuple[float, ...]) -> IsmSystem:
    return IsmSystem(CASE_I, maps[0].dimension, tuple(maps), tuple(p),
                     tuple(maps), tuple(t))


def case_ii_system(outer: tuple[Similitude, ...], p: tuple[float, ...],
                   inner: tuple[Similitude, ...], t: tuple[float, ...]) -> IsmSystem:
    return IsmSystem(CASE_II, outer[0].dimension, tuple(outer), tuple(p),
                     tuple(inner), tuple(t))


def _maps_for_family(sys: IsmSystem, family: str) -> tuple[Similitude, ...]:
    if family == "outer":
        return sys.outer_maps
    if family == "inner":
        return sys.inner_maps
    raise ValueError(f"family must be 'outer' or 'inner', got {family!r}")


def word_map(sys: IsmSystem, word: Word, family: str = "outer") -> Similitude:
    """Composed contraction addressed by ``word`` (identity for the root)."""
    maps = _maps_for_family(sys, family)
    if word.alphabet_size != len(maps):
        raise CaseMismatch(
            f"word over alphabet of size {word.alphabet_size} does not address "
            f"the {family} family of {len(maps)} maps"
        )
    acc = identity_map(sys.dimension)
    for s in word.symbols:
        acc = acc.after(maps[s - 1])
    return acc


def cylinder_mass_case1(sys: IsmSystem, word: Word) -> float:
    """Total mass of the cylinder addressed by ``word`` (same-family seed).

    Closed form: mass deposited by the seed on every level of the word
    (seed weight times the branch weight walked so far times the seed's
    own weight for the remaining suffix), plus the mass still being
    recursed at the end of the word.
    """
    _require_case(sys, CASE_I)
    _require_outer_word(sys, word)
    k = len(word)
    if k == 0:
        return 1.0
    p0 = sys.p[0]
    p_pref = [1.0]
    for s in word.symbols:
        p_pref.append(p_pref[-1] * sys.p[s])
    t_suf = [1.0] * (k + 1)
    for j in range(k - 1, -1, -1):
        t_suf[j] = t_suf[j + 1] * sys.t[word.symbols[j] - 1]
    terms = [p0 * p_pref[h] * t_suf[h] for h in range(k)]
    terms.append(p_pref[k])
    return math.fsum(terms)


def cylinder_mass_case1_recursive(sys: IsmSystem, word: Word) -> float:
    """Reference recursion: peel the first symbol and recurse on the tail."""
    _require_case(sys, CASE_I)
    _require_outer_word(sys, word)

    def rec(symbols: tuple[int, ...]) -> float:
        if not symbols:
            return 1.0
        t_full = 1.0
        for s in symbols:
            t_full *= sys.t[s - 1]
        return sys.p[0] * t_full + sys.p[symbols[0]] * rec(symbols[1:])

    return rec(word.symbols)


def child_mass_case1(sys: IsmSystem, mass: float, p_word: float,
                     symbol: int) -> tuple[float, float]:
    """One-symbol extension of ``(cylinder mass, branch weight)``.

    Lets tree walks maintain masses in O(1) per step; agrees with
    :func:`cylinder_mass_case1` (tested) because extending the word
    scales the already-deposited seed mass by ``t[symbol]`` and rebases
    the still-recursing mass ``p_word``.
    """
    t_i = sys.t[symbol - 1]
    p_i = sys.p[symbol]
    child = t_i * mass + p_word * (sys.p[0] * t_i + p_i - t_i)
    return child, p_word * p_i


def patch_mass_case2(sys: IsmSystem, sigma: Word, omega: Word | None = None) -> float:
    """Mass of an outer cylinder, or of an inner patch inside it.

    With ``omega`` absent this is the mass pushed through the outer word
    ``sigma``; with ``omega`` present it is the seed mass deposited at
    ``sigma`` and then localized to the inner word ``omega``.
    """
    _require_case(sys, CASE_II)
    _require_outer_word(sys, sigma)
    p_sigma = 1.0
    for s in sigma.symbols:
        p_sigma *= sys.p[s]
    if omega is None:
        return p_sigma
    if omega.alphabet_size != sys.n_inner:
        raise CaseMismatch(
            f"inner word over alphabet of size {omega.alphabet_size} does not "
            f"address the inner family of {sys.n_inner} maps"
        )
    t_omega = 1.0
    for s in omega.symbols:
        t_omega *= sys.t[s - 1]
    return sys.p[0] * p_sigma * t_omega


def _require_case(sys: IsmSystem, tag: str) -> None:
    if sys.case_tag != tag:
        raise CaseMismatch(f"operation requires {tag}, system is {sys.case_tag}")


def _require_outer_word(sys: IsmSystem, word: Word) -> None:
    if word.alphabet_size != sys.n_outer:
        raise CaseMismatch(
            f"word over alphabet of size {word.alphabet_size} does not address "
            f"the outer family of {sys.n_outer} maps"
        )


@dataclass(frozen=True)
class Hull:
    """Axis-aligned bounding interval/box of a compact set.

    In dimension 2 the box is an over-approximation of the convex hull
    (``overapprox`` is then True) and its diagonal is used as the
    diameter proxy; in dimension 1 the interval is exact.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    overapprox: bool

    @property
    def dimension(self) -> int:
        return len(self.lo)

    def diameter(self) -> float:
        return math.hypot(*(h - l for l, h in zip(self.lo, self.hi)))

    def midpoint(self) -> tuple[float, ...]:
        return tuple((l + h) / 2.0 for l, h in zip(self.lo, self.hi))


def _box_union(a: Hull, b: Hull) -> Hull:
    return Hull(
        tuple(min(x, y) for x, y in zip(a.lo, b.lo)),
        tuple(max(x, y) for x, y in zip(a.hi, b.hi)),
        a.overapprox or b.overapprox,
    )


def _box_image(m: Similitude, h: Hull) -> Hull:
    if m.dimension == 1:
        a = m.apply(np.array([h.lo[0]]).reshape(1, 1))[0, 0]
        b = m.apply(np.array([h.hi[0]]).reshape(1, 1))[0, 0]
        return Hull((min(a, b),), (max(a, b),), h.overapprox)
    corners = np.array(
        [[h.lo[0], h.lo[1]], [h.lo[0], h.hi[1]], [h.hi[0], h.lo[1]], [h.hi[0], h.hi[1]]]
    )
    img = m.apply(corners)
    return Hull(
        (img[:, 0].min(), img[:, 1].min()),
        (img[:, 0].max(), img[:, 1].max()),
        True,
    )


def _fixed_point_seed(maps: tuple[Similitude, ...], extra: Hull | None = None) -> Hull:
    pts = np.array([m.fixed_point() for m in maps], dtype=float)
    lo = tuple(pts[:, j].min() for j in range(pts.shape[1]))
    hi = tuple(pts[:, j].max() for j in range(pts.shape[1]))
    seed = Hull(lo, hi, len(lo) == 2)
    if extra is not None:
        seed = _box_union(seed, extra)
    return seed


def _iterate_hull(maps: tuple[Similitude, ...], seed: Hull,
                  keep: Hull | None = None) -> Hull:
    # The seed starts inside the invariant set, so the iteration is
    # monotone increasing and converges geometrically from below.
    cur = seed
    for _ in range(_HULL_MAX_ITER):
        nxt = _box_image(maps[0], cur)
        for m in maps[1:]:
            nxt = _box_union(nxt, _box_image(m, cur))
        if keep is not None:
            nxt = _box_union(nxt, keep)
        delta = max(
            max(abs(a - b) for a, b in zip(cur.lo, nxt.lo)),
            max(abs(a - b) for a, b in zip(cur.hi, nxt.hi)),
        )
        cur = nxt
        if delta < _HULL_TOL:
            return cur
    raise NumericFailure("hull iteration did not converge")


def seed_hull(sys: IsmSystem) -> Hull:
    """Bounding hull of the seed set (inner-family invariant set)."""
    return _iterate_hull(sys.inner_maps, _fixed_point_seed(sys.inner_maps))


def attractor_hull(sys: IsmSystem) -> Hull:
    """Bounding hull of the full support."""
    if sys.case_tag == CASE_I:
        return _iterate_hull(sys.outer_maps, _fixed_point_seed(sys.outer_maps))
    inner = seed_hull(sys)
    seed = _fixed_point_seed(sys.outer_maps, extra=inner)
    return _iterate_hull(sys.outer_maps, seed, keep=inner)


def normalize(sys: IsmSystem) -> IsmSystem:
    """Rescale coordinates so the support hull has diameter 1.

    Returns a copy whose translations are multiplied by the rescale
    factor, recorded in ``normalization_scale``.  Applying
    :func:`normalize` twice yields factor 1 the second time.
    """
    hull = attractor_hull(sys)
    diam = hull.diameter()
    if diam < 1e-12:
        raise DegenerateSystem("support has (near-)zero diameter; cannot normalize")
    lam = 1.0 / diam

    def rescale(m: Similitude) -> Similitude:
        return Similitude(m.scale, m.rotation,
                          tuple(lam * x for x in m.translation))

    new_outer = tuple(rescale(m) for m in sys.outer_maps)
    if sys.case_tag == CASE_I:
        new_inner = new_outer
    else:
        new_inner = tuple(rescale(m) for m in sys.inner_maps)
    return replace(sys, outer_maps=new_outer, inner_maps=new_inner,
                   normalization_scale=lam)


@dataclass(frozen=True)
class SeparationReport:
    """Outcome of the pairwise-disjointness check with explicit gaps."""

    passed: bool
    min_gap: float
    overapprox: bool
    detail: str


def _box_gap(a: Hull, b: Hull) -> float:
    # Largest per-axis gap; positive iff the boxes are disjoint.
    return max(
        max(bl - ah, al - bh)
        for al, ah, bl, bh in zip(a.lo, a.hi, b.lo, b.hi)
    )


def check_separation(sys: IsmSystem) -> SeparationReport:
    """Decide strong separation of the first-level pieces.

    Case I: images of the support hull under the outer maps must be
    pairwise disjoint.  Case II: additionally, the seed hull must be
    disjoint from every outer image.  In dimension 2 the check runs on
    bounding boxes, which is conservative: PASS is reliable, FAIL may be
    an over-approximation artifact (flagged).
    """
    hull = attractor_hull(sys)
    pieces: list[tuple[str, Hull]] = [
        (f"outer[{i + 1}]", _box_image(m, hull))
        for i, m in enumerate(sys.outer_maps)
    ]
    if sys.case_tag == CASE_II:
        pieces.append(("seed", seed_hull(sys)))
    worst = math.inf
    worst_pair = ("", "")
    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            gap = _box_gap(pieces[i][1], pieces[j][1])
            if gap < worst:
                worst = gap
                worst_pair = (pieces[i][0], pieces[j][0])
    passed = worst > 0.0
    detail = (
        f"min gap {worst:.6g} between {worst_pair[0]} and {worst_pair[1]}"
        if math.isfinite(worst)
        else "no pairs"
    )
    return SeparationReport(passed, worst, hull.overapprox, detail)


# ---------------------------------------------------------------------------
# Sampling


def _map_arrays(maps: tuple[Similitude, ...]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    scales = np.array([m.scale for m in maps])
    units = np.array([m._unit() for m in maps])
    trans = np.array([m._translation_c() for m in maps])
    return scales, units, trans


def sample_batch(sys: IsmSystem, count: int, rng: np.random.Generator,
                 eps: float = 1e-9, max_depth: int | None = None) -> np.ndarray:
    """Draw ``count`` points of the measure, each within ``eps`` of exact.

    A draw stops the outer recursion with probability ``p0`` at each
    level and otherwise descends a branch with probability proportional
    to ``p_i``; the seed contribution is resolved by descending the
    inner family until the composed scale bounds the position error by
    ``eps``, then emitting the image of a fixed anchor point.  Outer
    descents deeper than the depth cap are truncated; the induced
    spatial error is at most ``max_scale ** max_depth``, which must not
    exceed ``eps``.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    cap = MAX_DEPTH if max_depth is None else max_depth
    s_out_max = max(sys.outer_scales)
    if s_out_max**cap > eps:
        raise NumericFailure(
            f"depth cap {cap} cannot bound the truncation error by eps={eps}"
        )
    c_max = max(sys.inner_scales)
    inner_depth = max(1, math.ceil(math.log(eps) / math.log(c_max)))
    if inner_depth > cap:
        raise NumericFailure(
            f"eps={eps} needs inner depth {inner_depth} > depth cap {cap}"
        )

    p0 = sys.p[0]
    branch = np.array(sys.p[1:]) / (1.0 - p0)
    branch = branch / branch.sum()
    o_scales, o_units, o_trans = _map_arrays(sys.outer_maps)
    i_scales, i_units, i_trans = _map_arrays(sys.inner_maps)
    t_probs = np.array(sys.t) / math.fsum(sys.t)

    depths = np.minimum(rng.geometric(p0, size=count) - 1, cap)
    s_acc = np.ones(count)
    u_acc = np.ones(count, dtype=complex)
    v_acc = np.zeros(count, dtype=complex)
    level = 0
    while True:
        idx = np.nonzero(depths > level)[0]
        if idx.size == 0:
            break
        choice = rng.choice(sys.n_outer, size=idx.size, p=branch)
        v_acc[idx] += s_acc[idx] * u_acc[idx] * o_trans[choice]
        s_acc[idx] *= o_scales[choice]
        u_acc[idx] *= o_units[choice]
        level += 1

    anchor = complex(*sys.inner_maps[0].fixed_point()) \
        if sys.dimension == 2 else complex(sys.inner_maps[0].fixed_point()[0])
    si = np.ones(count)
    ui = np.ones(count, dtype=complex)
    vi = np.zeros(count, dtype=complex)
    for _ in range(inner_depth):
        choice = rng.choice(sys.n_inner, size=count, p=t_probs)
        vi += si * ui * i_trans[choice]
        si *= i_scales[choice]
        ui *= i_units[choice]
    z = si * ui * anchor + vi
    pts = s_acc * u_acc * z + v_acc
    if sys.dimension == 1:
        return pts.real[:, None].copy()
    return np.stack([pts.real, pts.imag], axis=1)


def sample_point(sys: IsmSystem, rng: np.random.Generator,
                 eps: float = 1e-9) -> np.ndarray:
    """Single-point convenience wrapper around :func:`sample_batch`."""
    return sample_batch(sys, 1, rng, eps=eps)[0]
