"""Periodic directions by combinatorial enumeration of translation words.

Work in the frame of the start side ``s`` (origin at its first vertex, x along
the side, y pointing into the kite).  A ray leaving the side at ``u`` with
direction ``(k, 1)`` is the line ``x = u + k*y``; it crosses a given side of a
given copy iff the side's endpoints lie on opposite sides of the line, which
is linear in ``(u, k)``.  Each word thus carves out a convex polygon of
``(u, k)``.  When the word's reflections compose to a translation ``tau``, the
orbit closes exactly for ``k = tau_x / tau_y`` and the periodic strip is that
line's intersection with the polygon.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import mpmath as mp

from .geometry import (
    GUARD_BITS,
    MIRROR_SIDE,
    SIDE_INCLINATION,
    Direction,
    KiteSpec,
    VertexHit,
    as_direction,
    build_kite,
    circle_distance,
    fold_trajectory,
    reflect_point,
)

DEFAULT_CAP = 14
K_BOX = 1.0e4  # |cot| bound: directions within ~1e-4 rad of the side are not searched
MIN_STRIP = 1e-12
CLOSURE_TOL = 1e-9
DIRECTION_BITS = 210  # >= 60 significant digits


class EnumerationCapExceeded(ValueError):
    pass


class CatalogNotExhaustive(ValueError):
    pass


class PeriodicTheta(ValueError):
    """The direction is itself periodic, so its phi value is 0."""


@dataclass
class PeriodicDirection:
    word: Tuple[int, ...]
    start_side: int
    direction: mp.mpf  # absolute angle in the kite frame, in [0, 2*pi)
    length: int
    translation: Tuple[float, float]  # in the start-side frame
    strip: Tuple[float, float]  # u-interval on the start side
    width: float  # perpendicular strip width
    residual: float = float("nan")

    @property
    def u_mid(self) -> float:
        return 0.5 * (self.strip[0] + self.strip[1])


# ---------------------------------------------------------------------------
# planar helpers (floats)

def _clip(poly, a, b, c):
    """Sutherland-Hodgman: keep a*u + b*k + c >= 0."""
    out = []
    n = len(poly)
    for i in range(n):
        P, Q = poly[i], poly[(i + 1) % n]
        fp = a * P[0] + b * P[1] + c
        fq = a * Q[0] + b * Q[1] + c
        if fp >= 0:
            out.append(P)
        if (fp >= 0) != (fq >= 0):
            t = fp / (fp - fq)
            out.append((P[0] + t * (Q[0] - P[0]), P[1] + t * (Q[1] - P[1])))
    return out


def _area(poly):
    return 0.5 * abs(sum(poly[i][0] * poly[(i + 1) % len(poly)][1]
                         - poly[(i + 1) % len(poly)][0] * poly[i][1] for i in range(len(poly))))


def _slice(poly, k):
    """u-interval of the polygon on the horizontal line k = const, or None."""
    us = []
    n = len(poly)
    for i in range(n):
        P, Q = poly[i], poly[(i + 1) % n]
        if (P[1] - k) * (Q[1] - k) <= 0 and P[1] != Q[1]:
            t = (k - P[1]) / (Q[1] - P[1])
            us.append(P[0] + t * (Q[0] - P[0]))
        elif P[1] == k:
            us.append(P[0])
    if not us:
        return None
    return min(us), max(us)


def _reflect(p, a, b):
    dx, dy = b[0] - a[0], b[1] - a[1]
    t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)
    return (2 * (a[0] + t * dx) - p[0], 2 * (a[1] + t * dy) - p[1])


def side_frame(kite: KiteSpec, side: int, prec: Optional[int] = None):
    """Kite vertices in the frame of ``side`` (mp values)."""
    V = kite.vertices(prec)
    p = prec or kite.prec
    with mp.workprec(p + GUARD_BITS):
        O, P1 = V[side - 1], V[side % 4]
        L = mp.hypot(P1[0] - O[0], P1[1] - O[1])
        ex = ((P1[0] - O[0]) / L, (P1[1] - O[1]) / L)
        return tuple(((q[0] - O[0]) * ex[0] + (q[1] - O[1]) * ex[1],
                      -(q[0] - O[0]) * ex[1] + (q[1] - O[1]) * ex[0]) for q in V), \
            mp.atan2(ex[1], ex[0]), L


def _crossing_constraints(verts, entry, signs, exit_side):
    """Half-planes for the line to leave a copy through ``exit_side``.

    ``signs[i]`` is the side of the line (+1: right, x - u - k*y > 0) of the
    entry vertices.  Returns the constraints and the signs on the exit side.
    """
    a_idx, b_idx = entry - 1, entry % 4
    s_a, s_b = signs[a_idx], signs[b_idx]
    cons = []
    new = {}
    # walk from the entry side's second vertex around to its first
    i = b_idx
    for _ in range(2):
        i = (i + 1) % 4
        # vertices strictly between the exit side and the entry side's first vertex
        sig = s_b if _before_exit(i, b_idx, exit_side) else s_a
        x, y = verts[i]
        cons.append((-sig, -sig * y, sig * x))
        new[i] = sig
    full = dict(signs)
    full.update(new)
    e1, e2 = exit_side - 1, exit_side % 4
    if full[e1] == full[e2]:
        return None, None
    return cons, {e1: full[e1], e2: full[e2]}


def _before_exit(i, b_idx, exit_side):
    """True if vertex ``i`` lies on the arc from the entry side's end to the exit side."""
    j = b_idx
    while True:
        if j == i:
            return True
        if j == exit_side - 1:
            return False
        j = (j + 1) % 4


# ---------------------------------------------------------------------------
# enumeration

@dataclass
class SearchStats:
    nodes: int = 0
    candidates: int = 0
    rejected_empty: int = 0
    rejected_closure: int = 0
    rejected_power: int = 0


@dataclass
class PeriodicCatalog:
    alpha: str
    beta: str
    base_side: int
    n_max: int
    exhaustive_to: int
    entries: List[PeriodicDirection]
    stats: SearchStats = field(default_factory=SearchStats)

    def by_length(self, n: int) -> List[PeriodicDirection]:
        return [e for e in self.entries if e.length == n]

    def base_entries(self, below: Optional[int] = None) -> List[PeriodicDirection]:
        return [e for e in self.entries if e.start_side == self.base_side
                and (below is None or e.length < below)]

    def base_directions(self, below: Optional[int] = None) -> List[mp.mpf]:
        """Distinct periodic directions leaving the base side, sorted."""
        out = []
        for e in sorted(self.base_entries(below), key=lambda e: e.direction):
            if not out or abs(e.direction - out[-1]) > mp.mpf(10) ** -40:
                out.append(e.direction)
        return out

    def classes(self, below: Optional[int] = None) -> Dict[Tuple[int, ...], List[PeriodicDirection]]:
        """Entries grouped by strip: cyclic word up to rotation and reversal."""
        out: Dict[Tuple[int, ...], List[PeriodicDirection]] = {}
        for e in self.entries:
            if below is None or e.length < below:
                out.setdefault(canonical_cycle(e.word), []).append(e)
        return out

    def require(self, n: int):
        if self.exhaustive_to < n:
            raise CatalogNotExhaustive(f"catalog exhaustive only to length {self.exhaustive_to}, need {n}")


def canonical_cycle(word: Sequence[int]) -> Tuple[int, ...]:
    w = tuple(word)
    rots = [w[i:] + w[:i] for i in range(len(w))]
    r = tuple(reversed(w))
    rots += [r[i:] + r[:i] for i in range(len(r))]
    return min(rots)


def primitive_root(word: Sequence[int]) -> Tuple[int, ...]:
    w = tuple(word)
    n = len(w)
    for d in range(1, n):
        if n % d == 0 and w[:d] * (n // d) == w:
            return w[:d]
    return w


def _resonant(kite: KiteSpec) -> bool:
    if kite.alpha.is_rational_pi and kite.beta.is_rational_pi:
        return True
    from .diophantine import small_denominator_table

    # relations a*alpha + b*beta = 0 mod pi that a word of this length could realise
    val = small_denominator_table(kite.alpha, kite.beta, 2 * DEFAULT_CAP + 2, prec=kite.prec)[-1].value
    return val < 1e-12


def enumerate_periodic_directions(kite: KiteSpec, n_max: int, cap: int = DEFAULT_CAP,
                                  start_sides: Optional[Iterable[int]] = None,
                                  use_mirror: bool = True, check_closure: bool = True,
                                  base_side: Optional[int] = None,
                                  prune: bool = True) -> PeriodicCatalog:
    """All realised periodic strips with primitive words of length ``<= n_max``.

    Every side is tried as a start side so the catalog lists each strip once
    per visit to each side; by default sides 3 and 4 are obtained from 2 and 1
    through the kite's mirror symmetry.  ``prune=False`` disables the cut on
    the rotation part (slower, same result).
    """
    if n_max > cap:
        raise EnumerationCapExceeded(f"n_max={n_max} exceeds the enumeration cap {cap}")
    if not kite.is_convex:
        raise ValueError("periodic enumeration is implemented for convex kites only")
    resonant = _resonant(kite)
    stats = SearchStats()
    if start_sides is None:
        start_sides = (1, 2) if use_mirror else (1, 2, 3, 4)
        mirror = use_mirror
    else:
        start_sides = tuple(start_sides)
        mirror = False
    found: List[PeriodicDirection] = []
    for s in start_sides:
        for word in _search_side(kite, s, n_max, resonant, stats, prune):
            pd = realize_word(kite, word, s, resonant)
            if pd is None:
                stats.rejected_empty += 1
                continue
            found.append(pd)
    if mirror:
        for pd in list(found):
            mw = tuple(MIRROR_SIDE[x] for x in pd.word)
            m = realize_word(kite, mw, MIRROR_SIDE[pd.start_side], resonant)
            if m is not None:
                found.append(m)
    # primitive words only: drop powers of realised shorter words
    realised = {(e.start_side, e.word) for e in found}
    keep = []
    for e in found:
        root = primitive_root(e.word)
        if root != e.word and (e.start_side, root) in realised:
            stats.rejected_power += 1
            continue
        keep.append(e)
    if check_closure:
        ok = []
        for e in keep:
            e.residual = closure_residual(kite, e)
            if e.residual < CLOSURE_TOL:
                ok.append(e)
            else:
                stats.rejected_closure += 1
        keep = ok
    keep.sort(key=lambda e: (e.length, e.start_side, e.word))
    return PeriodicCatalog(str(kite.alpha), str(kite.beta), base_side or kite.base_side, n_max,
                           n_max, keep, stats)


def _search_side(kite: KiteSpec, s: int, n_max: int, resonant: bool, stats: SearchStats,
                 prune: bool = True):
    """Words from side ``s`` back to side ``s`` whose (u, k) polygon is non-empty
    and whose rotation part can still vanish."""
    F, _, L = side_frame(kite, s)
    verts0 = tuple((float(x), float(y)) for x, y in F)
    Lf = float(L)
    poly0 = [(0.0, -K_BOX), (Lf, -K_BOX), (Lf, K_BOX), (0.0, K_BOX)]
    signs0 = {s - 1: -1, s % 4: 1}  # x - u - k*y at the side's ends: -u < 0, L - u > 0
    out = []

    def rec(verts, entry, signs, poly, word, A, B):
        depth = len(word)
        for j in range(1, 5):
            if j == entry:
                continue
            cons, new_signs = _crossing_constraints(verts, entry, signs, j)
            if cons is None:
                continue
            P = poly
            for a, b, c in cons:
                P = _clip(P, a, b, c)
                if len(P) < 3:
                    break
            stats.nodes += 1
            if len(P) < 3 or _area(P) <= 0:
                continue
            ga, gb, _ = SIDE_INCLINATION[j]
            sgn = 1 if depth % 2 == 0 else -1
            A2, B2 = A + sgn * ga, B + sgn * gb
            remaining = n_max - depth - 1
            if prune and not resonant and abs(A2) + abs(B2) > remaining:
                continue
            w2 = word + (j,)
            if j == s and len(w2) % 2 == 0 and (resonant or (A2 == 0 and B2 == 0)):
                stats.candidates += 1
                out.append(w2)
            if remaining > 0:
                a, b = verts[j - 1], verts[j % 4]
                child = tuple(_reflect(q, a, b) for q in verts)
                rec(child, j, new_signs, P, w2, A2, B2)

    rec(verts0, s, signs0, poly0, (), 0, 0)
    return out


def word_region(kite: KiteSpec, word: Sequence[int], s: int):
    """(u, k) polygon of lines from side ``s`` realising ``word``, and the final copy."""
    F, _, L = side_frame(kite, s)
    verts = tuple((float(x), float(y)) for x, y in F)
    Lf = float(L)
    poly = [(0.0, -K_BOX), (Lf, -K_BOX), (Lf, K_BOX), (0.0, K_BOX)]
    signs = {s - 1: -1, s % 4: 1}
    entry = s
    for j in word:
        if j == entry:
            return None, None
        cons, signs = _crossing_constraints(verts, entry, signs, j)
        if cons is None:
            return None, None
        for a, b, c in cons:
            poly = _clip(poly, a, b, c)
            if len(poly) < 3:
                return None, None
        a, b = verts[j - 1], verts[j % 4]
        verts = tuple(_reflect(q, a, b) for q in verts)
        entry = j
    return poly, verts


def realize_word(kite: KiteSpec, word: Sequence[int], s: int,
                 resonant: Optional[bool] = None) -> Optional[PeriodicDirection]:
    """The periodic strip of ``word`` from side ``s``, or None if it is empty."""
    word = tuple(word)
    if len(word) % 2 or word[-1] != s:
        return None
    if resonant is None:
        resonant = _resonant(kite)
    if not resonant:
        d = Direction.pure(0, 0)
        for j in word:
            d = d.reflect(SIDE_INCLINATION[j])
        if (d.a, d.b) != (0, 0):
            return None
    poly, verts = word_region(kite, word, s)
    if poly is None or _area(poly) <= 0:
        return None
    # final copy must be a translate of the first
    F, phi_s, L = side_frame(kite, s)
    a, b = verts[s - 1], verts[s % 4]
    if abs(b[0] - a[0] - float(L)) > 1e-9 or abs(b[1] - a[1]) > 1e-9:
        return None
    tx, ty = a
    if ty <= 0:
        return None
    k = tx / ty
    if abs(k) >= K_BOX:
        return None
    iv = _slice(poly, k)
    if iv is None:
        return None
    lo, hi = max(iv[0], 0.0), min(iv[1], float(L))
    width = (hi - lo) / math.hypot(k, 1.0)
    if hi - lo <= MIN_STRIP:
        return None
    theta = periodic_direction_value(kite, word, s, DIRECTION_BITS)
    return PeriodicDirection(word, s, theta, len(word), (tx, ty), (lo, hi), width)


def periodic_direction_value(kite: KiteSpec, word: Sequence[int], s: int, prec: int) -> mp.mpf:
    """Absolute angle of the translation of ``word`` (high precision)."""
    F, phi_s, _ = side_frame(kite, s, prec)
    with mp.workprec(prec + GUARD_BITS):
        verts = F
        for j in word:
            a, b = verts[j - 1], verts[j % 4]
            verts = tuple(reflect_point(q, a, b) for q in verts)
        tx, ty = verts[s - 1]
        return (phi_s + mp.atan2(ty, tx)) % (2 * mp.pi)


def closure_residual(kite: KiteSpec, e: PeriodicDirection, prec: Optional[int] = None) -> float:
    """Distance between start and end of one period, re-simulated by folding."""
    p = prec or 2 * kite.prec
    twin = build_kite(kite.alpha, kite.beta, kite.base_side, p)
    with mp.workprec(p + GUARD_BITS):
        theta = e.direction
        try:
            orb = fold_trajectory(twin, e.start_side, mp.mpf(e.u_mid), theta, e.length, p)
        except VertexHit:
            return float("inf")
        if orb.word != e.word:
            return float("inf")
        P0, P1 = orb.points[0], orb.points[-1]
        dtheta = circle_distance(orb.directions[-1], theta)
        return float(mp.hypot(P1[0] - P0[0], P1[1] - P0[1]) + dtheta)


# ---------------------------------------------------------------------------
# phi and counts

@dataclass(frozen=True)
class PhiValue:
    value: mp.mpf
    periodic: bool
    nearest: Optional[mp.mpf] = None

    def __float__(self):
        return float(self.value)


def _theta_value(kite: KiteSpec, theta, prec: int = DIRECTION_BITS) -> mp.mpf:
    if isinstance(theta, mp.mpf):
        return theta % (2 * mp.pi)
    d = as_direction(theta)
    return d.value(kite.alpha, kite.beta, prec)


def phi(kite: KiteSpec, theta, n: int, catalog: PeriodicCatalog,
        raise_periodic: bool = False) -> PhiValue:
    """Distance from ``theta`` to the nearest base-side periodic direction of length < n.

    1 when there is none.  A direction agreeing with a catalog entry to 40
    digits counts as that entry and gives 0.
    """
    catalog.require(n - 1)
    dirs = catalog.base_directions(below=n)
    if not dirs:
        return PhiValue(mp.mpf(1), False)
    with mp.workprec(DIRECTION_BITS + GUARD_BITS):
        th = _theta_value(kite, theta)
        best = min(dirs, key=lambda x: circle_distance(x, th))
        dist = circle_distance(best, th)
    if dist < mp.mpf(10) ** -40:
        if raise_periodic:
            raise PeriodicTheta(f"direction is periodic (length < {n})")
        return PhiValue(mp.mpf(0), True, best)
    return PhiValue(dist, False, best)


@dataclass
class PhiTable:
    direction: str
    values: Dict[int, mp.mpf]
    n_max: int
    exhaustive: Dict[int, bool]


def phi_table(kite: KiteSpec, theta, catalog: PeriodicCatalog, n_max: Optional[int] = None) -> PhiTable:
    n_max = n_max or catalog.n_max + 1
    vals, exh = {}, {}
    for n in range(1, n_max + 1):
        exh[n] = catalog.exhaustive_to >= n - 1
        probe = PeriodicCatalog(catalog.alpha, catalog.beta, catalog.base_side, catalog.n_max,
                                max(catalog.exhaustive_to, n - 1), catalog.entries)
        vals[n] = phi(kite, theta, n, probe).value
    return PhiTable(str(theta), vals, n_max, exh)


def count_periodic_beams(catalog: PeriodicCatalog, n: int) -> int:
    """Number of distinct periodic strips of length < n."""
    catalog.require(n - 1)
    return len(catalog.classes(below=n))


# ---------------------------------------------------------------------------
# catalog files

def write_catalog(cat: PeriodicCatalog) -> str:
    lines = [
        "# periodic catalog\n",
        f"# alpha={cat.alpha} beta={cat.beta} base_side={cat.base_side} "
        f"n_max={cat.n_max} exhaustive_to={cat.exhaustive_to}\n",
        "# columns: length start_side word direction(60 digits) strip_lo strip_hi width\n",
    ]
    for e in cat.entries:
        w = "".join(str(x) for x in e.word)
        lines.append(f"{e.length} {e.start_side} {w} {mp.nstr(e.direction, 60, strip_zeros=False)} "
                     f"{e.strip[0]!r} {e.strip[1]!r} {e.width!r}\n")
    return "".join(lines)


def read_catalog(text: str, kite: Optional[KiteSpec] = None) -> PeriodicCatalog:
    head = {}
    entries = []
    for line in text.splitlines():
        if line.startswith("# alpha="):
            for tok in line[2:].split():
                k, v = tok.split("=", 1)
                head[k] = v
            continue
        if not line.strip() or line.startswith("#"):
            continue
        n, s, w, d, lo, hi, width = line.split()
        word = tuple(int(c) for c in w)
        with mp.workprec(DIRECTION_BITS):
            theta = mp.mpf(d)
        entries.append(PeriodicDirection(word, int(s), theta, int(n), (float("nan"), float("nan")),
                                         (float(lo), float(hi)), float(width)))
    if kite is not None:
        for e in entries:
            F, _, _ = side_frame(kite, e.start_side)
            _, verts = word_region(kite, e.word, e.start_side)
            e.translation = verts[e.start_side - 1] if verts else e.translation
    return PeriodicCatalog(head["alpha"], head["beta"], int(head["base_side"]), int(head["n_max"]),
                           int(head["exhaustive_to"]), entries)
