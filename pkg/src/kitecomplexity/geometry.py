"""Kite geometry, exact direction arithmetic and single-ray unfolding.

The billiard table is the kite obtained by doubling a triangle with angles
``alpha`` and ``beta`` across the side joining those two angles.  Coordinates
put the doubling axis on the x-axis, ``A = (0, 0)`` (angle ``2*alpha`` of the
kite) and ``B`` on the positive x-axis (angle ``2*beta``), then scale so the
largest vertex distance is 1.  Vertices are listed counterclockwise::

    V0 = A,  V1 = C' (below the axis),  V2 = B,  V3 = C (above the axis)

and side ``k`` (1-based) runs from ``V[k-1]`` to ``V[k]``.  In this frame every
side inclination is an integer combination of ``alpha``, ``beta`` and ``pi``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, NamedTuple, Optional, Sequence, Tuple, Union

import mpmath as mp

DEFAULT_PREC = 64
MAX_DOUBLINGS = 4
GUARD_BITS = 12

Point = Tuple[mp.mpf, mp.mpf]


class DegenerateTriangle(ValueError):
    pass


class VertexHit(Exception):
    """A ray met a kite vertex; the unfolding is undefined from there on."""

    def __init__(self, step: int, vertex: Optional[int] = None, word: Sequence[int] = ()):
        self.step = step
        self.vertex = vertex
        self.word = tuple(word)
        super().__init__(f"ray hits vertex V{vertex} at step {step}")


def tolerance(prec: int) -> mp.mpf:
    """Ambiguity radius at a given working precision: 2**(-prec/2)."""
    return mp.ldexp(mp.mpf(1), -(prec // 2))


def precision_ladder(prec: int, doublings: int = MAX_DOUBLINGS):
    return [prec << k for k in range(doublings + 1)]


# ---------------------------------------------------------------------------
# angles

_RAT = r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?(?:/\d+)?|\.\d+(?:[eE][+-]?\d+)?"
_TERM = re.compile(
    r"\s*(?P<sign>[+-])?\s*(?:"
    rf"(?P<r1>{_RAT})\s*\*\s*pi"
    rf"|pi\s*\*\s*(?P<r2>{_RAT})"
    r"|pi(?:\s*/\s*(?P<den>\d+))?"
    rf"|(?P<r4>{_RAT})\s*\*\s*sqrt\(\s*(?P<q1>{_RAT})\s*\)"
    rf"|sqrt\(\s*(?P<q2>{_RAT})\s*\)(?:\s*/\s*(?P<den2>\d+))?"
    rf"|(?P<r3>{_RAT})"
    r")\s*"
)


def _rational(text: str) -> Fraction:
    if "/" in text:
        num, den = text.split("/")
        return Fraction(num) / Fraction(den)
    return Fraction(text)


def parse_angle_expr(text: str) -> Tuple[Fraction, Fraction, Tuple[Tuple[Fraction, Fraction], ...]]:
    """Parse sums of ``r*pi``, ``r*sqrt(q)`` and rational terms.

    Returns (pi coefficient, rational offset, surd terms as (coefficient, radicand)).
    """
    pos, pi_coef, offset = 0, Fraction(0), Fraction(0)
    surds: dict = {}
    text = text.strip()
    if not text:
        raise ValueError("empty angle expression")
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse angle expression {text!r} at offset {pos}")
        sign = -1 if m.group("sign") == "-" else 1
        if pos > 0 and m.group("sign") is None:
            raise ValueError(f"missing operator in angle expression {text!r}")
        if m.group("r1") is not None:
            pi_coef += sign * _rational(m.group("r1"))
        elif m.group("r2") is not None:
            pi_coef += sign * _rational(m.group("r2"))
        elif m.group("q1") is not None or m.group("q2") is not None:
            if m.group("q1") is not None:
                c, q = _rational(m.group("r4")), _rational(m.group("q1"))
            else:
                c, q = Fraction(1, int(m.group("den2") or 1)), _rational(m.group("q2"))
            if q <= 0:
                raise ValueError(f"sqrt needs a positive argument in {text!r}")
            surds[q] = surds.get(q, Fraction(0)) + sign * c
        elif m.group("r3") is not None:
            offset += sign * _rational(m.group("r3"))
        else:
            den = int(m.group("den") or 1)
            if den == 0:
                raise ValueError("division by zero in angle expression")
            pi_coef += Fraction(sign, den)
        pos = m.end()
    return pi_coef, offset, tuple(sorted((c, q) for q, c in surds.items() if c))


@dataclass(frozen=True)
class AngleValue:
    """An angle in radians, ``pi_coef*pi + offset + sum(c*sqrt(q))``, re-evaluable at any precision.

    ``func`` (if given) overrides the symbolic form; it must accept a precision in
    bits and return an mpf.  ``text`` is the identity used for hashing.
    """

    pi_coef: Fraction = Fraction(0)
    offset: Fraction = Fraction(0)
    text: str = ""
    func: Optional[Callable[[int], mp.mpf]] = field(default=None, compare=False, repr=False)
    surds: Tuple[Tuple[Fraction, Fraction], ...] = ()

    @classmethod
    def parse(cls, value: Union["AngleValue", str, float, int, Fraction]) -> "AngleValue":
        if isinstance(value, AngleValue):
            return value
        if isinstance(value, Fraction):
            return cls(Fraction(0), value, str(value))
        if isinstance(value, (int, float)):
            value = repr(value)
        pi_coef, offset, surds = parse_angle_expr(value)
        return cls(pi_coef, offset, value.strip(), surds=surds)

    @classmethod
    def from_function(cls, label: str, func: Callable[[int], mp.mpf]) -> "AngleValue":
        return cls(Fraction(0), Fraction(0), f"<{label}>", func)

    @property
    def is_rational_pi(self) -> bool:
        return self.func is None and self.offset == 0 and not self.surds

    def at(self, prec: int = DEFAULT_PREC) -> mp.mpf:
        with mp.workprec(prec + GUARD_BITS):
            if self.func is not None:
                return mp.mpf(self.func(prec + GUARD_BITS))
            val = mp.mpf(0)
            if self.pi_coef:
                val += mp.pi * self.pi_coef.numerator / self.pi_coef.denominator
            if self.offset:
                val += mp.mpf(self.offset.numerator) / self.offset.denominator
            for c, q in self.surds:
                val += mp.mpf(c.numerator) / c.denominator * mp.sqrt(mp.mpf(q.numerator) / q.denominator)
            return val

    def __float__(self) -> float:
        return float(self.at(64))

    def __str__(self) -> str:
        return self.text


def as_mpf(x, prec: int) -> mp.mpf:
    """Exact-as-possible conversion of user numbers (str/Fraction/float/mpf)."""
    with mp.workprec(prec + GUARD_BITS):
        if isinstance(x, mp.mpf):
            return +x
        if isinstance(x, str):
            x = _rational(x.strip())
        if isinstance(x, float):
            x = Fraction(repr(x))
        if isinstance(x, int):
            x = Fraction(x)
        if isinstance(x, Fraction):
            return mp.mpf(x.numerator) / x.denominator
        return mp.mpf(x)


# ---------------------------------------------------------------------------
# directions

Coeffs = Tuple[int, int, int]

# directed inclination of each side as (a, b, c) over (alpha, beta, pi)
SIDE_INCLINATION = {1: (-1, 0, 0), 2: (0, 1, 0), 3: (0, -1, 1), 4: (1, 0, 1)}
# mirror across the doubling axis: A, B fixed; C <-> C'
MIRROR_SIDE = {1: 4, 2: 3, 3: 2, 4: 1}


@dataclass(frozen=True)
class Direction:
    """``sign*theta0 + a*alpha + b*beta + c*pi`` on the circle.

    A pure direction has ``seed is None`` and ``sign == 0``.  The pi coefficient
    is kept mod 2.
    """

    sign: int = 1
    a: int = 0
    b: int = 0
    c: int = 0
    seed: Optional[AngleValue] = None

    def __post_init__(self):
        if self.seed is None and self.sign != 0:
            object.__setattr__(self, "sign", 0)
        if self.seed is not None and self.sign not in (1, -1):
            raise ValueError("seeded direction needs sign +1 or -1")
        object.__setattr__(self, "c", self.c % 2)

    @classmethod
    def seeded(cls, theta0) -> "Direction":
        return cls(1, 0, 0, 0, AngleValue.parse(theta0))

    @classmethod
    def pure(cls, a: int, b: int, c: int = 0) -> "Direction":
        return cls(0, a, b, c, None)

    @property
    def uses_seed(self) -> bool:
        return self.seed is not None

    @property
    def coefficients(self) -> Tuple[int, int, int, int]:
        return (self.sign, self.a, self.b, self.c)

    def value(self, alpha: AngleValue, beta: AngleValue, prec: int = DEFAULT_PREC) -> mp.mpf:
        """Numeric value in [0, 2*pi)."""
        with mp.workprec(prec + GUARD_BITS):
            v = self.a * alpha.at(prec) + self.b * beta.at(prec) + self.c * mp.pi
            if self.seed is not None:
                v += self.sign * self.seed.at(prec)
            return v % (2 * mp.pi)

    def reflect(self, inclination: Coeffs) -> "Direction":
        ga, gb, gc = inclination
        return Direction(-self.sign, 2 * ga - self.a, 2 * gb - self.b, 2 * gc - self.c, self.seed)

    def height(self) -> int:
        return abs(self.a) + abs(self.b) + abs(self.c)


def as_direction(d) -> Direction:
    if isinstance(d, Direction):
        return d
    return Direction.seeded(d)


def circle_distance(x: mp.mpf, y: mp.mpf) -> mp.mpf:
    d = (x - y) % (2 * mp.pi)
    return min(d, 2 * mp.pi - d)


# ---------------------------------------------------------------------------
# kite

@lru_cache(maxsize=256)
def _kite_vertices(alpha: AngleValue, beta: AngleValue, prec: int) -> Tuple[Point, ...]:
    with mp.workprec(prec + GUARD_BITS):
        a, b = alpha.at(prec), beta.at(prec)
        gamma = mp.pi - a - b
        ac = mp.sin(b) / mp.sin(gamma)
        cx, cy = ac * mp.cos(a), ac * mp.sin(a)
        raw = [(mp.mpf(0), mp.mpf(0)), (cx, -cy), (mp.mpf(1), mp.mpf(0)), (cx, cy)]
        diam = max(mp.hypot(p[0] - q[0], p[1] - q[1]) for p in raw for q in raw)
        return tuple((x / diam, y / diam) for x, y in raw)


@dataclass(frozen=True)
class KiteSpec:
    alpha: AngleValue
    beta: AngleValue
    base_side: int = 1
    prec: int = DEFAULT_PREC

    @property
    def name(self) -> str:
        return f"kite(alpha={self.alpha}, beta={self.beta})"

    def vertices(self, prec: Optional[int] = None) -> Tuple[Point, ...]:
        return _kite_vertices(self.alpha, self.beta, prec or self.prec)

    def vertices_float(self):
        return [(float(x), float(y)) for x, y in self.vertices()]

    @staticmethod
    def side_vertices(side: int) -> Tuple[int, int]:
        return side - 1, side % 4

    def side_inclination(self, side: int) -> Coeffs:
        return SIDE_INCLINATION[side]

    def side_length(self, side: int, prec: Optional[int] = None) -> mp.mpf:
        V = self.vertices(prec)
        i, j = self.side_vertices(side)
        with mp.workprec((prec or self.prec) + GUARD_BITS):
            return mp.hypot(V[j][0] - V[i][0], V[j][1] - V[i][1])

    def interior_angles(self, prec: Optional[int] = None):
        """Angles at V0..V3: 2*alpha, gamma, 2*beta, gamma."""
        p = prec or self.prec
        with mp.workprec(p + GUARD_BITS):
            a, b = self.alpha.at(p), self.beta.at(p)
            g = mp.pi - a - b
            return (2 * a, g, 2 * b, g)

    @property
    def is_convex(self) -> bool:
        return all(t < mp.pi for t in self.interior_angles())

    def perimeter(self, prec: Optional[int] = None) -> mp.mpf:
        return sum(self.side_length(s, prec) for s in range(1, 5))

    def diameter(self, prec: Optional[int] = None) -> mp.mpf:
        V = self.vertices(prec)
        with mp.workprec((prec or self.prec) + GUARD_BITS):
            return max(mp.hypot(p[0] - q[0], p[1] - q[1]) for p in V for q in V)

    def side_point(self, side: int, u, prec: Optional[int] = None) -> Point:
        """Point at arc length ``u`` from the start vertex of ``side``."""
        p = prec or self.prec
        V = self.vertices(p)
        i, j = self.side_vertices(side)
        with mp.workprec(p + GUARD_BITS):
            L = mp.hypot(V[j][0] - V[i][0], V[j][1] - V[i][1])
            t = as_mpf(u, p) / L
            return (V[i][0] + t * (V[j][0] - V[i][0]), V[i][1] + t * (V[j][1] - V[i][1]))

    def inward_range(self, side: int, prec: Optional[int] = None) -> Tuple[mp.mpf, mp.mpf]:
        """Open interval of absolute angles pointing into the kite from ``side``."""
        p = prec or self.prec
        V = self.vertices(p)
        i, j = self.side_vertices(side)
        with mp.workprec(p + GUARD_BITS):
            phi = mp.atan2(V[j][1] - V[i][1], V[j][0] - V[i][0])
            return phi, phi + mp.pi

    def incidence(self, side: int, theta: mp.mpf, prec: Optional[int] = None) -> mp.mpf:
        """Angle in (0, pi) between the side (as a directed segment) and ``theta``."""
        lo, _ = self.inward_range(side, prec)
        return (theta - lo) % (2 * mp.pi)

    def resonant(self, k: int = 60) -> bool:
        """True when alpha, beta, pi satisfy a small integer relation."""
        if self.alpha.is_rational_pi and self.beta.is_rational_pi:
            return True
        from .diophantine import small_denominator

        value, _ = small_denominator(self.alpha, self.beta, k, prec=2 * self.prec)
        return value < 2.0 ** (-self.prec // 2)

    def min_width(self, prec: Optional[int] = None) -> mp.mpf:
        """Minimal width; attained perpendicular to a side for a convex polygon."""
        V = self.vertices(prec)
        with mp.workprec((prec or self.prec) + GUARD_BITS):
            best = None
            for s in range(1, 5):
                i, j = self.side_vertices(s)
                ex, ey = V[j][0] - V[i][0], V[j][1] - V[i][1]
                L = mp.hypot(ex, ey)
                h = max(abs((q[0] - V[i][0]) * ey - (q[1] - V[i][1]) * ex) / L for q in V)
                best = h if best is None else min(best, h)
            return best


def build_kite(alpha, beta, base_side: int = 1, prec: int = DEFAULT_PREC) -> KiteSpec:
    """Kite with triangle angles ``alpha``, ``beta``, doubled across their common side."""
    if prec < 64:
        raise ValueError("working precision must be at least 64 bits")
    alpha, beta = AngleValue.parse(alpha), AngleValue.parse(beta)
    a, b = alpha.at(prec), beta.at(prec)
    if a <= 0 or b <= 0:
        raise DegenerateTriangle(f"angles must be positive, got {alpha}, {beta}")
    if alpha.is_rational_pi and beta.is_rational_pi:
        third_positive = alpha.pi_coef + beta.pi_coef < 1
    else:
        with mp.workprec(prec + GUARD_BITS):
            third_positive = mp.pi - a - b > tolerance(prec)
    if not third_positive:
        raise DegenerateTriangle(f"alpha + beta must be < pi, got {alpha} + {beta}")
    if base_side not in (1, 2, 3, 4):
        raise ValueError("base_side must be one of 1..4")
    return KiteSpec(alpha, beta, base_side, prec)


def reflect_direction(d: Direction, side: int, kite: KiteSpec) -> Direction:
    if side not in SIDE_INCLINATION:
        raise ValueError(f"side must be 1..4, got {side}")
    return d.reflect(kite.side_inclination(side))


def reflect_point(p: Point, a: Point, b: Point) -> Point:
    """Mirror ``p`` across the line through ``a`` and ``b`` (current mp precision)."""
    dx, dy = b[0] - a[0], b[1] - a[1]
    t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)
    return (2 * (a[0] + t * dx) - p[0], 2 * (a[1] + t * dy) - p[1])


def fold_word_directions(kite: KiteSpec, d: Direction, word: Sequence[int]):
    """Folded directions after each letter of ``word``, starting from ``d``."""
    out = []
    for s in word:
        d = reflect_direction(d, s, kite)
        out.append(d)
    return out


# ---------------------------------------------------------------------------
# folded dynamics

class FoldedOrbit(NamedTuple):
    word: Tuple[int, ...]
    points: list  # hit points inside the kite, starting point first
    directions: list  # direction angle after each reflection
    length: mp.mpf


def fold_trajectory(kite: KiteSpec, side: int, u, theta, steps: int,
                    prec: Optional[int] = None) -> FoldedOrbit:
    """Billiard orbit computed by explicit reflections inside the kite.

    Independent of the unfolding machinery; used for closure checks.  ``theta``
    is an absolute angle (mpf, float or AngleValue).
    """
    p = prec or kite.prec
    V = kite.vertices(p)
    with mp.workprec(p + GUARD_BITS):
        if isinstance(theta, AngleValue):
            theta = theta.at(p)
        theta = as_mpf(theta, p)
        P = kite.side_point(side, u, p)
        vx, vy = mp.cos(theta), mp.sin(theta)
        cur = side
        word, pts, dirs = [], [P], []
        total = mp.mpf(0)
        tol = tolerance(p)
        for step in range(1, steps + 1):
            best = None
            for s in range(1, 5):
                if s == cur:
                    continue
                i, j = kite.side_vertices(s)
                ex, ey = V[j][0] - V[i][0], V[j][1] - V[i][1]
                den = vx * ey - vy * ex
                if den == 0:
                    continue
                wx, wy = V[i][0] - P[0], V[i][1] - P[1]
                t = (wx * ey - wy * ex) / den
                s_par = (wx * vy - wy * vx) / den
                if t > tol and -tol <= s_par <= 1 + tol:
                    if best is None or t < best[0]:
                        best = (t, s, s_par)
            if best is None:
                raise RuntimeError("ray left the kite; bad start or direction")
            t, s, s_par = best
            if s_par < tol or s_par > 1 - tol:
                raise VertexHit(step, V.index(V[kite.side_vertices(s)[0 if s_par < 0.5 else 1]]), word)
            P = (P[0] + t * vx, P[1] + t * vy)
            total += t
            i, j = kite.side_vertices(s)
            ex, ey = V[j][0] - V[i][0], V[j][1] - V[i][1]
            L2 = ex * ex + ey * ey
            dot = (vx * ex + vy * ey) / L2
            vx, vy = 2 * dot * ex - vx, 2 * dot * ey - vy
            cur = s
            word.append(s)
            pts.append(P)
            dirs.append(mp.atan2(vy, vx) % (2 * mp.pi))
        return FoldedOrbit(tuple(word), pts, dirs, total)


# ---------------------------------------------------------------------------
# length constants

class LengthConstants(NamedTuple):
    c_low: mp.mpf
    C_high: mp.mpf
    min_steps: int  # c_low * N <= L holds for N >= min_steps
    opposite_gap: mp.mpf
    corner_run: int


def estimate_length_constants(kite: KiteSpec) -> LengthConstants:
    """Explicit constants with ``c_low*N <= L <= C_high*N`` along billiard orbits.

    ``C_high`` is the diameter (every chord is at most 1).  For the lower bound:
    an orbit makes at most ``ceil(pi/angle)`` consecutive bounces on the two
    sides at a corner, so any ``K+1`` consecutive hit points involve two
    opposite sides and span at least the gap ``d`` between them.  Hence
    ``L >= d*floor((N+1)/(K+1))`` which gives ``c_low = d/(2(K+1))`` once
    ``N >= 2K - 2``.
    """
    p = kite.prec
    V = kite.vertices(p)
    with mp.workprec(p + GUARD_BITS):
        K = 0
        for ang in kite.interior_angles(p):
            K = max(K, int(mp.ceil(mp.pi / ang)) if ang < mp.pi else 2)

        def seg_dist(s, t):
            i, j = kite.side_vertices(s)
            k, l = kite.side_vertices(t)
            return min(_point_segment(V[i], V[k], V[l]), _point_segment(V[j], V[k], V[l]),
                       _point_segment(V[k], V[i], V[j]), _point_segment(V[l], V[i], V[j]))

        d = min(seg_dist(1, 3), seg_dist(2, 4))
        return LengthConstants(d / (2 * (K + 1)), kite.diameter(p), max(2 * K - 2, 1), d, K)


def _point_segment(q: Point, a: Point, b: Point) -> mp.mpf:
    dx, dy = b[0] - a[0], b[1] - a[1]
    t = ((q[0] - a[0]) * dx + (q[1] - a[1]) * dy) / (dx * dx + dy * dy)
    t = min(max(t, mp.mpf(0)), mp.mpf(1))
    return mp.hypot(a[0] + t * dx - q[0], a[1] + t * dy - q[1])
