"""Parallel beams in the unfolded plane: tracing until a vertex enters, and widening."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import mpmath as mp

from .geometry import GUARD_BITS, Direction, KiteSpec, as_direction, as_mpf, tolerance
from .unfolding import (
    BoundaryPoint,
    BoundaryVertexAmbiguous,
    Node,
    Shadow,
    SideFraction,
    Unfolding,
    boundary_point,
)


class NoPeriodicInside(ValueError):
    pass


@dataclass
class BeamCorridor:
    base_side: int
    interval: Tuple[mp.mpf, mp.mpf]
    direction: Direction
    word: Tuple[int, ...]
    N: int
    T: mp.mpf
    width: mp.mpf
    sin_incidence: mp.mpf
    base_origin: Tuple[mp.mpf, mp.mpf] = None
    base_unit: Tuple[mp.mpf, mp.mpf] = None
    dir_vector: Tuple[mp.mpf, mp.mpf] = None

    def boundary_rays(self):
        """The two edge lines as (start point, unit direction)."""
        P0, e, d = self.base_origin, self.base_unit, self.dir_vector
        return [((P0[0] + u * e[0], P0[1] + u * e[1]), d) for u in self.interval]


@dataclass
class SplitEvent:
    """The first step at which the beam's rays stop sharing a coding.

    ``step`` is the index of the first letter on which the two sides of the
    split disagree; the vertex is crossed after ``step - 1`` common letters.
    """

    step: int
    vertex: Tuple[int, int]  # (copy depth, vertex index)
    vertex_point: Tuple[mp.mpf, mp.mpf]
    split_point: mp.mpf
    cuts: List[mp.mpf]
    words: List[Tuple[int, ...]]  # coding of each sub-beam, ``step`` letters long
    corridor: BeamCorridor

    @property
    def vertex_time(self) -> int:
        return self.step - 1


@dataclass
class SurvivedToHorizon:
    word: Tuple[int, ...]
    N: int
    T: mp.mpf
    corridor: BeamCorridor


@dataclass(frozen=True)
class Unsplit:
    horizon: int
    word: Tuple[int, ...] = field(default=(), repr=False)

    def __bool__(self):
        return False


def _corridor(eng: Unfolding, lo: BoundaryPoint, hi: BoundaryPoint, node: Node) -> BeamCorridor:
    p = eng.prec
    P0, e, d, den, _ = eng.frame(p)
    a, b = lo.u(eng, p), hi.u(eng, p)
    with mp.workprec(p + GUARD_BITS):
        if node.parent is None:
            T = mp.mpf(0)
        else:
            T, _ = eng.crossing(node.parent, node.side, (a + b) / 2, p)
        return BeamCorridor(eng.base_side, (a, b), eng.direction, node.word(), node.depth,
                            T, (b - a) * den, den, P0, e, d)


def _snap_to_side(eng: Unfolding, x: BoundaryPoint) -> BoundaryPoint:
    """Numeric endpoints within rounding of a side end become that end exactly."""
    p = eng.prec
    with mp.workprec(p + GUARD_BITS):
        u = x.u(eng, p)
        if abs(u) <= tolerance(p):
            return boundary_point(0)
        if abs(u - eng.side_length) <= tolerance(p):
            return SideFraction(Fraction(1))
    return x


def trace_beam(kite: KiteSpec, base_side: Optional[int], interval, d, max_N: int,
               on_touch: str = "raise", engine: Optional[Unfolding] = None
               ) -> Union[SplitEvent, SurvivedToHorizon]:
    """Follow the beam of parallel rays leaving ``interval`` of the base side.

    Returns the first :class:`SplitEvent` or :class:`SurvivedToHorizon` after
    ``max_N`` reflections.  A vertex exactly on an edge ray (unresolved at the
    top precision) raises :class:`BoundaryVertexAmbiguous` unless
    ``on_touch="closed"``, in which case it does not count as inside.
    """
    if on_touch not in ("raise", "closed"):
        raise ValueError("on_touch must be 'raise' or 'closed'")
    eng = engine or Unfolding(kite, d, base_side)
    lo, hi = boundary_point(interval[0]), boundary_point(interval[1])
    p = eng.prec
    lo, hi = _snap_to_side(eng, lo), _snap_to_side(eng, hi)
    if eng.compare(lo, hi) >= 0:
        raise ValueError("beam interval must have b > a")
    if eng.compare(lo, boundary_point(0)) < 0 or eng.compare(hi, SideFraction(Fraction(1))) > 0:
        raise ValueError("beam interval must lie on the base side")
    node = eng.root
    for n in range(1, max_N + 1):
        res = eng.split(node, lo, hi)
        if res.touches and on_touch == "raise":
            raise BoundaryVertexAmbiguous(n, res.touches[0])
        if len(res.pieces) > 1:
            cut = res.splits[0][0]
            V = eng.vertices(node, p)
            return SplitEvent(
                step=n,
                vertex=(node.depth, cut.idx),
                vertex_point=V[cut.idx],
                split_point=cut.u(eng, p),
                cuts=[c[0].u(eng, p) for c in res.splits],
                words=[pc.node.word() for pc in res.pieces],
                corridor=_corridor(eng, lo, hi, node),
            )
        node = res.pieces[0].node
    cor = _corridor(eng, lo, hi, node)
    return SurvivedToHorizon(cor.word, cor.N, cor.T, cor)


def splitting_time(kite: KiteSpec, base_side: Optional[int], interval, d, max_N: int,
                   on_touch: str = "raise", engine: Optional[Unfolding] = None
                   ) -> Union[int, Unsplit]:
    out = trace_beam(kite, base_side, interval, d, max_N, on_touch, engine)
    if isinstance(out, SplitEvent):
        return out.step
    return Unsplit(max_N, out.word)


def beam_of_width(eng: Unfolding, centre, eps) -> Tuple[mp.mpf, mp.mpf]:
    """Base interval of perpendicular width ``eps`` centred at arc length ``centre``."""
    p = eng.prec
    with mp.workprec(p + GUARD_BITS):
        half = as_mpf(eps, p) / eng.incidence_sin(p) / 2
        c = as_mpf(centre, p)
        return c - half, c + half


def partition_splitting_times(kite: KiteSpec, d, m: int, max_N: int,
                              base_side: Optional[int] = None,
                              engine: Optional[Unfolding] = None
                              ) -> List[Union[int, Unsplit]]:
    """Splitting time of each of the ``m`` equal cells of the base side, by cell index."""
    if m < 1:
        raise ValueError("m must be >= 1")
    eng = engine or Unfolding(kite, d, base_side)
    out = []
    for i in range(m):
        iv = (SideFraction(Fraction(i, m)), SideFraction(Fraction(i + 1, m)))
        out.append(splitting_time(kite, None, iv, d, max_N, on_touch="closed", engine=eng))
    return out


# ---------------------------------------------------------------------------
# widening by a nearby periodic strip

@dataclass
class ShearExtension:
    beam: BeamCorridor
    phi_angle: mp.mpf  # angle between the beam and the periodic direction
    delta: mp.mpf  # gain in perpendicular width
    delta_base: mp.mpf  # same gain measured along the base side
    constant: mp.mpf  # c with delta >= c * sin(phi_angle) * L_S


def shear_extend(beam: BeamCorridor, periodic_dir, L_S, kite: Optional[KiteSpec] = None,
                 c: Optional[float] = None, prec: Optional[int] = None) -> ShearExtension:
    """Widen ``beam`` by the sideways drift accumulated against a periodic strip.

    A periodic strip of length ``L_S`` inside the beam, tilted by ``phi`` from
    the beam direction, ends displaced by ``L_S * sin(phi)`` across the beam;
    the union of the base and the displaced end is a beam of width
    ``eps + delta``.  ``periodic_dir`` is an absolute angle or, with ``kite``,
    a :class:`Direction`.
    """
    p = prec or 64
    with mp.workprec(p + GUARD_BITS):
        L_S = as_mpf(L_S, p)
        if L_S < 0:
            raise ValueError("L_S must be non-negative")
        if beam.T < L_S:
            raise ValueError("beam must survive at least as long as the periodic orbit")
        dx, dy = beam.dir_vector
        theta_b = mp.atan2(dy, dx)
        if isinstance(periodic_dir, Direction):
            if kite is None:
                raise ValueError("a symbolic periodic direction needs the kite")
            theta_p = periodic_dir.value(kite.alpha, kite.beta, p)
        else:
            theta_p = as_mpf(periodic_dir, p)
        e = beam.base_unit
        # the strip must leave the base into the kite, like the beam
        if e[0] * mp.sin(theta_p) - e[1] * mp.cos(theta_p) <= 0:
            raise NoPeriodicInside("periodic strip does not start from the base side")
        phi = (theta_p - theta_b + mp.pi) % (2 * mp.pi) - mp.pi
        phi = abs(phi)
        delta = L_S * mp.sin(phi)
        sin_i = beam.sin_incidence
        const = as_mpf(c, p) if c is not None else sin_i
        delta_base = delta / sin_i
        a, b = beam.interval
        wider = replace(beam, interval=(a, b + delta_base), width=beam.width + delta)
        return ShearExtension(wider, phi, delta, delta_base, const)


def shear_iterations_bound(delta, perimeter=1) -> int:
    """Largest n with n * delta <= perimeter (the widening cannot repeat further)."""
    delta = mp.mpf(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    return int(mp.floor(mp.mpf(perimeter) / delta))
