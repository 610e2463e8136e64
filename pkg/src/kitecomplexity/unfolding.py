"""Trie of reflected kite copies along a fixed direction, with adaptive predicates.

A family of parallel rays leaving the base side is parametrised by the arc
length ``u`` of its starting point.  Every reflected copy of the kite that a
ray crosses is a node of a trie keyed by exit sides; the copy's vertices cast
"shadows" on the base side (the ``u`` of the ray through that vertex).  All
geometric decisions reduce to comparing two such ``u`` values, which is done at
increasing precision until the gap exceeds ``2**(-p/2)``.  A gap that never
resolves is reported as a touch (0).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

import mpmath as mp

from .geometry import (
    DEFAULT_PREC,
    GUARD_BITS,
    MAX_DOUBLINGS,
    Direction,
    KiteSpec,
    VertexHit,
    as_direction,
    as_mpf,
    precision_ladder,
    reflect_point,
    tolerance,
)


class BoundaryVertexAmbiguous(Exception):
    """A vertex shadow coincides with a corridor edge at every precision tried."""

    def __init__(self, step: int, vertex, cell: Optional[int] = None):
        self.step = step
        self.vertex = vertex
        self.cell = cell
        where = f" (cell {cell})" if cell is not None else ""
        super().__init__(f"vertex {vertex} on corridor boundary at step {step}{where}")


class NotTransversal(ValueError):
    pass


class Node:
    """One reflected copy of the kite."""

    __slots__ = ("parent", "side", "depth", "entry", "entry_status", "children", "verts", "ucache")

    def __init__(self, parent: Optional["Node"], side: Optional[int], entry: int,
                 entry_status: Dict[int, int]):
        self.parent = parent
        self.side = side  # exit side of the parent that leads here
        self.depth = 0 if parent is None else parent.depth + 1
        self.entry = entry
        self.entry_status = entry_status  # vertex index -> -1 (lower u) / +1 (higher u)
        self.children: Dict[int, Node] = {}
        self.verts: Dict[int, tuple] = {}
        self.ucache: Dict[Tuple[int, int], mp.mpf] = {}

    def word(self) -> Tuple[int, ...]:
        out, n = [], self
        while n.parent is not None:
            out.append(n.side)
            n = n.parent
        return tuple(reversed(out))

    def free_vertices(self) -> Tuple[int, int]:
        s = self.entry
        return tuple(i for i in range(4) if i not in (s - 1, s % 4))

    def __repr__(self):
        return f"Node(depth={self.depth}, side={self.side})"


@dataclass(frozen=True)
class Fixed:
    """A boundary point at a fixed base parameter."""

    value: Union[Fraction, mp.mpf]

    def u(self, eng: "Unfolding", p: int) -> mp.mpf:
        return as_mpf(self.value, p)


@dataclass(frozen=True, eq=False)
class Shadow:
    """The base parameter of the ray through vertex ``idx`` of ``node``."""

    node: Node
    idx: int

    def u(self, eng: "Unfolding", p: int) -> mp.mpf:
        return eng.u_vertex(self.node, self.idx, p)

    def __repr__(self):
        return f"V{self.idx}@depth{self.node.depth}"


@dataclass(frozen=True)
class SideFraction:
    """A boundary point at ``q`` times the base side length."""

    q: Fraction

    def u(self, eng: "Unfolding", p: int) -> mp.mpf:
        with mp.workprec(p + GUARD_BITS):
            return eng.frame(p)[4] * self.q.numerator / self.q.denominator


BoundaryPoint = Union[Fixed, Shadow, SideFraction]


def boundary_point(x) -> BoundaryPoint:
    if isinstance(x, (Fixed, Shadow, SideFraction)):
        return x
    if isinstance(x, str):
        x = Fraction(x)
    if isinstance(x, float):
        x = Fraction(repr(x))
    if isinstance(x, int):
        x = Fraction(x)
    return Fixed(x)


@dataclass
class Piece:
    lo: BoundaryPoint
    hi: BoundaryPoint
    node: Node
    exit_side: int


@dataclass
class SplitResult:
    pieces: List[Piece]
    splits: List[Tuple[Shadow, ...]] = field(default_factory=list)  # kept cut points
    touches: List[Shadow] = field(default_factory=list)


class Unfolding:
    """Parallel rays from ``base_side`` in a fixed direction, unfolded lazily."""

    def __init__(self, kite: KiteSpec, direction, base_side: Optional[int] = None,
                 prec: Optional[int] = None, doublings: int = MAX_DOUBLINGS):
        self.kite = kite
        self.direction: Direction = as_direction(direction)
        self.base_side = base_side or kite.base_side
        self.prec = prec or kite.prec
        self.ladder = precision_ladder(self.prec, doublings)
        self._frames: Dict[int, tuple] = {}
        s = self.base_side
        self.root = Node(None, None, s, {s - 1: -1, s % 4: 1})
        self.root.verts[self.prec] = kite.vertices(self.prec)
        self.convex = kite.is_convex
        theta = self.theta(self.prec)
        lo, hi = kite.inward_range(s, self.prec)
        with mp.workprec(self.prec + GUARD_BITS):
            rel = (theta - lo) % (2 * mp.pi)
            if not (tolerance(self.prec) < rel < mp.pi - tolerance(self.prec)):
                raise NotTransversal(
                    f"direction {float(theta):.6g} does not point into the kite from side {s}")

    # -- numeric frame -----------------------------------------------------
    def theta(self, p: int) -> mp.mpf:
        return self.direction.value(self.kite.alpha, self.kite.beta, p)

    def frame(self, p: int):
        """(P0, unit side vector, direction vector, cross(e, d), side length) at ``p``."""
        fr = self._frames.get(p)
        if fr is None:
            V = self.kite.vertices(p)
            s = self.base_side
            with mp.workprec(p + GUARD_BITS):
                P0, P1 = V[s - 1], V[s % 4]
                L = mp.hypot(P1[0] - P0[0], P1[1] - P0[1])
                e = ((P1[0] - P0[0]) / L, (P1[1] - P0[1]) / L)
                th = self.theta(p)
                d = (mp.cos(th), mp.sin(th))
                den = e[0] * d[1] - e[1] * d[0]
                fr = (P0, e, d, den, L)
            self._frames[p] = fr
        return fr

    @property
    def side_length(self) -> mp.mpf:
        return self.frame(self.prec)[4]

    def incidence_sin(self, p: Optional[int] = None) -> mp.mpf:
        return self.frame(p or self.prec)[3]

    def base_point(self, u, p: int):
        P0, e, _, _, _ = self.frame(p)
        with mp.workprec(p + GUARD_BITS):
            u = as_mpf(u, p)
            return (P0[0] + u * e[0], P0[1] + u * e[1])

    # -- trie --------------------------------------------------------------
    def child(self, node: Node, side: int, status: Dict[int, int]) -> Node:
        ch = node.children.get(side)
        if ch is None:
            a, b = side - 1, side % 4
            ch = Node(node, side, side, {a: status[a], b: status[b]})
            node.children[side] = ch
        return ch

    def vertices(self, node: Node, p: Optional[int] = None):
        p = p or self.prec
        got = node.verts.get(p)
        if got is not None:
            return got
        chain, n = [], node
        while p not in n.verts:
            if n.parent is None:
                n.verts[p] = self.kite.vertices(p)
                break
            chain.append(n)
            n = n.parent
        with mp.workprec(p + GUARD_BITS):
            for n in reversed(chain):
                V = n.parent.verts[p]
                a, b = V[n.side - 1], V[n.side % 4]
                n.verts[p] = tuple(reflect_point(q, a, b) for q in V)
        return node.verts[p]

    def u_vertex(self, node: Node, idx: int, p: int) -> mp.mpf:
        key = (idx, p)
        val = node.ucache.get(key)
        if val is None:
            X = self.vertices(node, p)[idx]
            P0, _, d, den, _ = self.frame(p)
            with mp.workprec(p + GUARD_BITS):
                val = ((X[0] - P0[0]) * d[1] - (X[1] - P0[1]) * d[0]) / den
            node.ucache[key] = val
        return val

    def compare(self, x: BoundaryPoint, y: BoundaryPoint) -> int:
        """Sign of u(x) - u(y); 0 if unresolved at the top of the precision ladder."""
        if x is y:
            return 0
        for p in self.ladder:
            with mp.workprec(p + GUARD_BITS):
                gap = x.u(self, p) - y.u(self, p)
                if abs(gap) > tolerance(p):
                    return 1 if gap > 0 else -1
        return 0

    def gap(self, x: BoundaryPoint, y: BoundaryPoint, p: Optional[int] = None) -> mp.mpf:
        p = p or self.prec
        with mp.workprec(p + GUARD_BITS):
            return y.u(self, p) - x.u(self, p)

    def crossing(self, node: Node, side: int, u, p: Optional[int] = None):
        """(t, point) where the ray from base parameter ``u`` meets ``side`` of ``node``."""
        p = p or self.prec
        V = self.vertices(node, p)
        a, b = side - 1, side % 4
        ua, ub = self.u_vertex(node, a, p), self.u_vertex(node, b, p)
        _, _, d, _, _ = self.frame(p)
        with mp.workprec(p + GUARD_BITS):
            u = as_mpf(u, p)
            P = self.base_point(u, p)
            lam = (u - ua) / (ub - ua)
            X = (V[a][0] + lam * (V[b][0] - V[a][0]), V[a][1] + lam * (V[b][1] - V[a][1]))
            t = (X[0] - P[0]) * d[0] + (X[1] - P[1]) * d[1]
            return t, X

    # -- one refinement step -------------------------------------------------
    def _exit_side(self, node: Node, st: Dict[int, int], lo, hi) -> int:
        s = node.entry
        sides = [k for k in range(1, 5) if k != s and st[k - 1] != st[k % 4]]
        if len(sides) == 1 and self.convex:
            return sides[0]
        if not sides:
            raise RuntimeError("no exit side; inconsistent vertex statuses")
        # non-convex copy: nearest crossing beyond the entry point
        for p in self.ladder:
            with mp.workprec(p + GUARD_BITS):
                u = (lo.u(self, p) + hi.u(self, p)) / 2
                t_in, _ = self.crossing(node, s, u, p)
                best = None
                for k in sides:
                    t, _ = self.crossing(node, k, u, p)
                    if t > t_in + tolerance(p) and (best is None or t < best[0]):
                        best = (t, k)
                if best is not None:
                    return best[1]
        raise RuntimeError("exit side undetermined")

    def split(self, node: Node, lo: BoundaryPoint, hi: BoundaryPoint) -> SplitResult:
        """Refine the cell ``(lo, hi)`` whose rays sit in ``node`` by one step.

        Vertices whose shadow coincides with ``lo`` or ``hi`` (unresolved at
        every precision) do not cut the cell and are returned in ``touches``.
        With ``lo is hi`` the cell is a single ray.
        """
        st = dict(node.entry_status)
        inside: List[Shadow] = []
        touches: List[Shadow] = []
        single = lo is hi
        for idx in node.free_vertices():
            v = Shadow(node, idx)
            c = self.compare(v, lo)
            if c < 0 or (c == 0 and not single):
                st[idx] = -1
                if c == 0:
                    touches.append(v)
                continue
            if c == 0:
                touches.append(v)
                continue
            if single:
                st[idx] = 1
                continue
            c = self.compare(v, hi)
            if c >= 0:
                st[idx] = 1
                if c == 0:
                    touches.append(v)
                continue
            inside.append(v)
        if single and touches:
            raise VertexHit(node.depth + 1, touches[0].idx, node.word())
        # order interior shadows; coincident shadows form one cut
        cuts: List[List[Shadow]] = []
        for v in inside:
            if cuts:
                c = self.compare(v, cuts[0][0])
                if c == 0:
                    cuts[0].append(v)
                    continue
                if c < 0:
                    cuts.insert(0, [v])
                    continue
            cuts.append([v])
        bounds = [lo] + [c[0] for c in cuts] + [hi]
        pieces: List[Piece] = []
        kept: List[Tuple[Shadow, ...]] = []
        for i in range(len(bounds) - 1):
            pst = dict(st)
            for j, cut in enumerate(cuts):
                for v in cut:
                    pst[v.idx] = -1 if j < i else 1
            side = self._exit_side(node, pst, bounds[i], bounds[i + 1])
            if pieces and pieces[-1].exit_side == side:
                pieces[-1].hi = bounds[i + 1]
                continue
            if i > 0:
                kept.append(tuple(cuts[i - 1]))
            pieces.append(Piece(bounds[i], bounds[i + 1], self.child(node, side, pst), side))
        return SplitResult(pieces, kept, touches)


@dataclass
class UnfoldedRay:
    word: Tuple[int, ...]
    kites: List[tuple]  # vertex tuples of the copies crossed, the start copy first
    points: List[tuple]  # start point, then one hit point per letter
    length: mp.mpf


def unfold_ray(kite: KiteSpec, start: Tuple[int, object], d, max_steps: int,
               prec: Optional[int] = None) -> UnfoldedRay:
    """Straight ray through successive reflected copies of the kite.

    ``start`` is ``(side, u)`` with ``u`` the arc length from the side's first
    vertex, or a :class:`SideFraction` for an exact point.  Raises :class:`VertexHit` if the ray meets a vertex.
    """
    side, u = start
    eng = Unfolding(kite, d, base_side=side, prec=prec)
    L = eng.side_length
    if isinstance(u, SideFraction):
        u0 = u
    else:
        u0 = Fixed(u if isinstance(u, (Fraction, mp.mpf)) else as_mpf(u, eng.prec))
    u_num = u0.u(eng, eng.prec)
    if not (0 < u_num < L):
        raise ValueError("start point must be interior to its side")
    node = eng.root
    word, kites, points = [], [eng.vertices(node)], [eng.base_point(u_num, eng.prec)]
    t = mp.mpf(0)
    for _ in range(max_steps):
        piece = eng.split(node, u0, u0).pieces[0]
        t, X = eng.crossing(node, piece.exit_side, u_num)
        node = piece.node
        word.append(piece.exit_side)
        kites.append(eng.vertices(node))
        points.append(X)
    return UnfoldedRay(tuple(word), kites, points, t)
