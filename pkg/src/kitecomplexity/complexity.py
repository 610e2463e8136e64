"""Directional complexity by exact refinement of the base-side coding partition."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath as mp

from .beams import Unsplit, partition_splitting_times
from .geometry import KiteSpec
from .unfolding import (
    BoundaryPoint,
    BoundaryVertexAmbiguous,
    Node,
    SideFraction,
    Unfolding,
    boundary_point,
)


class UnsplitCells(Exception):
    def __init__(self, cells: List[int], partial=None):
        self.cells = cells
        self.partial = partial
        super().__init__(f"{len(cells)} cell(s) never split before the horizon: {cells[:10]}")


@dataclass
class Cell:
    lo: BoundaryPoint
    hi: BoundaryPoint
    node: Node

    @property
    def word(self) -> Tuple[int, ...]:
        return self.node.word()


@dataclass
class CutEvent:
    """A new cell boundary created at ``step`` inside parent cell ``cell``."""

    step: int
    cell: int
    vertices: Tuple[Tuple[int, int], ...]  # (copy depth, vertex index) casting the cut
    point: BoundaryPoint


@dataclass
class CodingPartition:
    depth: int
    cells: List[Cell]
    engine: Unfolding
    events: List[CutEvent] = field(default_factory=list)  # cuts made reaching this depth
    touches: int = 0  # vertex shadows landing exactly on an existing boundary

    @property
    def boundary(self) -> List[BoundaryPoint]:
        return [c.lo for c in self.cells[1:]]

    def count(self) -> int:
        return len({id(c.node) for c in self.cells})

    def words(self) -> List[Tuple[int, ...]]:
        return [c.word for c in self.cells]

    def intervals(self, p: Optional[int] = None):
        p = p or self.engine.prec
        return [(c.lo.u(self.engine, p), c.hi.u(self.engine, p)) for c in self.cells]

    def min_width(self) -> mp.mpf:
        return min(b - a for a, b in self.intervals())


def initial_partition(kite: KiteSpec, d, base_side: Optional[int] = None,
                      prec: Optional[int] = None) -> CodingPartition:
    eng = Unfolding(kite, d, base_side, prec)
    return CodingPartition(0, [Cell(boundary_point(0), SideFraction(Fraction(1)), eng.root)], eng)


def refine_partition(partition: CodingPartition, kite: Optional[KiteSpec] = None, d=None,
                     on_touch: str = "closed") -> CodingPartition:
    """One more letter: every cell is cut at the vertex shadows that fall inside it.

    ``kite`` and ``d`` are accepted for symmetry with the other entry points and
    must match the partition's own when given.
    """
    eng = partition.engine
    if kite is not None and kite != eng.kite:
        raise ValueError("partition was built for a different kite")
    if d is not None and d != eng.direction and str(d) != str(eng.direction.seed):
        raise ValueError("partition was built for a different direction")
    step = partition.depth + 1
    cells: List[Cell] = []
    events: List[CutEvent] = []
    touches = 0
    for i, cell in enumerate(partition.cells):
        res = eng.split(cell.node, cell.lo, cell.hi)
        if res.touches:
            if on_touch == "raise":
                raise BoundaryVertexAmbiguous(step, res.touches[0], cell=i)
            touches += len(res.touches)
        for cut in res.splits:
            events.append(CutEvent(step, i, tuple((v.node.depth, v.idx) for v in cut), cut[0]))
        cells.extend(Cell(pc.lo, pc.hi, pc.node) for pc in res.pieces)
    return CodingPartition(step, cells, eng, events, touches)


@dataclass
class ComplexityProfile:
    kite: str
    direction: str
    base_side: int
    values: Dict[int, int]
    cuts: Dict[int, int]  # number of new boundary points created at each n
    min_width: Dict[int, float] = field(default_factory=dict)
    touches: int = 0

    @property
    def n_max(self) -> int:
        return max(self.values) if self.values else 0

    def __getitem__(self, n: int) -> int:
        return self.values[n]

    def as_list(self) -> List[int]:
        return [self.values[n] for n in sorted(self.values)]

    def increments(self) -> Dict[int, int]:
        return {n: self.values[n] - self.values.get(n - 1, 1) for n in sorted(self.values)}

    def stabilized_at(self) -> Optional[int]:
        """Smallest n* with p constant on [n*, n_max], or None if the last step grew."""
        ns = sorted(self.values)
        if len(ns) < 2 or self.values[ns[-1]] != self.values[ns[-2]]:
            return None
        star = ns[-1]
        for n in reversed(ns[:-1]):
            if self.values[n] != self.values[ns[-1]]:
                break
            star = n
        return star

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "p_theta_n"])
        for n in sorted(self.values):
            w.writerow([n, self.values[n]])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "kite": self.kite,
            "direction": self.direction,
            "base_side": self.base_side,
            "p": [[n, self.values[n]] for n in sorted(self.values)],
            "cuts": [[n, self.cuts[n]] for n in sorted(self.cuts)],
            "touches": self.touches,
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ComplexityProfile":
        doc = json.loads(text)
        return cls(doc["kite"], doc["direction"], doc["base_side"],
                   {n: v for n, v in doc["p"]}, {n: v for n, v in doc["cuts"]},
                   touches=doc.get("touches", 0))


def directional_complexity(kite: KiteSpec, d, n_max: int, base_side: Optional[int] = None,
                           on_touch: str = "closed", keep: bool = False):
    """Profile ``n -> p(n)`` for ``n = 1..n_max``; with ``keep`` also the final partition."""
    part = initial_partition(kite, d, base_side)
    values, cuts, widths = {}, {}, {}
    touches = 0
    for n in range(1, n_max + 1):
        part = refine_partition(part, on_touch=on_touch)
        values[n] = part.count()
        cuts[n] = len(part.events)
        touches += part.touches
    eng = part.engine
    prof = ComplexityProfile(kite.name, _direction_label(eng), eng.base_side, values, cuts,
                             widths, touches)
    return (prof, part) if keep else prof


def _direction_label(eng: Unfolding) -> str:
    d = eng.direction
    if d.seed is not None and (d.a, d.b, d.c, d.sign) == (0, 0, 0, 1):
        return str(d.seed)
    return repr(d.coefficients) + (f" seed={d.seed}" if d.seed is not None else "")


@dataclass
class PartitionBound:
    m: int
    T_emp: int
    times: List[int]
    p_at_T: int
    verified: bool


def empirical_partition_bound(kite: KiteSpec, d, m: int, horizon: int,
                              base_side: Optional[int] = None) -> PartitionBound:
    """Largest splitting time over the ``m`` equal cells, checked against ``p(T_emp) >= m``."""
    times = partition_splitting_times(kite, d, m, horizon, base_side)
    bad = [i for i, t in enumerate(times) if isinstance(t, Unsplit)]
    if bad:
        raise UnsplitCells(bad, times)
    T = max(times)
    prof = directional_complexity(kite, d, T, base_side)
    p = prof[T]
    return PartitionBound(m, T, list(times), p, p >= m)


def empirical_T_table(kite: KiteSpec, d, ms: Sequence[int], horizon: int,
                      base_side: Optional[int] = None) -> Dict[int, Optional[int]]:
    """``m -> T_emp(1/m)``; None where some cell stays unsplit up to ``horizon``."""
    eng = Unfolding(kite, d, base_side)
    out = {}
    for m in ms:
        times = partition_splitting_times(kite, d, m, horizon, engine=eng)
        out[m] = None if any(isinstance(t, Unsplit) for t in times) else max(times)
    return out
