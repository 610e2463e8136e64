"""Small denominators, relative eps-nets on the circle and the net function.

Angles are measured in units of pi by default (``x = alpha/pi``) so that the
rational-multiple-of-pi tables are exactly the degenerate inputs.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import mpmath as mp
import numpy as np

from .geometry import GUARD_BITS, AngleValue, Direction

UNITS = ("pi", "2pi", "raw")
TWO64 = 1 << 64


class EmptySet(ValueError):
    pass


class BudgetExhausted(Exception):
    def __init__(self, estimate: "NetFunctionEstimate", reason: str):
        self.estimate = estimate
        super().__init__(f"net-function search stopped ({reason}); lower bound {estimate.lower_bound}")


class RationalDependenceWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# small denominators

def unit_value(angle, unit: str = "pi", prec: int = 64) -> mp.mpf:
    if unit not in UNITS:
        raise ValueError(f"unit must be one of {UNITS}")
    with mp.workprec(prec + GUARD_BITS):
        v = AngleValue.parse(angle).at(prec) if not isinstance(angle, mp.mpf) else +angle
        if unit == "pi":
            return v / mp.pi
        if unit == "2pi":
            return v / (2 * mp.pi)
        return v


def dist_to_int(v: mp.mpf) -> mp.mpf:
    return abs(v - mp.nint(v))


def _fixed(v: mp.mpf) -> int:
    """Fractional part of ``v`` as a 64-bit fixed-point integer."""
    with mp.workprec(160):
        f = v - mp.floor(v)
        return int(mp.floor(f * TWO64)) % TWO64


class SmallDenominator(NamedTuple):
    value: mp.mpf
    witness: Tuple[int, int]


def _level_pairs(j: int):
    """Canonical (n, m) with |n| + |m| = j: n > 0, or n = 0 and m > 0."""
    ns, ms = [0], [j]
    for n in range(1, j + 1):
        r = j - n
        ns.append(n)
        ms.append(r)
        if r:
            ns.append(n)
            ms.append(-r)
    return np.array(ns, dtype=np.int64), np.array(ms, dtype=np.int64)


def small_denominator_table(alpha, beta, k_max: int, unit: str = "pi", prec: int = 64
                            ) -> List[SmallDenominator]:
    """``N(k)`` for ``k = 1..k_max`` (index ``k - 1``) with the attaining (n, m).

    Each level ``|n| + |m| = j`` is scanned in 64-bit fixed point with wrapping
    arithmetic (exact modulo 1 up to the rounding of x and y themselves); the
    few candidates that could beat the running minimum are re-ranked in mp.
    """
    if k_max < 1:
        raise ValueError("k must be >= 1")
    x, y = unit_value(alpha, unit, 2 * prec), unit_value(beta, unit, 2 * prec)
    X, Y = np.uint64(_fixed(x)), np.uint64(_fixed(y))
    slack = 4 * k_max + 64  # fixed-point rounding allowance
    out: List[SmallDenominator] = []
    best_val, best_nm, bar = None, None, None
    with np.errstate(over="ignore"):
        for j in range(1, k_max + 1):
            ns, ms = _level_pairs(j)
            v = ns.astype(np.uint64) * X + ms.astype(np.uint64) * Y
            d = np.minimum(v, np.uint64(0) - v)
            lo = int(d.min())
            limit = lo + slack if bar is None else min(bar, lo + slack)
            if lo <= limit:
                for i in np.nonzero(d <= np.uint64(limit))[0]:
                    nm = (int(ns[i]), int(ms[i]))
                    with mp.workprec(2 * prec + GUARD_BITS):
                        val = dist_to_int(nm[0] * x + nm[1] * y)
                    if best_val is None or val < best_val or (
                            val == best_val and _lex(nm) < _lex(best_nm)):
                        best_val, best_nm = val, nm
                with mp.workprec(2 * prec + GUARD_BITS):
                    bar = int(mp.floor(best_val * TWO64)) + slack
            out.append(SmallDenominator(best_val, best_nm))
    return out


def _lex(nm):
    return (abs(nm[0]) + abs(nm[1]), nm)


def small_denominator(alpha, beta, k: int, unit: str = "pi", prec: int = 64,
                      warn: bool = True) -> SmallDenominator:
    """``min <n x + m y>`` over ``0 < |n| + |m| <= k`` and a pair attaining it."""
    res = small_denominator_table(alpha, beta, k, unit, prec)[-1]
    if warn and res.value <= degeneracy_threshold(prec):
        warnings.warn(f"angles look rationally dependent: <{res.witness[0]}x + {res.witness[1]}y>"
                      f" = {mp.nstr(res.value, 5)}", RationalDependenceWarning, stacklevel=2)
    return res


def small_denominator_exhaustive(alpha, beta, k: int, unit: str = "pi", prec: int = 64
                                 ) -> SmallDenominator:
    """The definition as a plain double loop (reference implementation)."""
    x, y = unit_value(alpha, unit, 2 * prec), unit_value(beta, unit, 2 * prec)
    best = None
    with mp.workprec(2 * prec + GUARD_BITS):
        for n in range(0, k + 1):
            r = k - n
            for m in range(-r, r + 1):
                if n == 0 and m <= 0:
                    continue
                val = dist_to_int(n * x + m * y)
                if best is None or val < best[0] or (val == best[0] and _lex((n, m)) < _lex(best[1])):
                    best = (val, (n, m))
    return SmallDenominator(*best)


def degeneracy_threshold(prec: int = 64) -> mp.mpf:
    return mp.ldexp(mp.mpf(1), -(prec // 2))


@dataclass
class IndependenceCheck:
    independent: bool
    value: mp.mpf
    witness: Tuple[int, int]
    k: int


def check_rational_independence(alpha, beta, k: int = 1000, unit: str = "pi",
                                prec: int = 64) -> IndependenceCheck:
    """Heuristic: no small relation ``<n x + m y> <= 2^(-prec/2)`` with ``|n|+|m| <= k``.

    Relations involving 1 (i.e. pi in the default unit) are included because
    the distance to the nearest integer absorbs them.
    """
    res = small_denominator_table(alpha, beta, k, unit, prec)[-1]
    return IndependenceCheck(bool(res.value > degeneracy_threshold(prec)), res.value, res.witness, k)


# ---------------------------------------------------------------------------
# relative eps-nets

def _exact(values):
    if all(isinstance(v, (int, float, Fraction)) for v in values):
        return [Fraction(v) for v in values]
    return [mp.mpf(v) if not isinstance(v, mp.mpf) else v for v in values]


def is_relative_eps_net(points: Iterable, segment: Tuple, eps) -> bool:
    """True iff ``points`` becomes an eps-net of [0, 1] after rescaling ``segment``.

    Comparisons are inclusive and exact for int/float/Fraction input.
    """
    pts = list(points)
    if not pts:
        raise EmptySet("no points")
    u, v = segment
    vals = _exact(pts + [u, v, eps])
    *xs, u, v, eps = vals
    if not v > u:
        raise ValueError("segment must have v > u")
    if any(x < u or x > v for x in xs):
        raise ValueError("points must lie in the segment")
    span = v - u
    xs = sorted(xs)
    lim = eps * span
    if xs[0] - u > lim or v - xs[-1] > lim:
        return False
    return all(b - a <= 2 * lim for a, b in zip(xs, xs[1:]))


def _circle(p: float) -> float:
    return p % (2 * math.pi)


def contains_relative_net(points: Sequence[float], eps: float, rtol: float = 1e-12
                          ) -> Optional[Tuple[int, int]]:
    """A subset that is a relative eps-net of its own minimal spanning arc, or None.

    Returns the (start, end) indices into the sorted distinct points of the
    arc ``[start, end]`` (counterclockwise) whose contained points form the net.
    Uses that the best subset with a given spanning arc takes every point on it.
    """
    P = sorted({_circle(p) for p in points})
    n = len(P)
    two_pi = 2 * math.pi
    for i in range(n):
        gap = 0.0
        for k in range(1, n):
            a, b = P[(i + k - 1) % n], P[(i + k) % n]
            gap = max(gap, (b - a) % two_pi)
            span = (P[(i + k) % n] - P[i]) % two_pi
            if gap <= 2 * eps * span * (1 + rtol) and gap <= (two_pi - span) * (1 + rtol):
                return (i, (i + k) % n)
    return None


def minimal_spanning_arc(points: Sequence[float]) -> Tuple[float, float]:
    """(start, length) of the shortest closed arc containing all points."""
    P = sorted({_circle(p) for p in points})
    if len(P) == 1:
        return P[0], 0.0
    gaps = [((P[(i + 1) % len(P)] - P[i]) % (2 * math.pi), i) for i in range(len(P))]
    g, i = max(gaps)
    return P[(i + 1) % len(P)], 2 * math.pi - g


# ---------------------------------------------------------------------------
# alpha-beta connected sequences

def is_alpha_beta_connected(seq: Sequence, alpha, beta, tol=None) -> bool:
    """Every consecutive circle difference is one of +-alpha, +-beta.

    Sequences of :class:`Direction` are compared coefficient-exactly (the step
    must change ``a`` or ``b`` by one and nothing else).
    """
    if len(seq) < 2:
        raise ValueError("need at least two points")
    if all(isinstance(s, Direction) for s in seq):
        for d0, d1 in zip(seq, seq[1:]):
            if (d0.sign, d0.seed, d0.c) != (d1.sign, d1.seed, d1.c):
                return False
            if sorted((abs(d1.a - d0.a), abs(d1.b - d0.b))) != [0, 1]:
                return False
        return True
    with mp.workprec(96):
        a = AngleValue.parse(alpha).at(96) if not isinstance(alpha, mp.mpf) else alpha
        b = AngleValue.parse(beta).at(96) if not isinstance(beta, mp.mpf) else beta
        tol = mp.mpf(tol) if tol is not None else mp.mpf(2) ** -32
        gens = [a, -a, b, -b]
        for x0, x1 in zip(seq, seq[1:]):
            diff = mp.mpf(x1) - mp.mpf(x0)
            if not any(abs(_wrap(diff - g)) <= tol for g in gens):
                return False
        return True


def _wrap(x):
    two_pi = 2 * mp.pi
    return (x + mp.pi) % two_pi - mp.pi


def walk_points(steps: str, alpha: float, beta: float, start: float = 0.0) -> List[float]:
    """Circle points visited by a step string such as ``"+a+b-a"``."""
    pts = [start]
    for i in range(0, len(steps), 2):
        sgn = 1 if steps[i] == "+" else -1
        pts.append(pts[-1] + sgn * (alpha if steps[i + 1] == "a" else beta))
    return pts


def axis_orientations(word: Sequence[int], alpha, beta) -> List[mp.mpf]:
    """Absolute orientation of the symmetry axis of each copy along an unfolding.

    Successive values differ by +-2*alpha or +-2*beta.
    """
    from .geometry import SIDE_INCLINATION

    a, b = AngleValue.parse(alpha).at(96), AngleValue.parse(beta).at(96)
    ori, sign, out = mp.mpf(0), 1, [mp.mpf(0)]
    with mp.workprec(96):
        for s in word:
            ga, gb, gc = SIDE_INCLINATION[s]
            ori = ori + 2 * sign * (ga * a + gb * b + gc * mp.pi)
            sign = -sign
            out.append(ori % (2 * mp.pi))
    return out


# ---------------------------------------------------------------------------
# net function

@dataclass(frozen=True)
class NetBudget:
    max_size: int = 10
    max_animals: int = 200_000


@dataclass
class NetFunctionEstimate:
    epsilon: float
    lower_bound: int
    upper_bound: Optional[int]
    witness: str  # step string of a walk covering the witness set
    witness_points: List[float]
    budget: NetBudget
    explored: int = 0
    segment_rule: str = "minimal spanning arc of the subset"

    @property
    def exact(self) -> bool:
        return self.upper_bound is not None and self.upper_bound == self.lower_bound


def _valid(c):
    return c[1] > 0 or (c[1] == 0 and c[0] >= 0)


def _tour(cells: Sequence[Tuple[int, int]]) -> str:
    """Step string of a depth-first walk visiting every cell (with backtracking)."""
    cellset = set(cells)
    start = cells[0]
    seen = {start}
    out = []
    marks = set()

    def go(c):
        for dx, dy, fwd, back in ((1, 0, "+a", "-a"), (-1, 0, "-a", "+a"),
                                  (0, 1, "+b", "-b"), (0, -1, "-b", "+b")):
            nb = (c[0] + dx, c[1] + dy)
            if nb in cellset and nb not in seen:
                seen.add(nb)
                out.append(fwd)
                marks.add(len(out) - 1)
                go(nb)
                out.append(back)

    go(start)
    last = max(marks, default=-1)
    return "".join(out[:last + 1])


def estimate_net_function(alpha, beta, eps, budget: NetBudget = NetBudget(),
                          raise_on_budget: bool = True) -> NetFunctionEstimate:
    """Bounds on the least n such that every connected set of more than n points has a net.

    The search runs over lattice animals ``{i*alpha + j*beta}`` (every connected
    sequence visits such a set, and every animal is visited by some walk),
    extending only animals that are still net-free, since a net in a subset
    persists in every superset.  Sizes are explored up to ``budget.max_size``.
    """
    eps_f = float(eps)
    if not 0 < eps_f < 1:
        raise ValueError("eps must be in (0, 1)")
    a = float(AngleValue.parse(alpha)) if not isinstance(alpha, float) else alpha
    b = float(AngleValue.parse(beta)) if not isinstance(beta, float) else beta

    def pts(cells):
        return [i * a + j * b for i, j in cells]

    free_at = {}  # size -> first net-free animal found
    counter = [0]
    stop = [None]
    max_size = budget.max_size

    def rec(animal, untried, seen):
        while untried and stop[0] is None:
            c = untried.pop()
            animal.append(c)
            counter[0] += 1
            if counter[0] > budget.max_animals:
                stop[0] = "animal cap"
            elif contains_relative_net(pts(animal), eps_f) is None:
                s = len(animal)
                if s not in free_at:
                    free_at[s] = list(animal)
                if s < max_size:
                    new = []
                    for dx, dy in ((1, 0), (0, 1), (-1, 0), (0, -1)):
                        nb = (c[0] + dx, c[1] + dy)
                        if nb not in seen and _valid(nb):
                            seen.add(nb)
                            new.append(nb)
                    rec(animal, list(untried) + new, seen)
                    for nb in new:
                        seen.discard(nb)
            animal.pop()

    rec([], [(0, 0)], {(0, 0)})
    lower = max(free_at) if free_at else 0
    if stop[0] is None and lower < max_size:
        upper = lower  # no net-free animal of size lower + 1
    else:
        upper = None
        if stop[0] is None:
            stop[0] = f"size cap {max_size}"
    wit = free_at.get(lower, [(0, 0)])
    steps = _tour(wit)
    est = NetFunctionEstimate(eps_f, lower, upper, steps, walk_points(steps, a, b),
                              budget, counter[0])
    if upper is None and raise_on_budget:
        raise BudgetExhausted(est, stop[0])
    return est


def replay_witness(est: NetFunctionEstimate, max_exhaustive: int = 20) -> Tuple[bool, bool]:
    """Re-check that no subset of the witness is a relative net.

    Returns ``(ok, exhaustive)``; beyond ``max_exhaustive`` distinct points only
    a seeded sample of subsets is tried and ``exhaustive`` is False.
    """
    P = sorted({round(_circle(p), 15) for p in est.witness_points})
    exhaustive = len(P) <= max_exhaustive
    if exhaustive:
        subsets = (s for r in range(2, len(P) + 1) for s in combinations(P, r))
    else:
        rng = np.random.default_rng(0)
        subsets = (tuple(sorted(rng.choice(P, size=rng.integers(2, len(P) + 1), replace=False)))
                   for _ in range(20000))
    for sub in subsets:
        start, length = minimal_spanning_arc(sub)
        if length <= 0:
            continue
        rel = [min((p - start) % (2 * math.pi), length) for p in sub]
        if is_relative_eps_net(rel, (0.0, length), est.epsilon):
            return False, exhaustive
    return True, exhaustive


# ---------------------------------------------------------------------------
# F-table files

F_TABLE_HEADER = (
    "# net-function table\n"
    "# columns: epsilon lower_bound upper_bound_or_NA witness_steps\n"
    "# witness_steps: walk from 0 by +-alpha (a) / +-beta (b); '.' for a single point\n"
    "# segment rule: relative nets are taken over the subset's minimal spanning arc\n"
)


def write_f_table(rows: Sequence[NetFunctionEstimate], alpha, beta) -> str:
    lines = [F_TABLE_HEADER, f"# alpha={alpha} beta={beta}\n"]
    for r in rows:
        up = "NA" if r.upper_bound is None else str(r.upper_bound)
        lines.append(f"{r.epsilon!r} {r.lower_bound} {up} {r.witness or '.'}\n")
    return "".join(lines)


def read_f_table(text: str) -> List[Tuple[float, int, Optional[int], str]]:
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        eps, lo, up, wit = line.split()
        out.append((float(eps), int(lo), None if up == "NA" else int(up), "" if wit == "." else wit))
    return out
