"""Evaluators for the explicit lower-bound formulas, with pluggable sources.

Every value carries a source label; the weakest input wins:
``certified`` < ``assumed-table`` < ``heuristic``.
"""
from __future__ import annotations

import bisect
import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import mpmath as mp

from .diophantine import (
    BudgetExhausted,
    NetBudget,
    check_rational_independence,
    estimate_net_function,
    small_denominator_table,
)
from .periodic import PeriodicTheta

LABELS = ("certified", "assumed-table", "heuristic")
CONSTANT_NAMES = ("C_dichotomy", "c_shear", "C_phi_arg", "C_generic", "C_lower")
LOG_PREC = 128


class OutOfTable(KeyError):
    pass


class FSourceUnresolved(LookupError):
    pass


class RSourceUnresolved(LookupError):
    pass


class ZeroDenominator(ZeroDivisionError):
    pass


def weakest(*labels: str) -> str:
    return max(labels, key=LABELS.index)


def exact_eps(eps) -> Fraction:
    """Decimal input as an exact rational (0.1 -> 1/10)."""
    if isinstance(eps, Fraction):
        return eps
    if isinstance(eps, float):
        return Fraction(repr(eps))
    return Fraction(str(eps))


# ---------------------------------------------------------------------------
# constants

@dataclass
class ConstantsConfig:
    C_dichotomy: float = 1.0
    c_shear: float = 1.0
    C_phi_arg: float = 1.0
    C_generic: float = 1.0
    C_lower: float = 1.0
    provenance: Dict[str, str] = field(default_factory=lambda: {k: "default" for k in CONSTANT_NAMES})

    def __post_init__(self):
        for k in CONSTANT_NAMES:
            v = getattr(self, k)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ValueError(f"constant {k} must be a positive finite number, got {v!r}")
            self.provenance.setdefault(k, "default")
        bad = set(self.provenance.values()) - {"default", "calibrated", "user"}
        if bad:
            raise ValueError(f"unknown provenance tag(s) {sorted(bad)}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ConstantsConfig":
        vals = {k: float(doc[k]) for k in CONSTANT_NAMES if k in doc}
        prov = dict(doc.get("provenance", {}))
        for k in vals:
            prov.setdefault(k, "user")
        return cls(**vals, provenance=prov)

    @classmethod
    def from_json(cls, text: str) -> "ConstantsConfig":
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# integer tables extended to real arguments

def convention_extend(table: Union[Mapping[int, object], Sequence]) -> Callable:
    """Real-argument version of a table on 1..n: ``f(x) = f(floor(x) + 1)`` off the integers."""
    if not isinstance(table, Mapping):
        table = {i + 1: v for i, v in enumerate(table)}
    table = dict(table)

    def f(x):
        if isinstance(x, int) or (isinstance(x, Fraction) and x.denominator == 1):
            key = int(x)
        else:
            fl = math.floor(x)
            key = fl if x == fl else fl + 1
        if key not in table:
            raise OutOfTable(key)
        return table[key]

    return f


def convention_index(x) -> int:
    """The integer a real argument is sent to by the extension convention."""
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return x.numerator // x.denominator + (0 if x.denominator == 1 else 1)
    fl = int(mp.floor(x))
    return fl if x == fl else fl + 1


# ---------------------------------------------------------------------------
# sources

class AssumedFTable:
    """Assumed net-function values: a constant, or a non-increasing step table eps -> F."""

    label = "assumed-table"

    def __init__(self, const: Optional[int] = 5, table: Optional[Mapping[float, int]] = None):
        self.const = const
        self.table = sorted((float(k), int(v)) for k, v in (table or {}).items())
        for (e0, f0), (e1, f1) in zip(self.table, self.table[1:]):
            if f1 > f0:
                raise ValueError("F table must be non-increasing in eps")

    def __call__(self, log10_x: mp.mpf) -> Tuple[int, str]:
        if not self.table:
            if self.const is None:
                raise FSourceUnresolved("empty F table")
            return self.const, self.label
        # largest tabulated eps <= x gives an upper value for F(x)
        keys = [math.log10(e) for e, _ in self.table]
        i = bisect.bisect_right(keys, float(log10_x)) - 1
        if i < 0:
            if self.const is None:
                raise FSourceUnresolved(f"no F value at or below 10^{float(log10_x):.4g}")
            return self.const, self.label
        return self.table[i][1], self.label

    def describe(self) -> str:
        return f"assumed F={self.const}" if not self.table else f"assumed table {self.table}"


class NetEstimateFSource:
    """F from the bounded animal search; only feasible for moderate arguments."""

    def __init__(self, alpha, beta, budget: NetBudget = NetBudget()):
        self.alpha, self.beta, self.budget = alpha, beta, budget
        self._cache: Dict[float, Tuple[int, str]] = {}

    def __call__(self, log10_x: mp.mpf) -> Tuple[int, str]:
        if log10_x < -3:
            raise FSourceUnresolved(f"net-function search infeasible at 10^{float(log10_x):.4g}")
        x = float(mp.power(10, log10_x))
        if x not in self._cache:
            try:
                est = estimate_net_function(self.alpha, self.beta, x, self.budget)
            except BudgetExhausted as exc:
                raise FSourceUnresolved(str(exc)) from exc
            if est.upper_bound is None:
                raise FSourceUnresolved(f"no upper value for F at {x}")
            self._cache[x] = (est.upper_bound, "certified" if est.exact else "heuristic")
        return self._cache[x]

    def describe(self) -> str:
        return f"net-function search (max size {self.budget.max_size})"


class NSource:
    """``N(k)`` from the exact scan, cached; extended to real ``k`` by the convention."""

    def __init__(self, alpha, beta, unit: str = "pi", prec: int = 128, k_cap: int = 20000):
        self.alpha, self.beta, self.unit, self.prec, self.k_cap = alpha, beta, unit, prec, k_cap
        self._table: List = []
        chk = check_rational_independence(alpha, beta, k=200, unit=unit, prec=prec)
        self.label = "certified" if chk.independent else "heuristic"
        self.independent = chk.independent

    def _ensure(self, k: int):
        if k > self.k_cap:
            raise RSourceUnresolved(f"N({k}) beyond the scan cap {self.k_cap}")
        if k > len(self._table):
            self._table = small_denominator_table(self.alpha, self.beta, max(k, 2 * len(self._table)),
                                                  self.unit, self.prec)

    def __call__(self, k) -> mp.mpf:
        k = convention_index(k)
        if k < 1:
            raise OutOfTable(k)
        self._ensure(k)
        return self._table[k - 1].value

    def is_zero(self, value, k: int) -> bool:
        """An exact relation shows up as rounding noise of size about k * 2^-prec."""
        return value <= k * mp.ldexp(mp.mpf(1), 16 - self.prec)


# ---------------------------------------------------------------------------
# formulas

@dataclass
class PValue:
    eps: Fraction
    value: Fraction
    log10_inner: mp.mpf
    F: int
    label: str


def inner_log10(eps) -> mp.mpf:
    """log10 of (eps/1600)^(16/eps), exact exponent, computed in the log domain."""
    e = exact_eps(eps)
    with mp.workprec(LOG_PREC):
        return (mp.mpf(16) * e.denominator / e.numerator) * mp.log10(mp.mpf(e.numerator) / (e.denominator * 1600))


def P_alpha_beta(eps, F_source) -> PValue:
    e = exact_eps(eps)
    if not 0 < e < 1:
        raise ValueError("eps must be in (0, 1)")
    lx = inner_log10(e)
    F, label = F_source(lx)
    return PValue(e, Fraction(16) / e * F, lx, F, label)


@dataclass
class MValue:
    eps: Fraction
    value: mp.mpf
    P: PValue
    N: mp.mpf
    k: int
    label: str


def M_of_eps(eps, F_source, N_source: NSource, constants: ConstantsConfig) -> MValue:
    P = P_alpha_beta(eps, F_source)
    k = convention_index(P.value)
    N = N_source(k)
    zero = N_source.is_zero(N, k) if hasattr(N_source, "is_zero") else N == 0
    if zero:
        raise ZeroDenominator(f"N({k}) = {mp.nstr(N, 5)}: angles look rationally dependent")
    with mp.workprec(LOG_PREC):
        val = mp.mpf(constants.C_dichotomy) / N
    return MValue(P.eps, val, P, N, k, weakest(P.label, N_source.label))


@dataclass
class TValue:
    value: mp.mpf
    branch: str  # "M" or "phi"
    phi: mp.mpf
    label: str


def T_of_eps(eps, M_value, phi_source: Callable, constants: ConstantsConfig,
             phi_label: str = "certified") -> TValue:
    """max{M, C/phi(C*M)}.

    ``phi_source`` maps an integer length to a number, a PhiValue, or a
    ``(value, label)`` pair whose label then joins the weakest-input rule.
    """
    M = M_value.value if isinstance(M_value, MValue) else mp.mpf(M_value)
    label = weakest(M_value.label, phi_label) if isinstance(M_value, MValue) else phi_label
    C = mp.mpf(constants.C_phi_arg)
    with mp.workprec(LOG_PREC):
        arg = C * M
        ph = phi_source(convention_index(arg))
        if isinstance(ph, tuple):
            ph, lab = ph
            label = weakest(label, lab)
        ph = getattr(ph, "value", ph)
        ph = mp.mpf(ph.numerator) / ph.denominator if isinstance(ph, Fraction) else mp.mpf(ph)
        if ph == 0:
            raise PeriodicTheta("phi vanishes: the direction is periodic")
        other = C / ph
        if other > M:
            return TValue(other, "phi", ph, label)
        return TValue(M, "M", ph, label)


@dataclass
class IntervalUnion:
    intervals: List[Tuple[mp.mpf, mp.mpf]]

    @property
    def measure(self) -> mp.mpf:
        return sum((b - a for a, b in self.intervals), mp.mpf(0))

    def contains(self, x) -> bool:
        i = bisect.bisect_right([a for a, _ in self.intervals], x) - 1
        return i >= 0 and x < self.intervals[i][1]

    @classmethod
    def build(cls, centres, radius) -> "IntervalUnion":
        raw = sorted((c - radius, c + radius) for c in centres)
        out: List[List[mp.mpf]] = []
        for a, b in raw:
            if out and a <= out[-1][1]:
                out[-1][1] = max(out[-1][1], b)
            else:
                out.append([a, b])
        return cls([tuple(x) for x in out])

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        merged = sorted(self.intervals + other.intervals)
        out: List[List[mp.mpf]] = []
        for a, b in merged:
            if out and a <= out[-1][1]:
                out[-1][1] = max(out[-1][1], b)
            else:
                out.append([a, b])
        return IntervalUnion([tuple(x) for x in out])


def bad_radius_log10(n: int, rho) -> mp.mpf:
    with mp.workprec(LOG_PREC):
        return mp.log10(mp.mpf(rho)) - (2 * n + 1) * mp.log10(4)


def bad_set(n: int, rho, catalog) -> IntervalUnion:
    """Open intervals of radius rho*4^(-2n-1) around base-side periodic directions of length < n."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    catalog.require(n - 1)
    with mp.workprec(LOG_PREC):
        r = mp.power(10, bad_radius_log10(n, rho))
        return IntervalUnion.build(catalog.base_directions(below=n), r)


def bad_set_upto(n_max: int, rho, catalog) -> IntervalUnion:
    u = IntervalUnion([])
    for n in range(1, n_max + 1):
        u = u.union(bad_set(n, rho, catalog))
    return u


def generic_T_bound(eps, M_value, rho, constants: ConstantsConfig) -> mp.mpf:
    """C*exp(C*M): the splitting-time bound for directions outside the bad set."""
    M = M_value.value if isinstance(M_value, MValue) else mp.mpf(M_value)
    C = mp.mpf(constants.C_generic)
    with mp.workprec(LOG_PREC):
        return C * mp.exp(C * M)


def consistency_constant(C, rho) -> mp.mpf:
    """C' with (C/rho) 4^(2CM+1) <= C' exp(C'M) for all M >= 0."""
    with mp.workprec(LOG_PREC):
        C, rho = mp.mpf(C), mp.mpf(rho)
        return max(4 * C / rho, 2 * C * mp.log(4))


def N_theta(n: int, T_table: Mapping[int, Optional[float]]) -> int:
    """Largest m with T(1/m) <= n, using the running maximum of T over m."""
    best, env = 0, -math.inf
    for m in sorted(T_table):
        t = T_table[m]
        env = math.inf if t is None else max(env, t)
        if env <= n:
            best = m
    return best


class RSource:
    """R(m) = N(P(1/m)), i.e. the small denominator at 16m F((1/1600m)^(16m))."""

    def __init__(self, F_source, N_source: NSource):
        self.F_source, self.N_source = F_source, N_source
        self._cache: Dict[int, Tuple[mp.mpf, str]] = {}

    def __call__(self, m: int) -> Tuple[mp.mpf, str]:
        if m not in self._cache:
            try:
                P = P_alpha_beta(Fraction(1, m), self.F_source) if m > 1 else _P_at_one(self.F_source)
                val = self.N_source(P.value)
            except (FSourceUnresolved, OutOfTable) as exc:
                raise RSourceUnresolved(str(exc)) from exc
            self._cache[m] = (val, weakest(P.label, self.N_source.label))
        return self._cache[m]


def _P_at_one(F_source) -> PValue:
    # eps = 1 sits on the edge of the formula's domain; evaluate it anyway for m = 1
    e = Fraction(1)
    lx = inner_log10(e)
    F, label = F_source(lx)
    return PValue(e, Fraction(16) * F, lx, F, label)


@dataclass
class LValue:
    n: int
    value: int
    label: str
    truncated: bool
    threshold: mp.mpf


def lower_bound_L(n: int, R_source: Callable[[int], Tuple[mp.mpf, str]], constants: ConstantsConfig,
               m_max: int = 64) -> LValue:
    """max{m : R(m) >= C/ln(n)} by bisection (R is non-increasing in m).

    ``truncated`` is set when even ``R(m_max)`` clears the threshold.
    """
    if n < 2:
        raise ValueError("n must be >= 2 so that ln(n) > 0")
    with mp.workprec(LOG_PREC):
        thr = mp.mpf(constants.C_lower) / mp.log(n)

    labels = []

    def ok(m):
        v, lab = R_source(m)
        labels.append(lab)
        return v >= thr

    if not ok(1):
        return LValue(n, 0, weakest(*labels), False, thr)
    if ok(m_max):
        return LValue(n, m_max, weakest(*labels), True, thr)
    lo, hi = 1, m_max  # ok(lo), not ok(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return LValue(n, lo, weakest(*labels), False, thr)


def lower_bound_L_scan(n: int, R_source, constants: ConstantsConfig, m_max: int = 64) -> int:
    """Reference: direct scan of m = 1..m_max."""
    with mp.workprec(LOG_PREC):
        thr = mp.mpf(constants.C_lower) / mp.log(n)
    best = 0
    for m in range(1, m_max + 1):
        if R_source(m)[0] >= thr:
            best = m
    return best


# ---------------------------------------------------------------------------
# profile

@dataclass
class BoundProfile:
    constants: ConstantsConfig
    rows: List[Tuple[str, str, Optional[float], str]] = field(default_factory=list)

    def add(self, quantity: str, argument, value, label: str):
        if value is None:
            lg = None
        else:
            with mp.workprec(LOG_PREC):
                v = mp.mpf(value) if not isinstance(value, Fraction) else mp.mpf(value.numerator) / value.denominator
                lg = float(mp.log10(v)) if v > 0 else float("-inf")
        self.rows.append((quantity, str(argument), lg, label))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "argument", "value_log10", "source_label", "constants_hash"])
        h = self.constants.digest()
        for q, a, lg, lab in self.rows:
            w.writerow([q, a, "NA" if lg is None else f"{lg:.12g}", lab, h])
        return buf.getvalue()


def bound_profile(eps_grid: Sequence, ms: Sequence[int], ns: Sequence[int], F_source,
                  N_source: NSource, constants: ConstantsConfig, phi_source=None,
                  phi_label: str = "certified", T_table: Optional[Mapping[int, Optional[int]]] = None,
                  m_max: int = 64) -> BoundProfile:
    prof = BoundProfile(constants)
    for eps in eps_grid:
        try:
            P = P_alpha_beta(eps, F_source)
            prof.add("P", eps, P.value, P.label)
            M = M_of_eps(eps, F_source, N_source, constants)
            prof.add("M", eps, M.value, M.label)
            if phi_source is not None:
                T = T_of_eps(eps, M, phi_source, constants, phi_label)
                prof.add("T", eps, T.value, T.label)
        except (FSourceUnresolved, ZeroDenominator, RSourceUnresolved, PeriodicTheta) as exc:
            prof.add("error", eps, None, type(exc).__name__)
    R = RSource(F_source, N_source)
    for m in ms:
        try:
            v, lab = R(m)
            prof.add("R", m, v, lab)
        except RSourceUnresolved:
            prof.add("R", m, None, "unresolved")
    for n in ns:
        L = lower_bound_L(n, R, constants, m_max)
        prof.add("L", n, L.value if L.value else None, L.label)
        if T_table is not None:
            prof.add("N_theta", n, N_theta(n, T_table) or None, "certified")
    return prof


# ---------------------------------------------------------------------------
# calibration

@dataclass
class CalibrationSample:
    """Empirical splitting times for one (kite, direction)."""

    R: Mapping[int, mp.mpf]  # m -> R(m)
    N_at_P: Mapping[int, mp.mpf]  # m -> N(P(1/m))
    T_emp: Mapping[int, int]  # m -> empirical T(1/m)


def calibrate(samples: Sequence[CalibrationSample], base: Optional[ConstantsConfig] = None,
              margin: float = 1e-9) -> ConstantsConfig:
    """Smallest constants making the bound inequalities hold on the samples.

    * ``C_dichotomy``: M(1/m) = C/N(P(1/m)) >= T_emp(1/m);
    * ``C_generic``: C exp(C M) >= T_emp with the calibrated M;
    * ``C_lower``: R(m) >= C/ln(n) forces n >= T_emp(1/m), i.e.
      ``C > R(m) ln(T_emp(1/m) - 1)``.
    """
    base = base or ConstantsConfig()
    Cd, Ct2 = 0.0, 0.0
    for s in samples:
        for m, T in s.T_emp.items():
            Cd = max(Cd, float(T * s.N_at_P[m]))
            if T > 2:
                Ct2 = max(Ct2, float(s.R[m] * mp.log(T - 1)))
    Cd = Cd * (1 + margin) or base.C_dichotomy
    Ct2 = Ct2 * (1 + margin) or base.C_lower
    Cg = 0.0
    for s in samples:
        for m, T in s.T_emp.items():
            M = Cd / float(s.N_at_P[m])
            Cg = max(Cg, _solve_generic(M, T))
    Cg = Cg * (1 + margin) or base.C_generic
    prov = dict(base.provenance)
    prov.update(C_dichotomy="calibrated", C_generic="calibrated", C_lower="calibrated")
    return ConstantsConfig(Cd, base.c_shear, base.C_phi_arg, Cg, Ct2, prov)


def _solve_generic(M: float, T: float) -> float:
    """Smallest C > 0 with C*exp(C*M) >= T."""
    f = lambda c: math.log(c) + c * M - math.log(T)
    lo, hi = 1e-300, max(1.0, T)
    if f(lo) >= 0:
        return lo
    for _ in range(200):
        mid = math.sqrt(lo * hi) if hi / lo > 4 else 0.5 * (lo + hi)
        if f(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi
