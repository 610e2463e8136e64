import math
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, strategies as st

from kitecomplexity.bounds import (
    AssumedFTable,
    BoundProfile,
    CalibrationSample,
    ConstantsConfig,
    FSourceUnresolved,
    IntervalUnion,
    LValue,
    NetEstimateFSource,
    NSource,
    OutOfTable,
    RSource,
    ZeroDenominator,
    M_of_eps,
    N_theta,
    P_alpha_beta,
    T_of_eps,
    bad_set,
    calibrate,
    consistency_constant,
    convention_index,
    convention_extend,
    generic_T_bound,
    inner_log10,
    lower_bound_L,
    lower_bound_L_scan,
    weakest,
)
from kitecomplexity.geometry import build_kite
from kitecomplexity.periodic import (
    CatalogNotExhaustive,
    PeriodicCatalog,
    PeriodicDirection,
    PeriodicTheta,
)

ONE = ConstantsConfig()


class PowerN:
    """Closed-form small denominators N(k) = c / k^p (used through the extension convention)."""

    label = "certified"
    prec = 64

    def __init__(self, c=1, p=2):
        self.c, self.p = c, p

    def __call__(self, k):
        c = Fraction(self.c)
        return mp.mpf(c.numerator) / c.denominator / mp.mpf(convention_index(k)) ** self.p


def test_constants_validation_and_roundtrip():
    c = ConstantsConfig(C_dichotomy=2.5, provenance={"C_dichotomy": "user"})
    back = ConstantsConfig.from_json(c.to_json())
    assert back == c and back.digest() == c.digest()
    assert ConstantsConfig.from_dict({"C_generic": 3}).provenance["C_generic"] == "user"
    for bad in (0, -1, float("inf"), float("nan")):
        with pytest.raises(ValueError):
            ConstantsConfig(C_lower=bad)
    with pytest.raises(ValueError):
        ConstantsConfig(provenance={"C_generic": "guessed"})


def test_convention_extend():
    f = convention_extend({1: "a", 2: "b", 3: "c"})
    assert f(1.5) == "b" and f(2) == "b" and f(Fraction(5, 2)) == "c" and f(0.2) == "a"
    with pytest.raises(OutOfTable):
        f(3.7)
    g = convention_extend([10, 20])
    assert g(1) == 10 and g(1.01) == 20


def test_P_examples():
    F = AssumedFTable(5)
    assert P_alpha_beta(0.1, F).value == 800
    half = P_alpha_beta(Fraction(1, 2), AssumedFTable(3))
    assert half.value == 96
    with mp.workprec(200):
        assert abs(half.log10_inner / (32 * mp.log10(mp.mpf(1) / 3200)) - 1) < mp.mpf(10) ** -30
    with pytest.raises(ValueError):
        P_alpha_beta(1, F)


def test_inner_argument_log_domain():
    # mpmath holds 10^-8326 natively, so compare against the direct power
    with mp.workprec(256):
        direct = mp.power(mp.mpf(1) / 160000, 1600)
        assert abs(mp.log10(direct) / inner_log10("0.01") - 1) < mp.mpf(10) ** -30
    assert -8327 < float(inner_log10("0.01")) < -8326


@given(st.fractions(Fraction(1, 1000), Fraction(999, 1000)), st.fractions(Fraction(1, 1000), Fraction(999, 1000)))
def test_P_strictly_decreasing(e1, e2):
    if e1 == e2:
        return
    lo, hi = sorted((e1, e2))
    F = AssumedFTable(5)
    assert P_alpha_beta(lo, F).value > P_alpha_beta(hi, F).value


@pytest.mark.parametrize("c, p, F", [(1, 2, 5), (3, 1, 2), (Fraction(1, 7), 3, 11)])
def test_M_closed_form(c, p, F):
    consts = ConstantsConfig(C_dichotomy=2.0)
    for eps in ("0.1", "0.3", "0.07"):
        M = M_of_eps(eps, AssumedFTable(F), PowerN(c, p), consts)
        P = Fraction(16) / Fraction(eps) * F
        k = math.ceil(P) if P.denominator != 1 else int(P)
        exact = 2 * Fraction(k) ** p / Fraction(c)
        want = mp.mpf(exact.numerator) / exact.denominator
        assert abs(M.value / want - 1) < 1e-12
        assert M.k == k and M.label == "assumed-table"


def test_M_zero_denominator():
    Ns = NSource("pi/3", "pi/4")
    with pytest.raises(ZeroDenominator):
        M_of_eps("0.1", AssumedFTable(5), Ns, ONE)


def test_M_golden_pair():
    Ns = NSource("0.6180339887*pi", "0.4142135623*pi")
    M = M_of_eps("0.1", AssumedFTable(5), Ns, ONE)
    assert M.k == 800 and float(M.value) == pytest.approx(1 / 3.054e-7, rel=1e-3)


def test_T_branches():
    M = mp.mpf(1000)
    t = T_of_eps("0.1", M, lambda n: 1, ONE)
    assert t.value == M and t.branch == "M"
    t = T_of_eps("0.1", M, lambda n: mp.mpf("1e-6"), ONE)
    assert abs(t.value / mp.mpf(10) ** 6 - 1) < 1e-12 and t.branch == "phi"
    with pytest.raises(PeriodicTheta):
        T_of_eps("0.1", M, lambda n: 0, ONE)
    # the argument handed to phi is the integer C*M by the extension convention
    seen = []
    T_of_eps("0.1", mp.mpf("10.5"), lambda n: seen.append(n) or 1, ConstantsConfig(C_phi_arg=2))
    assert seen == [21]
    t = T_of_eps("0.1", M, lambda n: (mp.mpf("0.5"), "heuristic"), ONE)
    assert t.label == "heuristic"


def _catalog(dirs, exhaustive=10):
    entries = [PeriodicDirection((3, 1), 1, mp.mpf(d), 2, (0, 1), (0, 1), 1.0) for d in dirs]
    return PeriodicCatalog("x", "y", 1, exhaustive, exhaustive, entries)


def test_bad_set():
    assert bad_set(5, 0.1, _catalog([])).measure == 0
    cat = _catalog([0.1 * i for i in range(1, 8)])
    U = bad_set(5, 0.1, cat)
    assert len(U.intervals) == 7
    r = mp.mpf("0.1") * mp.power(4, -11)
    assert abs(U.measure / (14 * r) - 1) < 1e-12
    assert U.measure <= 7 * 2 * 0.1 * 4.0 ** -11 * (1 + 1e-12) and U.measure <= 0.1 * 4.0 ** -5
    assert U.contains(mp.mpf("0.3")) and not U.contains(mp.mpf("0.35"))
    with pytest.raises(CatalogNotExhaustive):
        bad_set(12, 0.1, cat)
    with pytest.raises(ValueError):
        bad_set(3, 0, cat)


def test_interval_union_merges():
    U = IntervalUnion.build([mp.mpf(0), mp.mpf("0.1")], mp.mpf("0.1"))
    assert len(U.intervals) == 1 and abs(U.measure - mp.mpf("0.3")) < 1e-15


@given(st.floats(0, 50))
def test_generic_bound(M):
    c = ConstantsConfig(C_generic=1.7)
    assert generic_T_bound("0.1", 0, 0.1, c) == mp.mpf(1.7)
    assert generic_T_bound("0.1", M + 1, 0.1, c) > generic_T_bound("0.1", M, 0.1, c)


@pytest.mark.parametrize("C, rho", [(1, 0.1), (0.3, 0.01), (5, 0.5)])
def test_generic_consistency_constant(C, rho):
    Cp = consistency_constant(C, rho)
    for i in range(100):
        M = mp.mpf(i) / 4
        lhs = mp.mpf(C) / rho * mp.power(4, 2 * C * M + 1)
        assert lhs <= Cp * mp.exp(Cp * M)


def test_N_theta():
    table = {m: m * m for m in range(1, 30)}
    assert N_theta(100, table) == 10
    assert N_theta(0, table) == 0
    # running max: a dip at m = 3 does not let m = 3 count before m = 2 does
    assert N_theta(5, {1: 1, 2: 9, 3: 4}) == 1
    assert N_theta(10, {1: 1, 2: None, 3: 4}) == 1


def _R_table(vals, label="certified"):
    return lambda m: (mp.mpf(vals[m - 1]) if m <= len(vals) else mp.mpf(0), label)


@given(st.lists(st.floats(1e-6, 10), min_size=1, max_size=40), st.integers(2, 10 ** 9),
       st.floats(0.01, 5))
def test_L_bisection_matches_scan(raw, n, C):
    vals = sorted(raw, reverse=True)
    R = _R_table(vals)
    consts = ConstantsConfig(C_lower=C)
    L = lower_bound_L(n, R, consts, m_max=50)
    assert L.value == lower_bound_L_scan(n, R, consts, m_max=50)
    assert L.value == sum(1 for v in vals if mp.mpf(v) >= mp.mpf(C) / mp.log(n))


def test_L_properties():
    R = _R_table([1, 0.5, 0.25, 0.125])
    c = ConstantsConfig(C_lower=1.0)
    assert lower_bound_L(2, R, c).value == 0  # R(1) = 1 < 1/ln 2
    ls = [lower_bound_L(n, R, c).value for n in (2, 3, 10, 100, 10 ** 4, 10 ** 8)]
    assert ls == sorted(ls) and ls[-1] == 4
    with pytest.raises(ValueError):
        lower_bound_L(1, R, c)
    t = lower_bound_L(10 ** 6, lambda m: (mp.mpf(1), "heuristic"), c, m_max=16)
    assert t.truncated and t.value == 16 and t.label == "heuristic"


def test_L_golden_pair_against_scan():
    R = RSource(AssumedFTable(5), NSource("0.6180339887*pi", "0.4142135623*pi"))
    c = ConstantsConfig(C_lower=1e-7)
    L = lower_bound_L(10 ** 6, R, c, m_max=64)
    assert L.value == lower_bound_L_scan(10 ** 6, R, c, m_max=64) and L.value > 0
    v, lab = R(3)
    assert lab == "assumed-table"
    assert v == NSource("0.6180339887*pi", "0.4142135623*pi")(240)


def test_F_sources():
    T = AssumedFTable(None, {0.5: 1, 0.1: 4, 0.01: 9})
    assert T(mp.log10(0.3)) == (4, "assumed-table")
    assert T(mp.log10(0.5)) == (1, "assumed-table")
    with pytest.raises(FSourceUnresolved):
        T(mp.mpf(-3))
    with pytest.raises(ValueError):
        AssumedFTable(None, {0.5: 7, 0.1: 4})
    est = NetEstimateFSource("0.7", "0.9")
    assert est(mp.log10(0.4)) == (2, "certified")
    with pytest.raises(FSourceUnresolved):
        est(inner_log10("0.5"))


def test_weakest_label():
    assert weakest("certified", "assumed-table") == "assumed-table"
    assert weakest("heuristic", "certified", "assumed-table") == "heuristic"


def test_profile_csv():
    prof = BoundProfile(ConstantsConfig())
    prof.add("P", "0.1", Fraction(800), "assumed-table")
    prof.add("L", 10, None, "certified")
    lines = prof.to_csv().splitlines()
    assert lines[0] == "quantity,argument,value_log10,source_label,constants_hash"
    q, a, v, lab, h = lines[1].split(",")
    assert float(v) == pytest.approx(math.log10(800)) and h == ConstantsConfig().digest()
    assert lines[2].split(",")[2] == "NA"


def test_calibration_inequalities():
    s = CalibrationSample(R={2: mp.mpf("1e-3"), 4: mp.mpf("5e-4")},
                          N_at_P={2: mp.mpf("1e-4"), 4: mp.mpf("1e-5")},
                          T_emp={2: 7, 4: 30})
    c = calibrate([s])
    for m, T in s.T_emp.items():
        M = c.C_dichotomy / s.N_at_P[m]
        assert M >= T
        assert c.C_generic * mp.exp(c.C_generic * M) >= T
        assert c.C_lower > s.R[m] * mp.log(T - 1)
    assert c.provenance["C_lower"] == "calibrated" and c.provenance["c_shear"] == "default"
