import math
import warnings
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from kitecomplexity.diophantine import (
    BudgetExhausted,
    EmptySet,
    NetBudget,
    RationalDependenceWarning,
    axis_orientations,
    check_rational_independence,
    contains_relative_net,
    estimate_net_function,
    is_alpha_beta_connected,
    is_relative_eps_net,
    minimal_spanning_arc,
    read_f_table,
    replay_witness,
    small_denominator,
    small_denominator_exhaustive,
    small_denominator_table,
    walk_points,
    write_f_table,
)
from kitecomplexity.geometry import Direction, build_kite, fold_word_directions
from kitecomplexity.unfolding import unfold_ray
from oracles import all_walks, eps_net_by_rescaling, small_denominator_bruteforce

GOLDEN_PAIR = ("0.6180339887*pi", "0.4142135623*pi")


@settings(max_examples=20)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.integers(1, 25))
def test_table_matches_float_bruteforce(x, y, k):
    tab = small_denominator_table(repr(x), repr(y), k, unit="raw")
    ref, _ = small_denominator_bruteforce(x, y, k)
    assert float(tab[-1].value) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=10)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_table_monotone_and_witnesses(x, y):
    tab = small_denominator_table(repr(x), repr(y), 30, unit="raw")
    vals = [r.value for r in tab]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    for k, r in enumerate(tab, 1):
        n, m = r.witness
        assert 0 < abs(n) + abs(m) <= k and (n > 0 or (n == 0 and m > 0))


@pytest.mark.parametrize("seed", range(4))
def test_table_equals_exhaustive(seed):
    rng = np.random.default_rng(seed)
    a, b = (repr(float(v) * math.pi) for v in rng.random(2))
    tab = small_denominator_table(a, b, 30)
    for k in (1, 5, 17, 30):
        assert tab[k - 1] == small_denominator_exhaustive(a, b, k)


def test_golden_pair_at_800():
    r = small_denominator(*GOLDEN_PAIR, 800)
    assert r.witness == (368, 110)
    x, y = 0.6180339887, 0.4142135623
    best = 1.0
    for n in range(0, 801):
        m = np.arange(-(800 - n), 800 - n + 1)
        if n == 0:
            m = m[m > 0]
        v = n * x + m * y
        best = min(best, float(np.min(np.abs(v - np.round(v)))))
    assert float(r.value) == pytest.approx(best, rel=1e-6)
    assert float(r.value) == pytest.approx(3.054e-7, rel=1e-3)


def test_units():
    # x = alpha/pi by default; alpha/(2 pi) and raw also available
    assert small_denominator("pi/4", "pi/3", 1, unit="pi", warn=False).value == pytest.approx(0.25)
    assert float(small_denominator("pi/4", "pi/3", 1, unit="2pi", warn=False).value) == pytest.approx(1 / 8)
    assert float(small_denominator("0.25", "0.4", 1, unit="raw").value) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        small_denominator("0.25", "0.4", 1, unit="deg")


def test_rational_dependence_warning():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        r = small_denominator("pi/3", "0.5", 10)
    assert r.witness == (3, 0) and r.value == 0
    assert any(issubclass(x.category, RationalDependenceWarning) for x in w)
    assert not check_rational_independence("0.7", "0.9", k=50).independent
    assert check_rational_independence("sqrt(2)/2", "sqrt(3)/3", k=200).independent


def test_relative_net_examples():
    assert is_relative_eps_net([0.5], (0, 1), 0.5)
    assert not is_relative_eps_net([0.5], (0, 1), 0.49)
    assert is_relative_eps_net([Fraction(1, 4), Fraction(3, 4)], (0, 1), Fraction(1, 4))
    assert is_relative_eps_net([2.5, 7.5], (0, 10), 0.25)  # rescaling
    with pytest.raises(EmptySet):
        is_relative_eps_net([], (0, 1), 0.1)
    with pytest.raises(ValueError):
        is_relative_eps_net([0.5], (1, 0), 0.1)
    with pytest.raises(ValueError):
        is_relative_eps_net([2.0], (0, 1), 0.1)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=12), st.floats(0.01, 0.6),
       st.floats(-5, 5), st.floats(0.1, 10))
def test_relative_net_matches_rescaling(xs, eps, shift, scale):
    u, v = shift, shift + scale
    pts = [min(max(shift + x * scale, u), v) for x in xs]
    r = sorted((p - u) / (v - u) for p in pts)
    worst = max([r[0], 1 - r[-1]] + [(b - a) / 2 for a, b in zip(r, r[1:])])
    # the grid oracle resolves the covering radius to ~3e-5; ties are checked exactly below
    assume(abs(worst - eps) > 1e-4)
    assert is_relative_eps_net(pts, (u, v), eps) == eps_net_by_rescaling(pts, u, v, eps)


def test_relative_net_exact_ties():
    s = Fraction(7, 3)
    assert is_relative_eps_net([Fraction(3, 4) * s, Fraction(5, 16) * s], (0, s), Fraction(5, 16))
    assert not is_relative_eps_net([Fraction(3, 4) * s, Fraction(5, 16) * s], (0, s), Fraction(5, 16) - Fraction(1, 10 ** 30))


def test_spanning_arc():
    start, length = minimal_spanning_arc([6.2, 0.1, 0.3])
    assert start == pytest.approx(6.2) and length == pytest.approx(0.3 + 2 * math.pi - 6.2)


@given(st.lists(st.sampled_from(["+a", "-a", "+b", "-b"]), min_size=1, max_size=10))
def test_walks_are_connected(steps):
    pts = walk_points("".join(steps), 0.7, 0.9)
    assert is_alpha_beta_connected(pts, "0.7", "0.9")
    bent = pts[:-1] + [pts[-1] + 0.01]
    assert not is_alpha_beta_connected(bent, "0.7", "0.9")


def test_connected_directions_exact():
    d0 = Direction.seeded("0.3")
    d1 = Direction(1, 1, 0, 0, d0.seed)
    d2 = Direction(1, 1, -1, 0, d0.seed)
    assert is_alpha_beta_connected([d0, d1, d2], "0.7", "0.9")
    assert not is_alpha_beta_connected([d0, Direction(1, 1, 1, 0, d0.seed)], "0.7", "0.9")
    with pytest.raises(ValueError):
        is_alpha_beta_connected([d0], "0.7", "0.9")


def test_axis_orientations_follow_unfolded_copies():
    k = build_kite("0.7", "0.9")
    r = unfold_ray(k, (1, k.side_length(1) / 3), "0.4", 15)
    ax = axis_orientations(r.word, "0.7", "0.9")
    two = {round(v, 9) for v in (1.4, -1.4, 1.8, -1.8)}
    for V, o in zip(r.kites, ax):
        got = mp.atan2(V[2][1] - V[0][1], V[2][0] - V[0][0]) % (2 * mp.pi)
        assert abs(float(got - o)) < 1e-12 or abs(abs(float(got - o)) - 2 * math.pi) < 1e-12
    for a, b in zip(ax, ax[1:]):
        d = float((b - a + mp.pi) % (2 * mp.pi) - mp.pi)
        assert round(d, 9) in two


@pytest.mark.parametrize("eps, F", [(0.9, 1), (0.5, 1), (0.4, 2), (0.2, 6)])
def test_net_function_values(eps, F):
    est = estimate_net_function("0.7", "0.9", eps)
    assert est.exact and est.upper_bound == F
    ok, exhaustive = replay_witness(est)
    assert ok and exhaustive


def test_net_function_witness_is_maximal_by_bruteforce():
    # F(0.4) = 2: some 2-point walk avoids nets, every 3-point walk contains one
    est = estimate_net_function("0.7", "0.9", 0.4)
    assert est.upper_bound == 2
    for w in all_walks(2):
        pts = walk_points(w, 0.7, 0.9)
        if len({round(p % (2 * math.pi), 12) for p in pts}) == 3:
            assert contains_relative_net(pts, 0.4) is not None


def test_net_function_budget():
    with pytest.raises(BudgetExhausted) as exc:
        estimate_net_function("0.7", "0.9", 0.1, NetBudget(max_size=5))
    assert exc.value.estimate.upper_bound is None and exc.value.estimate.lower_bound >= 5
    est = estimate_net_function("0.7", "0.9", 0.1, NetBudget(max_size=5), raise_on_budget=False)
    assert est.lower_bound >= 5 and not est.exact
    with pytest.raises(ValueError):
        estimate_net_function("0.7", "0.9", 1.5)


def test_f_table_roundtrip():
    rows = [estimate_net_function("0.7", "0.9", e) for e in (0.5, 0.4)]
    text = write_f_table(rows, "0.7", "0.9")
    back = read_f_table(text)
    assert [(r[0], r[1], r[2]) for r in back] == [(0.5, 1, 1), (0.4, 2, 2)]
    assert write_f_table(rows, "0.7", "0.9") == text
