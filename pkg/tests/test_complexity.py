import math

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from kitecomplexity.complexity import (
    ComplexityProfile,
    UnsplitCells,
    directional_complexity,
    empirical_partition_bound,
    initial_partition,
    refine_partition,
)
from kitecomplexity.geometry import AngleValue, Direction, build_kite
from kitecomplexity.unfolding import BoundaryVertexAmbiguous
from oracles import dense_profile

# (0.7, 0.9) in direction 0.3, n = 1..30
GOLDEN = [2, 3, 4, 4, 5, 5, 5, 7, 7, 9, 9, 9, 10, 11, 12, 12, 13, 15, 16, 18, 18, 18, 18, 18, 19,
          20, 20, 20, 21, 21]


def test_golden_profile():
    prof = directional_complexity(build_kite("0.7", "0.9"), "0.3", 30)
    assert prof.as_list() == GOLDEN
    assert dense_profile(0.7, 0.9, 0.3, 30) == GOLDEN


@pytest.mark.parametrize("a, b, th", [("1.8", "0.5", 0.3), ("0.4", "2.0", 0.5), ("1.8", "0.5", 1.0)])
def test_nonconvex_kites_match_sampling(a, b, th):
    prof = directional_complexity(build_kite(a, b), repr(th), 25)
    assert prof.as_list() == dense_profile(float(a), float(b), th, 25)


@settings(max_examples=15)
@given(st.floats(0.3, 1.3), st.floats(0.3, 1.3), st.floats(0.1, 0.9))
def test_partition_against_sampling(a, b, fth):
    if a + b > math.pi - 0.3:
        return
    k = build_kite(repr(a), repr(b))
    lo, hi = (float(x) for x in k.inward_range(1))
    th = round(lo + fth * (hi - lo), 4)
    prof, part = directional_complexity(k, repr(th), 12, keep=True)
    dense = dense_profile(a, b, th, 12, samples=4000)
    # sampling can only miss cells
    assert all(d <= p for d, p in zip(dense, prof.as_list()))
    if part.min_width() > 3 * k.side_length(1) / 4000:
        assert dense == prof.as_list()


@settings(max_examples=15)
@given(st.floats(0.3, 1.3), st.floats(0.3, 1.3), st.floats(0.05, 0.95))
def test_monotone_and_increment_bounds(a, b, fth):
    if a + b > math.pi - 0.3:
        return
    k = build_kite(repr(a), repr(b))
    lo, hi = (float(x) for x in k.inward_range(1))
    th = lo + fth * (hi - lo)
    prof = directional_complexity(k, repr(th), 20)
    vals = [1] + prof.as_list()
    for n in range(1, 21):
        assert vals[n] >= vals[n - 1]
        assert vals[n] - vals[n - 1] <= prof.cuts[n]


def test_square_diagonal_touches():
    sq = build_kite("pi/4", "pi/4")
    prof = directional_complexity(sq, "0", 50)
    assert set(prof.as_list()) == {1} and prof.touches > 0
    part = initial_partition(sq, "0")
    with pytest.raises(BoundaryVertexAmbiguous):
        for _ in range(3):
            part = refine_partition(part, on_touch="raise")


def test_square_rational_slope_stabilizes():
    sq = build_kite("pi/4", "pi/4")
    d = AngleValue.from_function("atan(2/3)-pi/4", lambda p: mp.atan(mp.mpf(2) / 3) - mp.pi / 4)
    prof = directional_complexity(sq, Direction.seeded(d), 120)
    star = prof.stabilized_at()
    assert star is not None and star <= 50


def test_refine_rejects_other_kite():
    part = initial_partition(build_kite("0.7", "0.9"), "0.3")
    with pytest.raises(ValueError):
        refine_partition(part, kite=build_kite("0.6", "0.9"))


def test_profile_roundtrip():
    prof = directional_complexity(build_kite("0.6", "0.75"), "0.5", 15)
    back = ComplexityProfile.from_json(prof.to_json())
    assert back.values == prof.values and back.cuts == prof.cuts
    assert back.to_json() == prof.to_json()
    lines = prof.to_csv().splitlines()
    assert lines[0] == "n,p_theta_n" and len(lines) == 16


@pytest.mark.parametrize("m", [2, 4, 8])
def test_partition_bound(m):
    res = empirical_partition_bound(build_kite("0.7", "0.9"), "0.3", m, 5000)
    assert res.verified and res.p_at_T >= m and res.T_emp == max(res.times)


def test_unsplit_cells_reported():
    sq = build_kite("pi/4", "pi/4")
    with pytest.raises(UnsplitCells) as exc:
        empirical_partition_bound(sq, "pi/4", 4, 30)
    assert exc.value.cells
