import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from dyadic_factor.combinatorics import (
    COMPLEMENT, INSIDE, Coloring, FrequencyWeightContext, comb_cover, cover_level,
    frequency_weight,
    lemma_level_bound, ramsey_extract,
)
from dyadic_factor.dyadic import (
    ROOT, ROOT_RECT, DyadicInterval, DyadicRectangle, dimension, intervals_upto, rectangles_upto,
)
from dyadic_factor.errors import DepthTooSmall
from dyadic_factor.haar import HaarVector, bmo_norm_exact, h1_norm, pairing


def test_ramsey_everything_hand_trace():
    res = ramsey_extract(Coloring.everything(4), 1)
    assert res.color == INSIDE
    assert set(res.A) == set(intervals_upto(1)) and res.carleson_A == 2
    assert set(res.B) == set(intervals_upto(4)) and res.carleson_B == 5
    assert [t["f"] for t in res.trace] == [1, 1, 1]
    assert all(t["carleson_E"] == "0" for t in res.trace)


def test_ramsey_empty_mirror():
    res = ramsey_extract(Coloring.empty(4), 1)
    assert res.color == COMPLEMENT
    assert set(res.A) == set(intervals_upto(1)) and set(res.B) == set(intervals_upto(4))
    assert [t["f"] for t in res.trace] == [0, 0, 0]


def test_ramsey_depth_too_small():
    with pytest.raises(DepthTooSmall):
        ramsey_extract(Coloring.everything(2), 2)


@pytest.mark.parametrize("seed", range(10))
def test_ramsey_random_guarantees(seed):
    c = Coloring.random(6, seed)
    res = ramsey_extract(c, 1)
    want = res.color == INSIDE
    assert all((DyadicRectangle(I, J) in c) == want for I in res.A for J in res.B)
    assert res.carleson_A == oracles.carleson(res.A) and res.carleson_A >= 1
    assert res.carleson_B == oracles.carleson(res.B)
    assert res.carleson_B >= Fraction(7, 8)
    for t in res.trace:
        assert Fraction(t["carleson_G"]) * 2 ** t["m"] >= 7


def test_coloring_predicate_and_census():
    c = Coloring(2, lambda r: r.x.level == 0)
    assert c.census() == {"inside": 7, "complement": 42, "total": 49}
    assert all(r.x.level == 0 for r in c.members())


# -- frequency weight -----------------------------------------------------------

def test_frequency_weight_examples(rng):
    ctx = FrequencyWeightContext(3)
    z = np.zeros(dimension(3))
    ctx.add(z, z)
    assert all(frequency_weight(ctx, R) == 0 for R in rectangles_upto(3))
    R = DyadicRectangle.of(2, 1, 1, 0)
    ctx = FrequencyWeightContext(3, [HaarVector.atom(3, R)], [z])
    assert frequency_weight(ctx, R) == float(R.measure)


def test_frequency_weight_direct_sum(rng):
    xs = [HaarVector(3, rng.standard_normal(dimension(3))) for _ in range(3)]
    ys = [HaarVector(3, rng.standard_normal(dimension(3))) for _ in range(3)]
    ctx = FrequencyWeightContext(3, xs, ys)
    for R in rectangles_upto(3)[::7]:
        h = HaarVector.atom(3, R)
        ref = sum(abs(pairing(x, h)) + abs(pairing(y, h)) for x, y in zip(xs, ys))
        assert frequency_weight(ctx, R) == pytest.approx(ref, abs=1e-12)


# -- covering lemma -------------------------------------------------------------

def test_cover_zero_context():
    ctx = FrequencyWeightContext(4, [np.zeros(dimension(4))], [np.zeros(dimension(4))])
    res = comb_cover(DyadicRectangle.of(1, 0, 1, 1), ctx, 0.1, Fraction(1, 4), 2, 6, "X")
    assert res.met and res.level == 2 and res.fraction == 1


def test_cover_strip_example():
    # x_1 = h of the left level-1 strip of [0,1)^2 with coefficient 1
    strip = DyadicRectangle(DyadicInterval(1, 0), ROOT)
    ctx = FrequencyWeightContext(3, [HaarVector.atom(3, strip)], [np.zeros(dimension(3))])
    res = comb_cover(ROOT_RECT, ctx, 0.5, Fraction(1, 4), 1, 3, "X")
    assert res.scanned[0] == (1, Fraction(1, 2))
    assert res.met and res.level == 2
    # the Y axis keeps K0 intact and is unaffected by this strip
    res_y = comb_cover(ROOT_RECT, ctx, 0.5, Fraction(1, 4), 1, 3, "Y")
    assert res_y.met and res_y.level == 1


def test_cover_invalid_args():
    ctx = FrequencyWeightContext(2)
    with pytest.raises(ValueError):
        comb_cover(ROOT_RECT, ctx, 0.0, Fraction(1, 2), 0, 2)
    with pytest.raises(ValueError):
        comb_cover(ROOT_RECT, ctx, 1.0, Fraction(1, 2), 0, 2, "Z")


def test_lemma_bound():
    assert lemma_level_bound(1, 1.0, Fraction(1, 2)) == 4
    assert lemma_level_bound(2, 2.0, Fraction(1, 2)) == 4
    assert lemma_level_bound(0, 1.0, Fraction(1, 2)) == 0


def check_cover(res, K0L0, ctx, tau, axis):
    """Members disjoint, inside K0L0, non-scanned side intact, weight-bounded."""
    seen = set()
    for R in res.members:
        assert K0L0.contains(R)
        if axis == "X":
            assert R.y == K0L0.y and R.x.level == K0L0.x.level + res.level
        else:
            assert R.x == K0L0.x and R.y.level == K0L0.y.level + res.level
        assert R not in seen
        seen.add(R)
        assert frequency_weight(ctx, R) <= tau * float(R.measure) * (1 + 1e-12)
    assert res.fraction == Fraction(len(res.members), 1 << res.level)


@given(st.integers(0, 2 ** 31), st.sampled_from(["X", "Y"]), st.floats(0.05, 5.0))
def test_cover_fraction_monotone_in_tau(seed, axis, tau):
    rng = np.random.default_rng(seed)
    ctx = FrequencyWeightContext(3, [rng.standard_normal(dimension(3))],
                                 [rng.standard_normal(dimension(3))])
    for k in range(1, 4):
        _, fa = cover_level(ROOT_RECT, ctx, tau, k, axis)
        _, fb = cover_level(ROOT_RECT, ctx, tau / 2, k, axis)
        assert fb <= fa
    a = comb_cover(ROOT_RECT, ctx, tau, Fraction(1, 64), 1, 3, axis)
    check_cover(a, ROOT_RECT, ctx, tau, axis)
