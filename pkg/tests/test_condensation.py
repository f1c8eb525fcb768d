import math
from fractions import Fraction

import numpy as np
import pytest

from dyadic_factor.blocks import BlockBasis, block_projection, embedding_matrix
from dyadic_factor.condensation import (
    bitree_verify, condense_1d, condense_2d, jones_verify, projection_matrix,
    unconditionality_factor,
)
from dyadic_factor.dyadic import (
    ROOT, ROOT_RECT, DyadicInterval, DyadicRectangle, dimension, intervals_upto, layout,
    rectangles_upto,
)
from dyadic_factor.errors import InsufficientCarlesonMass, ZeroBlock
from dyadic_factor.haar import HaarVector, pairing


def test_condense_1d_examples():
    c = condense_1d(intervals_upto(4), 1)
    assert np.allclose(c.P @ c.E, np.eye(3), atol=1e-12)
    for I, fam in c.families.items():
        assert len({K for K in fam}) == len(fam)
    left, right = c.families[DyadicInterval(1, 0)], c.families[DyadicInterval(1, 1)]
    assert all(K.inf < Fraction(1, 2) for K in left)
    assert all(K.inf >= Fraction(1, 2) for K in right)
    with pytest.raises(InsufficientCarlesonMass):
        condense_1d([ROOT], 1)
    c0 = condense_1d(intervals_upto(2), 0)
    assert c0.families == {ROOT: [ROOT]}
    assert np.allclose(c0.P @ c0.E, np.eye(1))


def test_condense_1d_nesting():
    c = condense_1d(intervals_upto(6), 2, strict=False)
    for I, fam in c.families.items():
        if I.level == 0:
            continue
        parent = c.families[I.predecessor()]
        half = (lambda K: K.left()) if I.is_left_child() else (lambda K: K.right())
        halves = [half(K) for K in parent]
        assert all(any(h.contains(K) for h in halves) for K in fam)
        assert 4 * c.union_measure(I) >= sum((K.measure for K in parent), Fraction(0))


def test_condense_2d():
    c = condense_2d(intervals_upto(4), intervals_upto(4), 1)
    PE = (c.P @ c.E).toarray()
    assert np.allclose(PE, np.eye(9), atol=1e-12)
    sysb = c.system
    for I in intervals_upto(1):
        for J in intervals_upto(1):
            idx = DyadicRectangle(I, J)
            assert sysb.measure(idx) == c.first.union_measure(I) * c.second.union_measure(J)
    bt = bitree_verify(sysb)
    assert math.isfinite(bt["C2"]) and not bt["violations"]
    assert math.isfinite(jones_verify(sysb)["C3"])
    assert 1 <= unconditionality_factor(sysb, trials=50) < math.inf


def test_condense_2d_trivial():
    c = condense_2d(intervals_upto(1), intervals_upto(1), 0)
    assert c.E.shape == (dimension(1), 1)
    assert np.allclose((c.P @ c.E).toarray(), [[1.0]])


def test_canonical_system_checks():
    sysb = BlockBasis.canonical(2)
    assert sysb.is_disjoint()
    assert bitree_verify(sysb) == {"C2": 1.0, "violations": []}
    assert jones_verify(sysb)["C3"] == 1.0


def test_overlapping_siblings_reported():
    fams = {ROOT_RECT: [ROOT_RECT],
            DyadicRectangle.of(1, 0, 0, 0): [DyadicRectangle.of(2, 1, 0, 0)],
            DyadicRectangle.of(1, 1, 0, 0): [DyadicRectangle.of(1, 0, 1, 0)]}
    rep = bitree_verify(BlockBasis(2, fams))
    assert any(v["kind"] == "siblings-overlap" for v in rep["violations"])


def test_fragmented_jones():
    fams = {ROOT_RECT: [DyadicRectangle.of(1, 0, 0, 0), DyadicRectangle.of(1, 1, 0, 0)],
            DyadicRectangle.of(1, 0, 0, 0): [DyadicRectangle.of(2, 0, 0, 0)]}
    rep = jones_verify(BlockBasis(2, fams))
    assert rep["C3"] == math.inf and rep["violations"]


def test_block_projection():
    sysb = BlockBasis.canonical(1, 2)
    Q = block_projection(sysb).toarray()
    assert np.allclose(Q @ Q, Q, atol=1e-12)
    assert np.linalg.matrix_rank(Q) == len(sysb)
    area = layout(2).area
    # pairing self-adjointness: D Q = (D Q)^t
    assert np.allclose(area[:, None] * Q, (area[:, None] * Q).T, atol=1e-12)
    outside = DyadicRectangle.of(2, 0, 2, 0)
    assert not (Q @ HaarVector.atom(2, outside).coef).any()
    with pytest.raises(ZeroBlock):
        block_projection(BlockBasis(2, {ROOT_RECT: []}))


def test_intersection_measure_and_json():
    fams = {ROOT_RECT: [DyadicRectangle.of(1, 0, 1, 0), DyadicRectangle.of(1, 1, 1, 1)]}
    sysb = BlockBasis(3, fams, 0)
    assert sysb.intersection_measure(ROOT_RECT, ROOT_RECT) == Fraction(1, 2)
    assert sysb.intersection_measure(DyadicRectangle.of(3, 0, 3, 0), ROOT_RECT) == Fraction(1, 64)
    assert sysb.intersection_measure(DyadicRectangle.of(3, 7, 3, 0), ROOT_RECT) == 0
    # finer in x only, spanning both halves in y
    assert sysb.intersection_measure(DyadicRectangle.of(2, 0, 0, 0), ROOT_RECT) == Fraction(1, 8)
    back = BlockBasis.from_json(sysb.to_json())
    assert back.families == sysb.families and back.depth == 3
    E = embedding_matrix(sysb, 0).toarray()
    assert E.sum() == 2
    P = projection_matrix(sysb, 0).toarray()
    assert np.allclose(P @ E, [[1.0]])
