"""Condensation of a Haar system onto collections with large Carleson constant,
plus bi-tree / Jones checks for block bases."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .blocks import BlockBasis, block_projection, embedding_matrix
from .dyadic import (
    DyadicInterval,
    DyadicRectangle,
    IntervalCollection,
    carleson_constant,
    dimension,
    intervals_upto,
    layout,
    maximal,
    order_index,
)
from .errors import ConstructionExhausted, InsufficientCarlesonMass
from .haar import h1_norms


def interval_index(iv: DyadicInterval) -> int:
    """0-based index of an interval in the level-then-position listing."""
    return (1 << iv.level) - 1 + iv.position


@dataclass
class CondensationMap1D:
    n: int
    depth: int
    source: IntervalCollection
    families: dict
    E: np.ndarray  # (2**(depth+1)-1, 2**(n+1)-1)
    P: np.ndarray  # (2**(n+1)-1, 2**(depth+1)-1)
    metadata: dict = field(default_factory=dict)

    def union_measure(self, I: DyadicInterval) -> Fraction:
        return sum((K.measure for K in self.families[I]), Fraction(0))


def _grow(A: set, root_family: list, n: int):
    """Build families for D^n below a root family; None if a step under-covers."""
    fams = {DyadicInterval(0, 0): root_family}
    for I in intervals_upto(n - 1) if n > 0 else []:
        parent = fams[I]
        pmass = sum((K.measure for K in parent), Fraction(0))
        for child, pick in ((I.left(), DyadicInterval.left), (I.right(), DyadicInterval.right)):
            halves = [pick(K) for K in parent]
            cand = [J for J in A if any(h.contains(J) for h in halves)]
            fam = maximal(cand)
            mass = sum((K.measure for K in fam), Fraction(0))
            # each child keeps at least half of its half of the parent set
            if not fam or 4 * mass < pmass:
                return None, {"failed_at": str(child), "mass": str(mass), "parent": str(pmass)}
            fams[child] = fam
    return fams, None


def condense_1d(A: Iterable[DyadicInterval], n: int, strict: bool = True,
                depth: int | None = None) -> CondensationMap1D:
    """Families A_I (I in D^n) of disjoint members of A with nested halves.

    The root family is the set of maximal members of A; a child family
    consists of the maximal members of A inside the left (right) halves of
    the parent's intervals and must cover at least a quarter of the parent
    set.  If that fails, single members of A (by decreasing packing sum)
    are tried as root.  Partial results are never returned.
    """
    A = set(A)
    coll = IntervalCollection(A)
    mass = carleson_constant(A)
    need = n * 4 ** n
    if strict and mass < need:
        raise InsufficientCarlesonMass(
            f"Carleson constant {mass} below n*4^n = {need}",
            {"carleson": str(mass), "required": need})
    if not A:
        raise ConstructionExhausted("empty collection")
    depth = max(max(K.level for K in A), n) if depth is None else depth
    fams, why = _grow(A, maximal(A), n)
    rule = "maximal-root"
    if fams is None:
        def packing(K):
            return sum((J.measure for J in A if K.contains(J)), Fraction(0)) / K.measure
        for K in sorted(A, key=lambda K: (-packing(K), K.level, K.position)):
            fams, _ = _grow(A, [K], n)
            if fams is not None:
                rule = f"single-root:{K}"
                break
    if fams is None:
        raise ConstructionExhausted("no root admits n generations", why)
    d_big = (1 << (depth + 1)) - 1
    d_small = (1 << (n + 1)) - 1
    E = np.zeros((d_big, d_small))
    P = np.zeros((d_small, d_big))
    for I, fam in fams.items():
        c = interval_index(I)
        um = float(sum((K.measure for K in fam), Fraction(0)))
        for K in fam:
            E[interval_index(K), c] = 1.0
            P[c, interval_index(K)] = float(K.measure) / um
    return CondensationMap1D(n, depth, coll, fams, E, P,
                             {"rule": rule, "carleson": str(mass), "required": need})


@dataclass
class Condensation2D:
    system: BlockBasis
    first: CondensationMap1D
    second: CondensationMap1D
    E: sp.csc_matrix  # (dim_N, dim_n)
    P: sp.csr_matrix  # (dim_n, dim_N)


def condense_2d(A, B, n: int, strict: bool = True, depth: int | None = None) -> Condensation2D:
    """Tensor product of two 1D condensations: E_{I x J} = A_I x B_J."""
    A, B = set(A), set(B)
    if depth is None:
        depth = max([K.level for K in A | B] + [n])
    ca = condense_1d(A, n, strict, depth)
    cb = condense_1d(B, n, strict, depth)
    fams = {}
    for I in intervals_upto(n):
        for J in intervals_upto(n):
            fams[DyadicRectangle(I, J)] = [DyadicRectangle(K, L)
                                           for K in ca.families[I] for L in cb.families[J]]
    sys = BlockBasis(depth, fams, n, {"source": "condensation", "rule_x": ca.metadata["rule"],
                                      "rule_y": cb.metadata["rule"]})
    E = embedding_matrix(sys, n)
    P = projection_matrix(sys, n)
    return Condensation2D(sys, ca, cb, E, P)


def projection_matrix(sys: BlockBasis, n: int | None = None) -> sp.csr_matrix:
    """Dual-basis projection: row I x J has |K x L| / |E*_{I x J}| on its members."""
    n = sys.n if n is None else n
    rows, cols, vals = [], [], []
    for idx, fam in sys.families.items():
        if not fam or not idx.in_depth(n):
            continue
        um = float(sys.measure(idx))
        r = order_index(idx) - 1
        for m in fam:
            rows.append(r)
            cols.append(order_index(m) - 1)
            vals.append(float(m.measure) / um)
    return sp.csr_matrix((vals, (rows, cols)), shape=(dimension(n), dimension(sys.depth)))


def unconditionality_factor(sys: BlockBasis, trials: int = 200, seed: int = 0) -> float:
    """Largest H^1 ratio between S(c) and S(sign-flipped c) over random trials."""
    rng = np.random.default_rng(seed)
    S = embedding_matrix(sys)
    m = S.shape[1]
    worst = 1.0
    for _ in range(trials):
        c = rng.standard_normal(m)
        eps = rng.choice([-1.0, 1.0], size=m)
        pair = np.vstack([S @ c, S @ (eps * c)])
        a, b = h1_norms(pair, sys.depth)
        if a > 0 and b > 0:
            worst = max(worst, a / b, b / a)
    return worst


# --------------------------------------------------------------------------
# structural checks

def _children(idx: DyadicRectangle):
    I, J = idx.x, idx.y
    return [("x", DyadicRectangle(I.left(), J), DyadicRectangle(I.right(), J)),
            ("y", DyadicRectangle(I, J.left()), DyadicRectangle(I, J.right()))]


def bitree_verify(sys: BlockBasis) -> dict:
    """Smallest C2 for the measure comparability and sibling checks."""
    c2 = 1.0
    violations = []
    for idx in sys.indices():
        em = sys.measure(idx)
        if em == 0:
            violations.append({"index": str(idx), "kind": "empty"})
            c2 = math.inf
            continue
        ratio = em / idx.measure
        c2 = max(c2, float(ratio), float(1 / ratio))
        pmask = sys.mask(idx)
        for axis, a, b in _children(idx):
            if a not in sys or b not in sys:
                continue
            ma, mb = sys.mask(a), sys.mask(b)
            if (ma & mb).any():
                violations.append({"index": str(idx), "axis": axis, "kind": "siblings-overlap"})
            if ((ma | mb) & ~pmask).any():
                violations.append({"index": str(idx), "axis": axis, "kind": "not-nested"})
    return {"C2": c2, "violations": violations}


def jones_verify(sys: BlockBasis) -> dict:
    """Smallest C3 in the Jones-type ratio condition over nested index pairs."""
    c3 = 1.0
    violations = []
    idxs = sys.indices()
    for big in idxs:
        eb = sys.measure(big)
        if eb == 0:
            continue
        for small in idxs:
            if small == big or not big.contains(small):
                continue
            es = sys.measure(small)
            target = es / eb
            for m in sys[big]:
                got = sys.intersection_measure(m, small) / m.measure
                if target == 0 or got == 0:
                    if target != got:
                        c3 = math.inf
                        violations.append({"outer": str(big), "inner": str(small),
                                           "member": str(m), "ratio": "0"})
                    continue
                q = got / target
                c3 = max(c3, float(q), float(1 / q))
    return {"C3": c3, "violations": violations}


__all__ = [
    "CondensationMap1D", "Condensation2D", "condense_1d", "condense_2d",
    "projection_matrix", "unconditionality_factor", "bitree_verify", "jones_verify",
    "block_projection", "interval_index",
]
