"""Ramsey extraction for two-colored rectangles and the covering lemma."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .dyadic import (
    DyadicInterval,
    DyadicRectangle,
    IntervalCollection,
    block_offset,
    carleson_constant,
    dimension,
    intervals_upto,
    order_index,
    rectangles_upto,
)
from .errors import DepthTooSmall, DyadicFactorError

INSIDE, COMPLEMENT = "inside", "complement"


class Coloring:
    """Subset C of R_n, given as a set of rectangles or a predicate."""

    def __init__(self, depth: int, members: Iterable[DyadicRectangle] | Callable | None = None):
        self.depth = depth
        self._cache: dict[DyadicRectangle, bool] = {}
        if members is None:
            self._pred = lambda r: False
        elif callable(members):
            self._pred = members
        else:
            fixed = frozenset(members)
            self._pred = fixed.__contains__

    def __contains__(self, rect: DyadicRectangle) -> bool:
        hit = self._cache.get(rect)
        if hit is None:
            hit = self._cache[rect] = bool(self._pred(rect))
        return hit

    def members(self) -> list[DyadicRectangle]:
        return [r for r in rectangles_upto(self.depth) if r in self]

    def census(self) -> dict:
        total = dimension(self.depth)
        inside = sum(1 for r in rectangles_upto(self.depth) if r in self)
        return {"inside": inside, "complement": total - inside, "total": total}

    @classmethod
    def everything(cls, depth: int) -> "Coloring":
        return cls(depth, lambda r: True)

    @classmethod
    def empty(cls, depth: int) -> "Coloring":
        return cls(depth, None)

    @classmethod
    def random(cls, depth: int, seed: int, p: float = 0.5) -> "Coloring":
        rng = np.random.default_rng(seed)
        return cls.from_mask(depth, rng.random(dimension(depth)) < p)

    @classmethod
    def from_mask(cls, depth: int, mask) -> "Coloring":
        """Membership by a boolean array in order-index order."""
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (dimension(depth),):
            raise ValueError("mask length must equal the number of rectangles")
        return cls(depth, lambda r: r.in_depth(depth) and bool(mask[order_index(r) - 1]))


@dataclass
class RamseyResult:
    A: IntervalCollection
    B: IntervalCollection
    color: str
    carleson_A: Fraction
    carleson_B: Fraction
    n: int
    n0: int
    trace: list = field(default_factory=list)
    guarantees: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "n": self.n, "n0": self.n0, "color": self.color,
            "A": [str(i) for i in self.A], "B": [str(j) for j in self.B],
            "carleson_A": str(self.carleson_A), "carleson_B": str(self.carleson_B),
            "trace": self.trace, "guarantees": self.guarantees,
        }


def ramsey_extract(coloring: Coloring, n0: int) -> RamseyResult:
    """Greedy extraction of a monochromatic product A x B.

    The rows I_1, I_2, ... of D^k (k = 2 n0 - 1, listed by level then
    position) are visited in turn.  Each visit splits the surviving column
    family G into the members J with I_m x J outside (E) and inside (F) the
    coloring and keeps the part with the larger Carleson constant (E on
    ties).  Rows that kept E form H0, the others H1; A is the heavier of
    the two (H0 on ties).
    """
    n = coloring.depth
    if n0 < 1:
        raise DepthTooSmall("n0 must be positive")
    k = 2 * n0 - 1
    if n < k:
        raise DepthTooSmall(f"coloring depth {n} below 2*n0-1 = {k}",
                            {"depth": n, "required": k})
    rows = intervals_upto(k)
    G = list(intervals_upto(n))
    trace = []
    h0, h1 = [], []
    for m, I in enumerate(rows, start=1):
        E = [J for J in G if DyadicRectangle(I, J) not in coloring]
        F = [J for J in G if DyadicRectangle(I, J) in coloring]
        cE, cF = carleson_constant(E), carleson_constant(F)
        if cE >= cF:
            f, G = 0, E
            h0.append(I)
        else:
            f, G = 1, F
            h1.append(I)
        cG = max(cE, cF)
        trace.append({"m": m, "I": str(I), "f": f, "carleson_E": str(cE),
                      "carleson_F": str(cF), "carleson_G": str(cG),
                      "bound": str(Fraction(n + 1, 1 << m)),
                      "bound_holds": cG * (1 << m) >= n + 1})
    c0, c1 = carleson_constant(h0), carleson_constant(h1)
    if c0 >= c1:
        A, color, cA = h0, COMPLEMENT, c0
    else:
        A, color, cA = h1, INSIDE, c1
    cB = carleson_constant(G)
    steps = len(rows)
    guarantees = {
        "carleson_B_bound": str(Fraction(n + 1, 1 << steps)),
        "carleson_B_ok": cB * (1 << steps) >= n + 1,
        "carleson_A_ok": 2 * cA >= 2 * n0,
        "trace_ok": all(t["bound_holds"] for t in trace),
    }
    want = color == INSIDE
    bad = [(str(I), str(J)) for I in A for J in G
           if (DyadicRectangle(I, J) in coloring) != want]
    guarantees["monochromatic"] = not bad
    if bad or not all(v for key, v in guarantees.items() if key.endswith("_ok")):
        raise DyadicFactorError("Ramsey extraction guarantee violated",
                                {"violations": bad[:20], **guarantees})
    return RamseyResult(IntervalCollection(A), IntervalCollection(G), color, cA, cB,
                        n, n0, trace, guarantees)


# --------------------------------------------------------------------------
# local frequency weight and the covering lemma

class FrequencyWeightContext:
    """Accumulates sum_j |x_j| + |y_j| coefficientwise.

    The weight of a rectangle R is sum_j |<x_j, h_R>| + |<y_j, h_R>|, which
    equals the accumulated coefficient at R times |R|.
    """

    def __init__(self, depth: int, xs: Sequence = (), ys: Sequence = ()):
        self.depth = depth
        self.wcoef = np.zeros(dimension(depth))
        self.count = 0
        for x, y in zip(xs, ys, strict=True):
            self.add(x, y)

    def add(self, x, y) -> None:
        for v in (x, y):
            arr = getattr(v, "coef", v)
            if arr is not None:
                self.wcoef += np.abs(np.asarray(arr, dtype=np.float64))
        self.count += 1

    def weight_coef(self, rect: DyadicRectangle) -> float:
        if not rect.in_depth(self.depth):
            return 0.0
        return float(self.wcoef[order_index(rect) - 1])


def frequency_weight(ctx: FrequencyWeightContext, rect: DyadicRectangle) -> float:
    return ctx.weight_coef(rect) * float(rect.measure)


@dataclass
class CoverResult:
    level: int | None
    members: list
    fraction: Fraction
    met: bool
    scanned: list = field(default_factory=list)
    bound: int | None = None

    def to_json(self) -> dict:
        return {"level": self.level, "fraction": str(self.fraction), "met": self.met,
                "members": len(self.members), "bound": self.bound,
                "scanned": [(k, str(fr)) for k, fr in self.scanned]}


def lemma_level_bound(count: int, tau: float, delta) -> int:
    """floor(i^2 / (delta^2 tau^2)), saturated to a large sentinel."""
    if count == 0:
        return 0
    val = count * count / (float(delta) ** 2 * tau * tau)
    return int(math.floor(val)) if val < 1 << 60 else 1 << 60


def cover_level(K0L0: DyadicRectangle, ctx: FrequencyWeightContext, tau: float,
                k: int, axis: str):
    """Qualifying sub-rectangles at relative level k and their count."""
    K0, L0 = K0L0.x, K0L0.y
    if axis == "X":
        lev, anchor, other = K0.level + k, K0, L0
    else:
        lev, anchor, other = L0.level + k, L0, K0
    pos = (anchor.position << k) + np.arange(1 << k, dtype=np.int64)
    if lev > ctx.depth or other.level > ctx.depth:
        good = np.ones(pos.size, dtype=bool)
    else:
        if axis == "X":
            idx = block_offset(lev, L0.level) + (pos << L0.level) + L0.position
        else:
            idx = block_offset(K0.level, lev) + (K0.position << lev) + pos
        good = ctx.wcoef[idx] <= tau
    if axis == "X":
        members = [DyadicRectangle(DyadicInterval(lev, int(p)), L0) for p in pos[good]]
    else:
        members = [DyadicRectangle(K0, DyadicInterval(lev, int(p))) for p in pos[good]]
    return members, Fraction(int(good.sum()), 1 << k)


def comb_cover(K0L0: DyadicRectangle, ctx: FrequencyWeightContext, tau: float, delta,
               r: int, max_level: int, axis: str = "X") -> CoverResult:
    """Scan relative levels r..min(max_level, bound) for an almost cover of K0 x L0.

    Members split one side of K0 x L0 (axis X splits K0, axis Y splits L0)
    and keep frequency weight <= tau * measure.  The first level covering at
    least (1 - delta) of K0 x L0 is returned with ``met`` set; otherwise the
    best level (smallest on ties) with ``met`` False.
    """
    if axis not in ("X", "Y"):
        raise ValueError("axis must be 'X' or 'Y'")
    if tau <= 0 or not 0 < delta < 1 or r < 0:
        raise ValueError("need tau > 0, 0 < delta < 1 and r >= 0")
    delta = Fraction(delta)
    bound = lemma_level_bound(ctx.count, tau, delta) + r
    top = min(max_level, bound)
    best = CoverResult(None, [], Fraction(0), False, [], bound)
    for k in range(r, top + 1):
        members, frac = cover_level(K0L0, ctx, tau, k, axis)
        best.scanned.append((k, frac))
        if frac >= 1 - delta:
            return CoverResult(k, members, frac, True, best.scanned, bound)
        if best.level is None or frac > best.fraction:
            best.level, best.members, best.fraction = k, members, frac
    return best
