"""Dyadic intervals and rectangles on the unit interval/square.

Intervals are stored as ``(level, position)`` integer pairs, so that
``[2**-level * position, 2**-level * (position + 1))`` is the point set.
All measures are exact :class:`fractions.Fraction` values.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np

from .errors import DyadicError, IndexOutOfRange

LT, EQ, GT = -1, 0, 1


@dataclass(frozen=True, order=False, slots=True)
class DyadicInterval:
    level: int
    position: int

    def __post_init__(self):
        if self.level < 0 or not 0 <= self.position < (1 << self.level):
            raise DyadicError(f"invalid dyadic interval {self.level}:{self.position}")

    @property
    def measure(self) -> Fraction:
        return Fraction(1, 1 << self.level)

    @property
    def inf(self) -> Fraction:
        return Fraction(self.position, 1 << self.level)

    @property
    def sup(self) -> Fraction:
        return Fraction(self.position + 1, 1 << self.level)

    def is_root(self) -> bool:
        return self.level == 0

    def predecessor(self) -> "DyadicInterval":
        if self.level == 0:
            raise DyadicError("the root interval [0,1) has no predecessor")
        return DyadicInterval(self.level - 1, self.position >> 1)

    def ancestor(self, level: int) -> "DyadicInterval":
        if level > self.level:
            raise DyadicError("ancestor level must not exceed own level")
        return DyadicInterval(level, self.position >> (self.level - level))

    def left(self) -> "DyadicInterval":
        return DyadicInterval(self.level + 1, 2 * self.position)

    def right(self) -> "DyadicInterval":
        return DyadicInterval(self.level + 1, 2 * self.position + 1)

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return self.left(), self.right()

    def is_left_child(self) -> bool:
        return self.level > 0 and self.position % 2 == 0

    def contains(self, other: "DyadicInterval") -> bool:
        """True if ``other`` is a (not necessarily strict) subset."""
        if other.level < self.level:
            return False
        return other.position >> (other.level - self.level) == self.position

    def intersects(self, other: "DyadicInterval") -> bool:
        return self.contains(other) or other.contains(self)

    def descendants(self, rel_level: int) -> list["DyadicInterval"]:
        """Subintervals of length ``2**-rel_level * |self|``."""
        lev = self.level + rel_level
        start = self.position << rel_level
        return [DyadicInterval(lev, start + p) for p in range(1 << rel_level)]

    def __str__(self) -> str:
        return f"{self.level}:{self.position}"

    def __repr__(self) -> str:
        return f"DyadicInterval({self.level}:{self.position})"

    @classmethod
    def parse(cls, text: str) -> "DyadicInterval":
        try:
            lev, pos = text.strip().split(":")
            return cls(int(lev), int(pos))
        except ValueError as exc:
            raise DyadicError(f"cannot parse dyadic interval {text!r}") from exc


ROOT = DyadicInterval(0, 0)


@dataclass(frozen=True, order=False, slots=True)
class DyadicRectangle:
    x: DyadicInterval
    y: DyadicInterval

    @classmethod
    def of(cls, jx: int, kx: int, jy: int, ky: int) -> "DyadicRectangle":
        return cls(DyadicInterval(jx, kx), DyadicInterval(jy, ky))

    @property
    def measure(self) -> Fraction:
        return Fraction(1, 1 << (self.x.level + self.y.level))

    @property
    def shape(self) -> tuple[int, int]:
        return self.x.level, self.y.level

    def in_depth(self, n: int) -> bool:
        return self.x.level <= n and self.y.level <= n

    def contains(self, other: "DyadicRectangle") -> bool:
        return self.x.contains(other.x) and self.y.contains(other.y)

    def intersects(self, other: "DyadicRectangle") -> bool:
        return self.x.intersects(other.x) and self.y.intersects(other.y)

    def __str__(self) -> str:
        return f"{self.x},{self.y}"

    def __repr__(self) -> str:
        return f"DyadicRectangle({self})"

    @classmethod
    def parse(cls, text: str) -> "DyadicRectangle":
        try:
            a, b = text.split(",")
        except ValueError as exc:
            raise DyadicError(f"cannot parse dyadic rectangle {text!r}") from exc
        return cls(DyadicInterval.parse(a), DyadicInterval.parse(b))


ROOT_RECT = DyadicRectangle(ROOT, ROOT)


def measure(obj: DyadicInterval | DyadicRectangle) -> Fraction:
    return obj.measure


def predecessor(interval: DyadicInterval) -> DyadicInterval:
    return interval.predecessor()


def intervals_upto(n: int) -> list[DyadicInterval]:
    """All intervals of level <= n, ordered by level then position."""
    return [DyadicInterval(j, k) for j in range(n + 1) for k in range(1 << j)]


def maximal(intervals: Iterable[DyadicInterval]) -> list[DyadicInterval]:
    """Members not strictly contained in another member (pairwise disjoint)."""
    chosen: set[DyadicInterval] = set()
    out = []
    for iv in sorted(set(intervals), key=lambda i: (i.level, i.position)):
        if not any(iv.ancestor(lev) in chosen for lev in range(iv.level)):
            chosen.add(iv)
            out.append(iv)
    return out


# --------------------------------------------------------------------------
# collections

def carleson_constant(collection: Iterable[DyadicInterval]) -> Fraction:
    """sup over I in A of sum_{J in A, J subset I} |J|/|I|; 0 for an empty A."""
    members = set(collection)
    if not members:
        return Fraction(0)
    top = max(iv.level for iv in members)
    # packing sums scaled by 2**top so they stay integral
    acc = dict.fromkeys(members, 0)
    for j in members:
        weight = 1 << (top - j.level)
        for lev in range(j.level + 1):
            anc = j.ancestor(lev)
            if anc in acc:
                acc[anc] += weight
    return max(Fraction(s, 1 << (top - i.level)) for i, s in acc.items())


class IntervalCollection:
    """Finite set of dyadic intervals with exact union measure."""

    def __init__(self, members: Iterable[DyadicInterval] = ()):
        self.members = frozenset(members)

    def __iter__(self) -> Iterator[DyadicInterval]:
        return iter(sorted(self.members, key=lambda i: (i.level, i.position)))

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, item) -> bool:
        return item in self.members

    def union_measure(self) -> Fraction:
        return sum((m.measure for m in maximal(self.members)), Fraction(0))

    def is_pairwise_disjoint(self) -> bool:
        return len(maximal(self.members)) == len(self.members)

    def carleson(self) -> Fraction:
        return carleson_constant(self.members)

    def restrict(self, interval: DyadicInterval) -> "IntervalCollection":
        return IntervalCollection(m for m in self.members if interval.contains(m))


class RectangleCollection:
    """Finite set of dyadic rectangles with exact union measure.

    The union is rasterized at the finest member resolution, which is exact
    because every member is a union of finest-level cells.
    """

    MAX_CELLS = 1 << 26

    def __init__(self, members: Iterable[DyadicRectangle] = ()):
        self.members = frozenset(members)

    def __iter__(self) -> Iterator[DyadicRectangle]:
        return iter(sorted(self.members, key=rect_sort_key))

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, item) -> bool:
        return item in self.members

    def mask(self, lx: int | None = None, ly: int | None = None) -> np.ndarray:
        if lx is None:
            lx = max((r.x.level for r in self.members), default=0)
        if ly is None:
            ly = max((r.y.level for r in self.members), default=0)
        if (1 << (lx + ly)) > self.MAX_CELLS:
            raise DyadicError("collection too fine to rasterize")
        return rect_mask(self.members, lx, ly)

    def union_measure(self) -> Fraction:
        if not self.members:
            return Fraction(0)
        m = self.mask()
        return Fraction(int(m.sum()), m.size)

    def sum_measure(self) -> Fraction:
        return sum((r.measure for r in self.members), Fraction(0))

    def is_pairwise_disjoint(self) -> bool:
        return self.union_measure() == self.sum_measure()


def rect_mask(rects: Iterable[DyadicRectangle], lx: int, ly: int) -> np.ndarray:
    """Boolean raster of the union on a 2**lx by 2**ly grid (x is axis 0)."""
    out = np.zeros((1 << lx, 1 << ly), dtype=bool)
    for r in rects:
        out[cell_slice(r.x, lx), cell_slice(r.y, ly)] = True
    return out


def cell_slice(iv: DyadicInterval, resolution: int) -> slice:
    if iv.level > resolution:
        raise DyadicError(f"interval {iv} finer than grid level {resolution}")
    s = resolution - iv.level
    return slice(iv.position << s, (iv.position + 1) << s)


# --------------------------------------------------------------------------
# the linear order on rectangles

def block_weight(m: int, n: int) -> int:
    """Position of the block of shape (m, n) inside the global block order."""
    k = max(m, n)
    if k == 0:
        return 0
    if m == 0:
        return k * k
    if m > n:
        return k * k + 1 + n
    return k * k + k + m


@lru_cache(maxsize=None)
def _shell_blocks(k: int) -> tuple[tuple[int, int], ...]:
    blocks = [(m, k) for m in range(k + 1)] + [(k, n) for n in range(k)]
    return tuple(sorted(blocks, key=lambda b: block_weight(*b)))


@lru_cache(maxsize=None)
def block_offset(m: int, n: int) -> int:
    """Number of rectangles preceding the block of shape (m, n)."""
    k = max(m, n)
    off = ((1 << k) - 1) ** 2
    for b in _shell_blocks(k):
        if b == (m, n):
            return off
        off += 1 << (b[0] + b[1])
    raise AssertionError("unreachable")


def dimension(n: int) -> int:
    """Number of rectangles in R_n."""
    return ((1 << (n + 1)) - 1) ** 2


def order_key(r: DyadicRectangle) -> tuple[int, Fraction, Fraction]:
    return block_weight(r.x.level, r.y.level), r.x.inf, r.y.inf


def order_compare(r0: DyadicRectangle, r1: DyadicRectangle) -> int:
    k0, k1 = order_key(r0), order_key(r1)
    return LT if k0 < k1 else GT if k0 > k1 else EQ


def order_index(r: DyadicRectangle) -> int:
    """1-based position of ``r`` in the linear order."""
    m, n = r.x.level, r.y.level
    return block_offset(m, n) + (r.x.position << n) + r.y.position + 1


def order_rect(i: int, n: int | None = None) -> DyadicRectangle:
    """Inverse of :func:`order_index`; ``n`` bounds the admissible depth."""
    if i < 1 or (n is not None and i > dimension(n)):
        raise IndexOutOfRange(f"index {i} outside 1..{dimension(n) if n is not None else 'inf'}")
    k = 0
    while dimension(k) < i:
        k += 1
    off = ((1 << k) - 1) ** 2 if k else 0
    for m, nn in _shell_blocks(k):
        size = 1 << (m + nn)
        if i <= off + size:
            rel = i - off - 1
            return DyadicRectangle.of(m, rel >> nn, nn, rel & ((1 << nn) - 1))
        off += size
    raise AssertionError("unreachable")


def rect_sort_key(r: DyadicRectangle) -> int:
    return order_index(r)


def rectangles_upto(n: int) -> list[DyadicRectangle]:
    """R_n listed in the linear order."""
    return [order_rect(i) for i in range(1, dimension(n) + 1)]


@dataclass(frozen=True)
class Layout:
    """Vectorized description of R_N in order-index order."""

    depth: int
    lx: np.ndarray
    px: np.ndarray
    ly: np.ndarray
    py: np.ndarray
    area: np.ndarray  # float |R|

    @property
    def dim(self) -> int:
        return self.lx.size

    def blocks(self):
        """Yield (m, n, start) for every shape block inside R_N."""
        for k in range(self.depth + 1):
            for m, n in _shell_blocks(k):
                yield m, n, block_offset(m, n)

    def rect(self, idx: int) -> DyadicRectangle:
        return DyadicRectangle.of(int(self.lx[idx]), int(self.px[idx]),
                                  int(self.ly[idx]), int(self.py[idx]))

    def cell_bounds(self):
        """Cell ranges [x0, x1) x [y0, y1) of every rectangle on the 2**N grid."""
        sx = self.depth - self.lx
        sy = self.depth - self.ly
        return (self.px << sx, (self.px + 1) << sx,
                self.py << sy, (self.py + 1) << sy)


@lru_cache(maxsize=16)
def layout(n: int) -> Layout:
    dim = dimension(n)
    lx = np.empty(dim, dtype=np.int64)
    px = np.empty(dim, dtype=np.int64)
    ly = np.empty(dim, dtype=np.int64)
    py = np.empty(dim, dtype=np.int64)
    for k in range(n + 1):
        for m, nn in _shell_blocks(k):
            start = block_offset(m, nn)
            size = 1 << (m + nn)
            rel = np.arange(size, dtype=np.int64)
            lx[start:start + size] = m
            ly[start:start + size] = nn
            px[start:start + size] = rel >> nn
            py[start:start + size] = rel & ((1 << nn) - 1)
    area = np.ldexp(1.0, -(lx + ly).astype(np.int32))
    for arr in (lx, px, ly, py, area):
        arr.setflags(write=False)
    return Layout(n, lx, px, ly, py, area)


def indices_of(rects: Iterable[DyadicRectangle]) -> np.ndarray:
    return np.fromiter((order_index(r) - 1 for r in rects), dtype=np.int64)
