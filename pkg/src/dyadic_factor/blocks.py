"""Block bases b_{I x J} = sum of h_{K x L} over a family of disjoint rectangles."""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .dyadic import (
    DyadicRectangle,
    cell_slice,
    dimension,
    layout,
    order_index,
    rect_mask,
    rectangles_upto,
)
from .errors import DepthMismatch, ZeroBlock
from .haar import HaarOperator, HaarVector


class BlockBasis:
    """Families E_{I x J} indexed by rectangles, with members in R_depth."""

    def __init__(self, depth: int, families: Mapping[DyadicRectangle, Iterable[DyadicRectangle]],
                 n: int | None = None, metadata: dict | None = None):
        self.depth = depth
        ordered = sorted(families, key=order_index)
        self.families = {idx: tuple(sorted(families[idx], key=order_index)) for idx in ordered}
        for idx, members in self.families.items():
            for r in members:
                if not r.in_depth(depth):
                    raise DepthMismatch(f"member {r} of {idx} outside depth {depth}")
        self.n = n if n is not None else max((max(i.shape) for i in ordered), default=0)
        self.metadata = dict(metadata or {})
        self._masks: dict = {}

    # -- basic data ---------------------------------------------------------
    def indices(self) -> list[DyadicRectangle]:
        return list(self.families)

    def __len__(self) -> int:
        return len(self.families)

    def __getitem__(self, idx: DyadicRectangle) -> tuple[DyadicRectangle, ...]:
        return self.families[idx]

    def __contains__(self, idx) -> bool:
        return idx in self.families

    def measure(self, idx: DyadicRectangle) -> Fraction:
        """|E*_{idx}|, exact (members are pairwise disjoint)."""
        return sum((r.measure for r in self.families[idx]), Fraction(0))

    def norms_sq(self) -> np.ndarray:
        """||b||_2^2 per index in index order."""
        return np.array([float(self.measure(i)) for i in self.families])

    def vector(self, idx: DyadicRectangle) -> HaarVector:
        return HaarVector.from_dict(self.depth, {r: 1.0 for r in self.families[idx]})

    def matrix(self, indices: Sequence[DyadicRectangle] | None = None) -> sp.csc_matrix:
        """Sparse (dim_N, m) matrix whose columns are the block vectors."""
        indices = self.indices() if indices is None else list(indices)
        rows, cols = [], []
        for c, idx in enumerate(indices):
            for r in self.families[idx]:
                rows.append(order_index(r) - 1)
                cols.append(c)
        data = np.ones(len(rows))
        return sp.csc_matrix((data, (rows, cols)), shape=(dimension(self.depth), len(indices)))

    @property
    def resolution(self) -> tuple[int, int]:
        lx = max((r.x.level for fam in self.families.values() for r in fam), default=0)
        ly = max((r.y.level for fam in self.families.values() for r in fam), default=0)
        return lx, ly

    def mask(self, idx: DyadicRectangle) -> np.ndarray:
        m = self._masks.get(idx)
        if m is None:
            lx, ly = self.resolution
            m = self._masks[idx] = rect_mask(self.families[idx], lx, ly)
        return m

    def cell_measure(self) -> Fraction:
        lx, ly = self.resolution
        return Fraction(1, 1 << (lx + ly))

    def intersection_measure(self, rect: DyadicRectangle, idx: DyadicRectangle) -> Fraction:
        """|rect intersected with E*_{idx}|, exact."""
        lx, ly = self.resolution
        m = self.mask(idx)
        xs = cell_slice(rect.x, lx) if rect.x.level <= lx else None
        ys = cell_slice(rect.y, ly) if rect.y.level <= ly else None
        if xs is None or ys is None:
            # rect finer than every member: it lies inside one cell
            cx = rect.x.position >> (rect.x.level - lx) if xs is None else None
            cy = rect.y.position >> (rect.y.level - ly) if ys is None else None
            sub = m[cx if xs is None else xs, cy if ys is None else ys]
            inside = bool(np.all(sub))
            if not inside and np.any(sub):
                # partial overlap along the coarse axis
                count = int(np.count_nonzero(sub))
                total = sub.size
                return rect.measure * Fraction(count, total)
            return rect.measure if inside else Fraction(0)
        return Fraction(int(m[xs, ys].sum())) * self.cell_measure()

    def is_disjoint(self) -> bool:
        """No rectangle shared by two families, and each family is a
        collection of pairwise disjoint point sets."""
        seen: set = set()
        for fam in self.families.values():
            if seen.intersection(fam) or len(set(fam)) != len(fam):
                return False
            seen.update(fam)
        return all(self.family_disjoint(i) for i in self.families)

    def family_disjoint(self, idx: DyadicRectangle) -> bool:
        m = self.mask(idx)
        return Fraction(int(m.sum()), m.size) == self.measure(idx)

    def require_nonzero(self):
        empty = [str(i) for i, fam in self.families.items() if not fam]
        if empty:
            raise ZeroBlock(f"{len(empty)} empty blocks", {"empty": empty[:20]})

    # -- constructors and serialization -------------------------------------
    @classmethod
    def canonical(cls, n: int, depth: int | None = None) -> "BlockBasis":
        """E_{I x J} = {I x J} for every I x J in R_n."""
        depth = n if depth is None else depth
        return cls(depth, {r: (r,) for r in rectangles_upto(n)}, n, {"source": "canonical"})

    def restrict(self, indices: Iterable[DyadicRectangle]) -> "BlockBasis":
        return BlockBasis(self.depth, {i: self.families[i] for i in indices}, self.n, self.metadata)

    def to_json(self) -> dict:
        return {
            "depth": self.depth, "n": self.n,
            "blocks": [{"index": str(i), "members": [str(r) for r in fam]}
                       for i, fam in self.families.items()],
            "metadata": self.metadata,
        }

    @classmethod
    def from_json(cls, data: dict) -> "BlockBasis":
        fams = {DyadicRectangle.parse(b["index"]): [DyadicRectangle.parse(m) for m in b["members"]]
                for b in data["blocks"]}
        return cls(int(data["depth"]), fams, int(data.get("n", 0)), data.get("metadata"))


def embedding_matrix(sys: BlockBasis, n: int | None = None) -> sp.csc_matrix:
    """(dim_N, dim_n) matrix mapping h_{I x J} to b_{I x J}; absent indices give 0."""
    n = sys.n if n is None else n
    rows, cols = [], []
    for idx, fam in sys.families.items():
        if not idx.in_depth(n):
            continue
        c = order_index(idx) - 1
        for r in fam:
            rows.append(order_index(r) - 1)
            cols.append(c)
    return sp.csc_matrix((np.ones(len(rows)), (rows, cols)),
                         shape=(dimension(sys.depth), dimension(n)))


def block_projection(sys: BlockBasis) -> HaarOperator:
    """Orthogonal projection Q f = sum <f, b> b / ||b||^2 in Haar coordinates."""
    sys.require_nonzero()
    B = sys.matrix()
    area = layout(sys.depth).area
    inv = sp.diags(1.0 / sys.norms_sq())
    Q = B @ inv @ B.T @ sp.diags(area)
    return HaarOperator(sys.depth, sp.csr_matrix(Q), {"kind": "block_projection",
                                                     "blocks": len(sys)})
