"""Pure numpy versions of the compiled kernels (same signatures)."""
from __future__ import annotations

import math

import numpy as np


def square_function_l1(coef_sq, x0, x1, y0, y1, side):
    coef_sq = np.ascontiguousarray(coef_sq, dtype=np.float64)
    nb, dim = coef_sq.shape
    out = np.empty(nb)
    # group rectangles by cell extent; every group upsamples by a reshape
    wx = x1 - x0
    wy = y1 - y0
    keys = wx * (side + 1) + wy
    order = np.argsort(keys, kind="stable")
    bounds = np.flatnonzero(np.diff(keys[order])) + 1
    groups = np.split(order, bounds)
    for b in range(nb):
        grid = np.zeros((side, side))
        row = coef_sq[b]
        for g in groups:
            vals = row[g]
            if not vals.any():
                continue
            rx, ry = int(wx[g[0]]), int(wy[g[0]])
            coarse = np.zeros((side // rx, side // ry))
            coarse[x0[g] // rx, y0[g] // ry] = vals
            grid.reshape(side // rx, rx, side // ry, ry)[...] += coarse[:, None, :, None]
        out[b] = math.fsum(np.sqrt(grid).ravel()) / (side * side)
    return out


def bmo_union_max(masks, weights, chunk=4096):
    """Same contract as the compiled kernel; enumerates subsets in batches."""
    masks = np.asarray(masks, dtype=np.uint64)
    weights = np.asarray(weights, dtype=np.float64)
    s, w = masks.shape
    if s == 0:
        return 0.0, 1, 0
    if s > 62:
        raise ValueError("too many support rectangles")
    bits = np.unpackbits(masks.view(np.uint8).reshape(s, w * 8), axis=1,
                         bitorder="little").astype(np.float64)
    best = (-1.0, 0.0, 1, 0)
    shifts = np.arange(s, dtype=np.uint64)
    total = 1 << s
    for lo in range(1, total, chunk):
        ids = np.arange(lo, min(lo + chunk, total), dtype=np.uint64)
        sel = ((ids[:, None] >> shifts) & np.uint64(1)).astype(np.float64)
        union = (sel @ bits) > 0
        cells = union.sum(axis=1)
        outside = (~union).astype(np.float64) @ bits.T
        num = (outside == 0).astype(np.float64) @ weights
        ratio = num / cells
        k = int(np.argmax(ratio))
        if ratio[k] > best[0]:
            best = (float(ratio[k]), float(num[k]), int(cells[k]), int(ids[k]))
    return best[1], best[2], best[3]
