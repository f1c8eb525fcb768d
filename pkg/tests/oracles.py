"""Independent reference implementations used as test oracles.

Nothing here imports the package's numerical code paths; only the basic
interval/rectangle value types are shared.
"""
from __future__ import annotations

import functools
import itertools
import math
from fractions import Fraction

import numpy as np

from dyadic_factor.dyadic import DyadicInterval, DyadicRectangle


# -- ordering, straight from the block rules -----------------------------------

def _shell(m, n):
    return max(m, n)


def _block_less(b0, b1) -> bool:
    """w(B_{m0,n0}) < w(B_{m1,n1}) by the case rules."""
    (m0, n0), (m1, n1) = b0, b1
    k0, k1 = _shell(m0, n0), _shell(m1, n1)
    if k0 != k1:
        return k0 < k1
    if b0 == b1:
        return False
    if b0 == (0, k0):
        return True
    if b1 == (0, k1):
        return False
    return ((m0 > n0 and m1 <= n1)
            or (m0 > n0 and m1 > n1 and n0 < n1)
            or (m0 <= n0 and m1 <= n1 and m0 < m1))


def compare(r0: DyadicRectangle, r1: DyadicRectangle) -> int:
    b0, b1 = (r0.x.level, r0.y.level), (r1.x.level, r1.y.level)
    if _block_less(b0, b1):
        return -1
    if _block_less(b1, b0):
        return 1
    a0 = (Fraction(r0.x.position, 1 << r0.x.level), Fraction(r0.y.position, 1 << r0.y.level))
    a1 = (Fraction(r1.x.position, 1 << r1.x.level), Fraction(r1.y.position, 1 << r1.y.level))
    return (a0 > a1) - (a0 < a1)


def all_rectangles(n: int) -> list[DyadicRectangle]:
    return [DyadicRectangle(DyadicInterval(a, b), DyadicInterval(c, d))
            for a in range(n + 1) for b in range(1 << a)
            for c in range(n + 1) for d in range(1 << c)]


def sorted_rectangles(n: int) -> list[DyadicRectangle]:
    return sorted(all_rectangles(n), key=functools.cmp_to_key(compare))


# -- Carleson constant by direct definition ----------------------------------

def carleson(coll) -> Fraction:
    coll = list(set(coll))
    best = Fraction(0)
    for I in coll:
        lo, hi = Fraction(I.position, 1 << I.level), Fraction(I.position + 1, 1 << I.level)
        s = Fraction(0)
        for J in coll:
            jl, jh = Fraction(J.position, 1 << J.level), Fraction(J.position + 1, 1 << J.level)
            if lo <= jl and jh <= hi:
                s += Fraction(1, 1 << J.level)
        best = max(best, s * (1 << I.level))
    return best


# -- Haar functions on a grid ------------------------------------------------

def haar_1d(level: int, pos: int, res: int) -> np.ndarray:
    """h_I on 2**res equal cells: +1 on the left half, -1 on the right half."""
    out = np.zeros(1 << res)
    w = 1 << (res - level)
    start = pos * w
    out[start:start + w // 2] = 1.0
    out[start + w // 2:start + w] = -1.0
    return out


def evaluate(coefs: dict, depth: int) -> np.ndarray:
    res = depth + 1
    grid = np.zeros((1 << res, 1 << res))
    for R, a in coefs.items():
        grid += a * np.outer(haar_1d(R.x.level, R.x.position, res),
                             haar_1d(R.y.level, R.y.position, res))
    return grid


def grid_pairing(f: dict, g: dict, depth: int) -> float:
    a, b = evaluate(f, depth), evaluate(g, depth)
    return float((a * b).sum()) / a.size


def monte_carlo_h1(coefs: dict, depth: int, samples: int, seed: int) -> float:
    """Mean of the square function at uniform random points."""
    rng = np.random.default_rng(seed)
    s, t = rng.random(samples), rng.random(samples)
    sq = np.zeros(samples)
    by_shape: dict = {}
    for R, a in coefs.items():
        by_shape.setdefault((R.x.level, R.y.level), {})[(R.x.position, R.y.position)] = a * a
    for (m, n), table in by_shape.items():
        arr = np.zeros((1 << m, 1 << n))
        for (p, q), v in table.items():
            arr[p, q] = v
        sq += arr[(s * (1 << m)).astype(int), (t * (1 << n)).astype(int)]
    return float(np.sqrt(sq).mean())


def brute_bmo(coefs: dict) -> Fraction:
    """max over unions U of support rectangles of sum_{R in U} a_R^2 |R| / |U|, squared norm."""
    supp = [R for R, a in coefs.items() if a != 0]
    if not supp:
        return Fraction(0)
    lx = max(R.x.level for R in supp)
    ly = max(R.y.level for R in supp)
    cells = {}
    for R in supp:
        sx, sy = lx - R.x.level, ly - R.y.level
        cells[R] = frozenset((x, y) for x in range(R.x.position << sx, (R.x.position + 1) << sx)
                             for y in range(R.y.position << sy, (R.y.position + 1) << sy))
    best = Fraction(0)
    for k in range(1, len(supp) + 1):
        for combo in itertools.combinations(supp, k):
            U = frozenset().union(*(cells[R] for R in combo))
            num = sum((Fraction(coefs[R]) ** 2 * Fraction(1, 1 << (R.x.level + R.y.level))
                       for R in supp if cells[R] <= U), Fraction(0))
            best = max(best, num / Fraction(len(U), 1 << (lx + ly)))
    return best


def bmo_value(coefs: dict) -> float:
    return math.sqrt(brute_bmo(coefs))
