"""Compare the compiled and the numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per (kernel, size, backend) with the best wall time and
the speedup of the compiled kernel, and checks that both agree.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from dyadic_factor import kernels
from dyadic_factor.dyadic import dimension, layout, rect_mask, rectangles_upto
from dyadic_factor.haar import _pack_masks


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def square_function_cases(rng):
    for depth, batch in ((4, 64), (6, 16), (7, 4)):
        lay = layout(depth)
        x0, x1, y0, y1 = lay.cell_bounds()
        sq = rng.standard_normal((batch, dimension(depth))) ** 2
        yield f"square_function depth={depth} batch={batch}", (sq, x0, x1, y0, y1, 1 << depth)


def bmo_cases(rng):
    rects = [r for r in rectangles_upto(3)]
    for s in (10, 14, 18):
        pick = [rects[i] for i in rng.choice(len(rects), s, replace=False)]
        lx = max(r.x.level for r in pick)
        ly = max(r.y.level for r in pick)
        masks = np.array([rect_mask([r], lx, ly).ravel() for r in pick])
        w = rng.random(s)
        yield f"bmo_union_max support={s}", (_pack_masks(masks), w)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    found = kernels.backends()
    print(f"backends: {', '.join(found)} (active: {kernels.BACKEND})")
    for name, cases in (("square_function_l1", square_function_cases(rng)),
                        ("bmo_union_max", bmo_cases(rng))):
        for label, inputs in cases:
            times, outs = {}, {}
            for bname, mod in found.items():
                times[bname], outs[bname] = _best(lambda: getattr(mod, name)(*inputs),
                                                  args.repeat)
            line = "  ".join(f"{b}={t * 1e3:9.3f} ms" for b, t in times.items())
            if "cython" in times:
                line += f"  speedup={times['python'] / times['cython']:7.1f}x"
                a, b = outs["python"], outs["cython"]
                same = (np.allclose(a, b, rtol=1e-12, atol=0) if name == "square_function_l1"
                        else abs(a[0] - b[0]) <= 1e-12 * max(1.0, abs(a[0])) and a[1] == b[1])
                line += "  agree" if same else "  MISMATCH"
            print(f"{label:40s} {line}")


if __name__ == "__main__":
    main()
