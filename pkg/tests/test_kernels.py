"""Compiled and pure kernels agree; the pure backend can be forced."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dyadic_factor import kernels
from dyadic_factor.dyadic import dimension, layout, rect_mask, rectangles_upto
from dyadic_factor.haar import _pack_masks

BACKENDS = kernels.backends()
pytestmark = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")


@given(st.integers(0, 4), st.integers(1, 4), st.integers(0, 2 ** 31))
def test_square_function_agree(depth, batch, seed):
    rng = np.random.default_rng(seed)
    lay = layout(depth)
    x0, x1, y0, y1 = lay.cell_bounds()
    sq = rng.standard_normal((batch, dimension(depth))) ** 2
    sq[:, rng.random(dimension(depth)) < 0.5] = 0
    a = BACKENDS["python"].square_function_l1(sq, x0, x1, y0, y1, 1 << depth)
    b = BACKENDS["cython"].square_function_l1(sq, x0, x1, y0, y1, 1 << depth)
    assert np.allclose(a, b, rtol=1e-13, atol=0)


@given(st.integers(1, 12), st.integers(0, 2 ** 31))
def test_bmo_union_agree(s, seed):
    rng = np.random.default_rng(seed)
    rects = rectangles_upto(3)
    pick = [rects[i] for i in rng.choice(len(rects), s, replace=False)]
    lx = max(r.x.level for r in pick)
    ly = max(r.y.level for r in pick)
    masks = _pack_masks(np.array([rect_mask([r], lx, ly).ravel() for r in pick]))
    w = rng.random(s)
    num_a, cells_a, bits_a = BACKENDS["python"].bmo_union_max(masks, w)
    num_b, cells_b, bits_b = BACKENDS["cython"].bmo_union_max(masks, w)
    assert num_a / cells_a == pytest.approx(num_b / cells_b, rel=1e-12)


def test_pure_backend_env():
    code = "import dyadic_factor.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, DYADIC_FACTOR_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"


def test_active_backend_is_compiled():
    assert kernels.BACKEND == "cython"
