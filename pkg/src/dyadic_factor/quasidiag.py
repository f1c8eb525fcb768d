"""Inductive almost-diagonalization of an operator by block bases.

Stages run along the linear order of R_n.  Stage i picks the family E_i of
rectangles for the index R_i = I x J so that every member has small
local frequency weight against the images T b_j, T* b_j of the earlier
blocks, while the families keep the nested half-splitting structure that
makes {b_i} equivalent to the Haar basis.

Two modes exist.  ``strict`` raises as soon as a needed cover misses the
(1 - delta_i) target, ``best-effort`` keeps the best available level and
records the miss.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .blocks import BlockBasis, block_projection, embedding_matrix
from .combinatorics import FrequencyWeightContext, comb_cover
from .dyadic import (
    ROOT,
    DyadicInterval,
    DyadicRectangle,
    cell_slice,
    dimension,
    layout,
    order_index,
    order_rect,
    rect_mask,
)
from .errors import DepthExhausted, NormalizationViolated, StageFailed
from .haar import HaarOperator, HaarVector, NormEstimate, bmo_norm_lower, op_norm_lower

STRICT, BEST_EFFORT = "strict", "best-effort"


def default_eps(i: int) -> float:
    """eps_i = 2^(-i-2); the schedule sums to at most 1/4."""
    return 2.0 ** (-i - 2)


def make_eps(eps) -> Callable[[int], float]:
    if eps is None:
        return default_eps
    if callable(eps):
        return eps
    if isinstance(eps, Mapping):
        return lambda i: float(eps[i])
    if isinstance(eps, (int, float)):
        return lambda i: float(eps)
    seq = list(eps)
    return lambda i: float(seq[i - 1])


def delta_of(i: int, n: int) -> Fraction:
    return Fraction(1, (1 << i) * 8 * n)


@dataclass
class StageInfo:
    i: int
    index: DyadicRectangle
    case: str
    delta: Fraction
    eps: float
    alpha: Fraction  # 1 - prod_{k <= i} (1 - delta_k)^2
    beta: Fraction | None = None
    tau: float | None = None
    eta_level: int | None = None
    eta_clamped: bool = False
    covers: list = field(default_factory=list)
    met: bool = True
    y_frequencies: list = field(default_factory=list)
    x_masks: dict | None = None  # L0 -> bool mask on the 2**N grid (None: all of [0,1))
    w_measure: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "i": self.i, "index": str(self.index), "case": self.case,
            "delta": str(self.delta), "eps": self.eps, "alpha": float(self.alpha),
            "beta": None if self.beta is None else str(self.beta), "tau": self.tau,
            "eta_level": self.eta_level, "eta_clamped": self.eta_clamped,
            "met": self.met, "covers": self.covers,
            "y_frequencies": [str(L) for L in self.y_frequencies],
            "w_measure": {str(k): str(v) for k, v in self.w_measure.items()},
            "notes": self.notes,
        }


class BlockSystem(BlockBasis):
    """Block basis with the per-stage diagnostics of the construction."""

    def __init__(self, depth, families, n, stages: Sequence[StageInfo], eps, mode, metadata=None):
        super().__init__(depth, families, n, metadata)
        self.stages = list(stages)
        self.eps = eps
        self.mode = mode

    def stage(self, idx: DyadicRectangle) -> StageInfo:
        return self.stages[order_index(idx) - 1]

    def eps_array(self) -> np.ndarray:
        return np.array([s.eps for s in self.stages])

    def to_json(self) -> dict:
        out = super().to_json()
        out["mode"] = self.mode
        out["stages"] = [s.to_json() for s in self.stages]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "BlockBasis":
        base = BlockBasis.from_json(data)
        if "stages" not in data:
            return base
        stages = []
        for s in data["stages"]:
            st = StageInfo(int(s["i"]), DyadicRectangle.parse(s["index"]), s["case"],
                           Fraction(s["delta"]), float(s["eps"]), Fraction(s["alpha"]))
            st.beta = None if s.get("beta") is None else Fraction(s["beta"])
            st.tau = s.get("tau")
            st.met = bool(s.get("met", True))
            stages.append(st)
        return cls(base.depth, base.families, base.n, stages,
                   [st.eps for st in stages], data.get("mode", BEST_EFFORT), base.metadata)


# --------------------------------------------------------------------------
# the induction

class _WeightSource:
    """Supplies the accumulated frequency-weight coefficients at each stage."""

    def reset(self, depth: int):
        raise NotImplementedError

    def add_block(self, coef: np.ndarray, measure: float):
        raise NotImplementedError

    def context(self, i: int, beta: float) -> FrequencyWeightContext:
        raise NotImplementedError


class _OperatorWeights(_WeightSource):
    """x_j = T* b_j / (i-1) and y_j = beta T b_j / ((i-1) |E_j*|)."""

    def __init__(self, T: HaarOperator):
        self.T = T
        self.s_adj = np.zeros(T.dim)
        self.s_dir = np.zeros(T.dim)
        self.count = 0

    def add_block(self, coef, measure):
        self.count += 1
        if measure == 0:
            return
        self.s_adj += np.abs(self.T.adjoint_matvec(coef))
        self.s_dir += np.abs(self.T.matvec(coef)) / measure

    def context(self, i, beta):
        ctx = FrequencyWeightContext(self.T.depth)
        m = i - 1
        ctx.wcoef = self.s_adj / m + float(beta) * self.s_dir / m
        ctx.count = m
        return ctx


class _SubspaceWeights(_WeightSource):
    """x_j = f_j / m and y_j = beta f_j / m for an orthonormal basis f_1..f_m."""

    def __init__(self, depth: int, basis: np.ndarray):
        self.depth = depth
        self.basis = basis
        self.abs_sum = np.abs(basis).sum(axis=0) if basis.size else np.zeros(dimension(depth))

    def add_block(self, coef, measure):
        pass

    def context(self, i, beta):
        ctx = FrequencyWeightContext(self.depth)
        m = max(len(self.basis), 1)
        ctx.wcoef = self.abs_sum / m * (1.0 + float(beta))
        ctx.count = len(self.basis)
        return ctx


def _interval_mask(iv: DyadicInterval, depth: int) -> np.ndarray:
    m = np.zeros(1 << depth, dtype=bool)
    m[cell_slice(iv, depth)] = True
    return m


def _region(rects, depth: int, side: str | None = None) -> np.ndarray:
    """Mask at resolution (N+1, N) of the union, optionally halved in x."""
    out = np.zeros((1 << (depth + 1), 1 << depth), dtype=bool)
    for r in rects:
        K = r.x if side is None else (r.x.left() if side == "l" else r.x.right())
        out[cell_slice(K, depth + 1), cell_slice(r.y, depth)] = True
    return out


def _inside(region: np.ndarray, rect: DyadicRectangle, depth: int) -> bool:
    return bool(region[cell_slice(rect.x, depth + 1), cell_slice(rect.y, depth)].all())


def _touches(region: np.ndarray, rect: DyadicRectangle, depth: int) -> bool:
    return bool(region[cell_slice(rect.x, depth + 1), cell_slice(rect.y, depth)].any())


def _min_b_term(stages, fams, eps_fn, i, alpha, idx) -> float:
    """min over j <= i of eps_j ||b_j||^2, with a lower-bound proxy for j = i."""
    vals = [eps_fn(s.i) * float(sum((r.measure for r in fams[s.index]), Fraction(0)))
            for s in stages if fams[s.index]]
    vals.append(eps_fn(i) * 0.5 * float(1 - alpha) * float(idx.measure))
    return min(vals)


def _run_induction(depth: int, n: int, weights: _WeightSource, eps, mode: str,
                   label: str) -> BlockSystem:
    if mode not in (STRICT, BEST_EFFORT):
        raise ValueError("mode must be 'strict' or 'best-effort'")
    if n > depth:
        raise DepthExhausted(f"target depth {n} exceeds ambient depth {depth}",
                             {"n": n, "depth": depth})
    eps_fn = make_eps(eps)
    N = depth
    fams: dict[DyadicRectangle, list[DyadicRectangle]] = {}
    stages: list[StageInfo] = []
    one_minus_alpha = Fraction(1)
    total = dimension(n)
    for i in range(1, total + 1):
        idx = order_rect(i, n)
        I, J = idx.x, idx.y
        delta = delta_of(i, n) if n > 0 else Fraction(0)
        one_minus_alpha *= (1 - delta) ** 2
        alpha = 1 - one_minus_alpha
        if i == 1:
            st = StageInfo(i, idx, "start", delta, eps_fn(i), alpha)
            st.y_frequencies = [ROOT]
            fams[idx] = [idx]
        elif I.is_root():
            st, chosen = _case_one(idx, i, delta, alpha, fams, stages, weights, eps_fn, N, mode)
            fams[idx] = chosen
        else:
            st, chosen = _case_two(idx, i, delta, alpha, fams, stages, weights, eps_fn, N, n, mode)
            fams[idx] = chosen
        stages.append(st)
        coef = np.zeros(dimension(N))
        for r in fams[idx]:
            coef[order_index(r) - 1] = 1.0
        weights.add_block(coef, float(sum((r.measure for r in fams[idx]), Fraction(0))))
    eps_list = [s.eps for s in stages]
    return BlockSystem(N, fams, n, stages, eps_list, mode,
                       {"source": label, "mode": mode,
                        "all_met": all(s.met for s in stages)})


def _case_one(idx, i, delta, alpha, fams, stages, weights, eps_fn, N, mode):
    J = idx.y
    st = StageInfo(i, idx, "1", delta, eps_fn(i), alpha)
    parent = fams[DyadicRectangle(ROOT, J.predecessor())]
    if any(not r.x.is_root() for r in parent):
        raise StageFailed(i, "parent family has a member with x-side other than [0,1)",
                          {"parent": [str(r) for r in parent]})
    if not parent:
        st.met = False
        st.notes.append("empty parent family")
        if mode == STRICT:
            raise StageFailed(i, "empty parent family")
        return st, []
    beta = min(r.measure for r in parent)
    tau = (2.0 ** -i) / (4 * (i - 1)) * float(beta) * _min_b_term(stages, fams, eps_fn, i, alpha, idx)
    st.beta, st.tau = beta, tau
    ctx = weights.context(i, beta)
    left = J.is_left_child()
    chosen = []
    for r in parent:
        L0 = r.y
        cov = comb_cover(r, ctx, tau, delta, 1, N - L0.level, axis="Y")
        st.covers.append({"K0": str(ROOT), "L0": str(L0), **cov.to_json()})
        if not cov.met:
            st.met = False
            if mode == STRICT:
                raise StageFailed(i, f"cover of {r} unmet", cov.to_json())
        half = L0.left() if left else L0.right()
        chosen.extend(m for m in cov.members if half.contains(m.y))
    st.y_frequencies = sorted({m.y for m in chosen}, key=lambda L: (L.level, L.position))
    return st, chosen


def _case_two(idx, i, delta, alpha, fams, stages, weights, eps_fn, N, n, mode):
    I, J = idx.x, idx.y
    case = "2a" if J.is_root() else "2b"
    st = StageInfo(i, idx, case, delta, eps_fn(i), alpha)
    # Case-1 families keep the full x-side; the frequency sets below rely on it
    wide = [r for r in fams[DyadicRectangle(ROOT, J)] if not r.x.is_root()]
    if wide:
        raise StageFailed(i, f"family of [0,1) x {J} has members with x-side below [0,1)",
                          {"members": [str(r) for r in wide[:10]]})
    Y = sorted({r.y for r in fams[DyadicRectangle(ROOT, J)]}, key=lambda L: (L.level, L.position))
    st.y_frequencies = Y
    m, nn = I.level, J.level

    # previous indices with coarser-or-equal sides and another shape
    prev_shapes = [(a, b) for a in range(m + 1) for b in range(nn + 1) if (a, b) != (m, nn)]
    eta_min_level = 0
    for a, b in prev_shapes:
        for pa in range(1 << a):
            for pb in range(1 << b):
                fam = fams[DyadicRectangle.of(a, pa, b, pb)]
                if fam:
                    eta_min_level = max(eta_min_level, max(r.x.level for r in fam))
    eta_level = eta_min_level + 1
    if eta_level > N:
        st.eta_clamped = True
        st.met = False
        st.notes.append(f"eta grid 2^-{eta_level} finer than depth {N}")
        if mode == STRICT:
            raise StageFailed(i, f"eta grid level {eta_level} exceeds depth {N}")
        eta_level = N
    st.eta_level = eta_level

    # strips D_a x {J0}; only J0 containing J carry information about L0
    strips = sorted({(a, b) for a, b in prev_shapes if a > 0})
    w_cells: dict = {}
    for L0 in Y:
        W = np.ones(1 << N, dtype=bool)
        for a, b in strips:
            J0 = J.ancestor(b)
            ys = sorted({r.y for r in fams[DyadicRectangle(ROOT, J0)]},
                        key=lambda L: (L.level, L.position))
            hits = [L for L in ys if L.intersects(L0)]
            if len(hits) != 1 or not hits[0].contains(L0):
                if mode == STRICT or hits:
                    raise StageFailed(i, f"no unique L0' above {L0} in strip ({a},{J0})",
                                      {"hits": [str(h) for h in hits]})
                W[:] = False
                continue
            L0p = hits[0]
            WS = np.zeros(1 << N, dtype=bool)
            for pa in range(1 << a):
                prev = stages[order_index(DyadicRectangle(DyadicInterval(a, pa), J0)) - 1]
                xm = prev.x_masks.get(L0p) if prev.x_masks is not None else None
                if xm is not None:
                    WS |= xm
            W &= WS
        w_cells[L0] = W

    grid = []
    step = 1 << (N - eta_level)
    for L0 in Y:
        W = w_cells[L0]
        ok = W.reshape(-1, step).all(axis=1)
        grid.append((L0, [DyadicInterval(eta_level, int(p)) for p in np.flatnonzero(ok)]))
        st.w_measure[L0] = Fraction(int(W.sum()), W.size)
    sizes = [Fraction(1, 1 << eta_level) * L0.measure for L0, ks in grid if ks]
    if not sizes:
        st.met = False
        st.notes.append("empty fine covering")
        if mode == STRICT:
            raise StageFailed(i, "empty fine covering of W")
        st.x_masks = {L0: np.zeros(1 << N, dtype=bool) for L0 in Y}
        return st, []
    beta = min(sizes)
    tau = (2.0 ** -i) / (4 * (i - 1)) * float(beta) * _min_b_term(stages, fams, eps_fn, i, alpha, idx)
    st.beta, st.tau = beta, tau
    ctx = weights.context(i, beta)

    if case == "2a":
        side = "l" if I.is_left_child() else "r"
        region = _region(fams[DyadicRectangle(I.predecessor(), J)], N, side)
    else:
        region = _region(fams[DyadicRectangle(I, J.predecessor())], N)

    chosen = []
    x_masks = {}
    for L0, ks in grid:
        xm = np.zeros(1 << N, dtype=bool)
        for K0 in ks:
            r = DyadicRectangle(K0, L0)
            cov = comb_cover(r, ctx, tau, delta, 1, N - K0.level, axis="X")
            st.covers.append({"K0": str(K0), "L0": str(L0), **cov.to_json()})
            if not cov.met:
                relevant = _touches(region, r, N)
                if relevant:
                    st.met = False
                    if mode == STRICT:
                        raise StageFailed(i, f"cover of {r} unmet", cov.to_json())
            for mem in cov.members:
                xm[cell_slice(mem.x, N)] = True
                if _inside(region, mem, N):
                    chosen.append(mem)
        x_masks[L0] = xm
    st.x_masks = x_masks
    return st, chosen


def quasi_diagonalize(T: HaarOperator, n: int, eps=None, mode: str = BEST_EFFORT,
                      check_normalization: bool = True, norm_budget: int | None = None) -> BlockSystem:
    """Build blocks b_{I x J}, I x J in R_n, that almost diagonalize T.

    ``eps`` is None (eps_i = 2^(-i-2)), a number, a sequence indexed from 1,
    a mapping or a callable.  The operator must satisfy ||T|| <= 1 on H^1;
    only a lower estimate can be measured, so the check can refute but
    never confirm the normalization.
    """
    diag = {}
    if check_normalization:
        est = op_norm_lower(T, "H1", budget=norm_budget)
        diag["h1_lower_bound"] = est.value
        if est.value > 1 + 1e-9:
            raise NormalizationViolated(f"measured ||T|| >= {est.value:.6g} > 1",
                                        {"lower_bound": est.value, "method": est.method})
    sys = _run_induction(T.depth, n, _OperatorWeights(T), eps, mode, "quasidiag")
    sys.metadata.update(diag)
    sys.metadata["normalization"] = ("refuted" if diag.get("h1_lower_bound", 0) > 1 + 1e-9
                                     else "not refuted" if diag else "unchecked")
    return sys


# --------------------------------------------------------------------------
# verification

def _pair_bounds(sys: BlockBasis, outer, inner, lo_factor: Fraction, scale: int):
    """Worst low/high ratios of scale*|R cap E*_inner| / |R| over R in E_outer."""
    lo, hi = None, None
    for R in sys[outer]:
        q = scale * sys.intersection_measure(R, inner) / R.measure
        lo = q if lo is None else min(lo, q)
        hi = q if hi is None else max(hi, q)
    return lo, hi


def verify_block_system(sys: BlockBasis, T: HaarOperator | None = None) -> dict:
    """Exact structural checks plus (given T) the post-hoc weight bounds."""
    report: dict = {"disjoint": sys.is_disjoint()}
    n = sys.n
    one_minus_alpha = {}
    acc = Fraction(1)
    for idx in sys.indices():
        i = order_index(idx)
        acc *= (1 - delta_of(i, n)) ** 2 if n > 0 else 1
        one_minus_alpha[idx] = acc

    # measure comparability
    worst_lo, worst_hi, bad_measure = Fraction(10), Fraction(0), []
    for idx in sys.indices():
        q = sys.measure(idx) / idx.measure
        worst_lo, worst_hi = min(worst_lo, q), max(worst_hi, q)
        if not Fraction(1, 2) <= q <= 1:
            bad_measure.append({"index": str(idx), "ratio": str(q)})
    report["measure"] = {"min_ratio": str(worst_lo), "max_ratio": str(worst_hi),
                         "violations": bad_measure, "ok": not bad_measure}

    # parent to child halving
    bad_child = []
    worst = Fraction(1)
    for idx in sys.indices():
        for parent in ([DyadicRectangle(idx.x.predecessor(), idx.y)] if not idx.x.is_root() else []) + \
                      ([DyadicRectangle(idx.x, idx.y.predecessor())] if not idx.y.is_root() else []):
            if parent not in sys:
                continue
            low = one_minus_alpha[idx] / 2
            for R in sys[parent]:
                q = sys.intersection_measure(R, idx) / R.measure
                worst = min(worst, q / low if low else worst)
                if not low <= q <= Fraction(1, 2):
                    bad_child.append({"parent": str(parent), "child": str(idx),
                                      "member": str(R), "ratio": str(q)})
    report["parent_child"] = {"violations": bad_child[:50], "count": len(bad_child),
                              "ok": not bad_child}

    # local product structure along nested pairs
    bad_local, lo_all, hi_all = [], None, None
    for outer in sys.indices():
        for inner in sys.indices():
            if not outer.contains(inner):
                continue
            di = inner.x.level - outer.x.level
            dj = inner.y.level - outer.y.level
            lo, hi = _pair_bounds(sys, outer, inner, Fraction(1, 2), 1 << (di + dj))
            if lo is None:
                continue
            lo_all = lo if lo_all is None else min(lo_all, lo)
            hi_all = hi if hi_all is None else max(hi_all, hi)
            if lo < Fraction(1, 2) or hi > 1:
                bad_local.append({"outer": str(outer), "inner": str(inner),
                                  "min": str(lo), "max": str(hi)})
    report["local_product"] = {"min": None if lo_all is None else str(lo_all),
                               "max": None if hi_all is None else str(hi_all),
                               "violations": bad_local[:50], "count": len(bad_local),
                               "ok": not bad_local}

    if T is not None and isinstance(sys, BlockSystem):
        report["weights"] = verify_stage_weights(sys, T)
    report["ok"] = (report["disjoint"] and report["measure"]["ok"] and
                    report["parent_child"]["ok"] and report["local_product"]["ok"] and
                    report.get("weights", {}).get("ok", True))
    return report


def verify_stage_weights(sys: BlockSystem, T: HaarOperator) -> dict:
    """Recompute T b_j, T* b_j from scratch and check the per-stage weight bounds."""
    idxs = sys.indices()
    B = sys.matrix().toarray()
    TB = T.matvec(B)
    TsB = T.adjoint_matvec(B)
    meas = sys.norms_sq()
    lay = layout(sys.depth)
    worst_tau, worst_sum = 0.0, 0.0
    bad = []
    for c, idx in enumerate(idxs):
        st = sys.stage(idx)
        if c == 0 or st.tau is None or not sys[idx]:
            continue
        m = c
        direct = np.abs(TsB[:, :c]).sum(axis=1) / m
        scaled = np.zeros(lay.dim)
        for j in range(c):
            if meas[j] > 0:
                scaled += np.abs(TB[:, j]) / meas[j]
        wcoef = direct + float(st.beta) * scaled / m
        summed = np.abs(TsB[:, :c]).sum(axis=1) + np.abs(TB[:, :c]).sum(axis=1)
        rows = np.array([order_index(r) - 1 for r in sys[idx]])
        ratio_tau = wcoef[rows] / st.tau
        ratio_sum = summed[rows] / (m * st.tau / float(st.beta))
        worst_tau = max(worst_tau, float(ratio_tau.max()))
        worst_sum = max(worst_sum, float(ratio_sum.max()))
        if (ratio_tau > 1 + 1e-9).any() or (ratio_sum > 1 + 1e-9).any():
            bad.append({"index": str(idx), "tau_ratio": float(ratio_tau.max()),
                        "sum_ratio": float(ratio_sum.max())})
    return {"worst_tau_ratio": worst_tau, "worst_summed_ratio": worst_sum,
            "violations": bad, "ok": not bad}


def pairing_matrix(T: HaarOperator, sys: BlockBasis) -> np.ndarray:
    """M[i, j] = <T b_j, b_i> over the system's indices."""
    B = sys.matrix()
    TB = T.matvec(B.toarray()) if not T.is_sparse else (T.matrix @ B).toarray()
    area = layout(sys.depth).area
    return np.asarray(B.T @ (area[:, None] * TB))


def verify_almost_diagonal(T: HaarOperator, sys: BlockBasis, eps=None) -> dict:
    """Off-diagonal sums sum_{j != i} |<T b_j, b_i>| against eps_i ||b_i||^2."""
    if eps is None and isinstance(sys, BlockSystem):
        eps_vals = np.array(sys.eps)
    else:
        fn = make_eps(eps)
        eps_vals = np.array([fn(order_index(i)) for i in sys.indices()])
    M = pairing_matrix(T, sys)
    off = np.abs(M).sum(axis=1) - np.abs(np.diag(M))
    nsq = sys.norms_sq()
    bound = eps_vals * nsq
    sharp = bound * np.ldexp(1.0, -np.array([order_index(i) for i in sys.indices()]))
    return {
        "indices": [str(i) for i in sys.indices()],
        "off_diagonal": off.tolist(),
        "diagonal": np.diag(M).tolist(),
        "norms_sq": nsq.tolist(),
        "bound": bound.tolist(),
        "sharp_bound": sharp.tolist(),
        "pass": (off <= bound).tolist(),
        "pass_sharp": (off <= sharp).tolist(),
        "all_pass": bool((off <= bound).all()),
        "matrix": M,
    }


def embedding_S(sys: BlockBasis) -> np.ndarray:
    """Columns are the coefficient vectors of b_{I x J}, ordered by index."""
    sys.require_nonzero()
    return embedding_matrix(sys)


def block_Q(sys: BlockBasis) -> HaarOperator:
    return block_projection(sys)


def condition_proxy(sys: BlockBasis, budget: int = 64, seed: int = 0) -> dict:
    """Lower estimates for ||S|| and ||S^-1|| in H^1 from random coefficient vectors."""
    from .haar import h1_norms
    S = embedding_matrix(sys)
    rng = np.random.default_rng(seed)
    m = S.shape[1]
    coefs = rng.standard_normal((budget, m))
    coefs = np.vstack([np.eye(m), coefs])
    src = h1_norms(coefs, sys.n)
    img = h1_norms(np.asarray((S @ coefs.T).T), sys.depth)
    ok = (src > 0) & (img > 0)
    up = float((img[ok] / src[ok]).max())
    down = float((src[ok] / img[ok]).max())
    return {"S_lower": up, "S_inv_lower": down, "product_lower": up * down,
            "kind": "lower-bound"}


# --------------------------------------------------------------------------
# annihilation variant

def _orthonormal_basis(F: Sequence[HaarVector], depth: int) -> np.ndarray:
    """Gram-Schmidt in the pairing inner product; rows are coefficient vectors."""
    area = layout(depth).area
    out = []
    for f in F:
        v = np.array(f.coef, dtype=np.float64)
        for u in out:
            v = v - np.dot(v * u, area) * u
        nrm = math.sqrt(max(np.dot(v * v, area), 0.0))
        if nrm > 1e-12:
            out.append(v / nrm)
    return np.array(out) if out else np.zeros((0, dimension(depth)))


def annihilating_system(F: Sequence[HaarVector], n: int, depth: int, eps=None,
                        mode: str = BEST_EFFORT) -> BlockSystem:
    """Run the induction against a fixed subspace instead of an operator.

    The weight context places an orthonormal basis of span(F) in both roles,
    so the blocks are steered away from the frequencies of F.  Reports carry
    sum_b |<f, b>| / ||b||_2 per basis vector and a BMO estimate of Q f.
    """
    basis = _orthonormal_basis(F, depth)
    sys = _run_induction(depth, n, _SubspaceWeights(depth, basis), eps, mode, "annihilation")
    B = sys.matrix().toarray()
    area = layout(depth).area
    nrm = np.sqrt(np.maximum(sys.norms_sq(), 1e-300))
    ratios = []
    for f in basis:
        pairs = (B.T @ (area * f))
        ratios.append(float((np.abs(pairs) / nrm)[sys.norms_sq() > 0].sum()))
    sys.metadata["annihilation_ratios"] = ratios
    sys.metadata["basis_dim"] = int(len(basis))
    if len(basis) and all(len(fam) for fam in sys.families.values()):
        Q = block_projection(sys)
        est = []
        for f in basis:
            fv = HaarVector(depth, f)
            qf = Q.apply(fv)
            est.append({"Qf_bmo_lower": bmo_norm_lower(qf, budget=8).value,
                        "f_bmo_lower": bmo_norm_lower(fv, budget=8).value,
                        "kind": "estimate"})
        sys.metadata["projection_estimates"] = est
    return sys
