"""Acceptance criteria 1-11; each prints one PASS/FAIL line with its runtime."""
import contextlib
import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

import oracles
from dyadic_factor.combinatorics import (
    INSIDE, Coloring, FrequencyWeightContext, comb_cover, frequency_weight, lemma_level_bound,
    ramsey_extract,
)
from dyadic_factor.condensation import bitree_verify, condense_2d, unconditionality_factor
from dyadic_factor.dyadic import (
    ROOT, DyadicInterval, DyadicRectangle, carleson_constant, intervals_upto, layout,
    order_index, order_rect, rectangles_upto,
)
from dyadic_factor.errors import RamseyMassInsufficient
from dyadic_factor.factor import factor_identity, plan_dimensions
from dyadic_factor.haar import (
    HaarVector, bmo_norm_exact, bmo_norm_lower, h1_norm, haar_multiplier, identity,
    rademacher_block, random_contraction, zero,
)
from dyadic_factor.quasidiag import (
    BEST_EFFORT, STRICT, block_Q, quasi_diagonalize, verify_almost_diagonal,
    verify_block_system, verify_stage_weights,
)


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def run(num, title, budget):
        t0 = time.perf_counter()
        status = "FAIL"
        try:
            yield
            status = "PASS"
        finally:
            dt = time.perf_counter() - t0
            if status == "PASS" and dt > budget:
                status = "FAIL"
            with capsys.disabled():
                print(f"\n[criterion {num:2d}] {status} {title} ({dt:.1f}s, budget {budget}s)")
        assert dt <= budget, f"criterion {num} took {dt:.1f}s > {budget}s"
    return run


# ---------------------------------------------------------------------------

def test_c01_ordering(criterion):
    with criterion(1, "ordering bijection, band property, restricted shape comparison", 30):
        for n in range(7):
            rects = rectangles_upto(n)
            idx = sorted(order_index(r) for r in rects)
            assert idx == list(range(1, (2 ** (n + 1) - 1) ** 2 + 1))
            assert [order_rect(i, n) for i in idx] == sorted(rects, key=order_index)
        rects = rectangles_upto(6)
        for r in rects:
            k = max(r.x.level, r.y.level)  # min side 2^-k
            assert (2 ** k - 1) ** 2 < order_index(r) <= (2 ** (k + 1) - 1) ** 2
        # the inequality depends on shapes only: group by shape and check every
        # shape pair that has at least one ordered pair R0 before R1
        lo, hi = {}, {}
        for r in rects:
            s = (r.x.level, r.y.level)
            o = order_index(r)
            lo[s], hi[s] = min(lo.get(s, o), o), max(hi.get(s, o), o)
        checked = 0
        for s0, s1 in itertools.product(lo, lo):
            if s0 == s1 or s0[0] > s1[0] or s0[1] > s1[1] or lo[s0] >= hi[s1]:
                continue
            m0 = Fraction(1, 2 ** (s0[0] + s0[1]))
            m1 = Fraction(1, 2 ** (s1[0] + s1[1]))
            assert 4 * m1 <= m0 / Fraction(1, 2 ** max(s1)), (s0, s1)
            checked += 1
        assert checked > 0


def test_c02_carleson(criterion):
    with criterion(2, "Carleson constant of D^n and subadditivity", 10):
        for n in range(13):
            assert carleson_constant(intervals_upto(n)) == n + 1
        rng = np.random.default_rng(2)
        pool = intervals_upto(6)
        for _ in range(200):
            a = [pool[i] for i in rng.choice(len(pool), rng.integers(1, 30), replace=False)]
            b = [pool[i] for i in rng.choice(len(pool), rng.integers(1, 30), replace=False)]
            ca, cb = carleson_constant(a), carleson_constant(b)
            assert ca == oracles.carleson(a) and cb == oracles.carleson(b)
            assert carleson_constant(set(a) | set(b)) <= ca + cb


def test_c03_ramsey(criterion):
    with criterion(3, "Ramsey extraction on 100 random colorings at n = 8", 120):
        n = 8
        for seed in range(100):
            c = Coloring.random(n, seed)
            res = ramsey_extract(c, 1)
            want = res.color == INSIDE
            for I in res.A:
                for J in res.B:
                    assert (DyadicRectangle(I, J) in c) == want
            assert oracles.carleson(res.A) == res.carleson_A >= 1
            assert oracles.carleson(res.B) == res.carleson_B >= Fraction(9, 8)
            for t in res.trace:
                assert Fraction(t["carleson_G"]) >= Fraction(n + 1, 2 ** t["m"])
        res = ramsey_extract(Coloring.everything(4), 1)
        assert res.color == INSIDE
        assert set(res.A) == set(intervals_upto(1)) and res.carleson_A == 2
        assert set(res.B) == set(intervals_upto(4)) and res.carleson_B == 5


def _random_vector(rng, depth, nnz):
    rects = rectangles_upto(depth)
    pick = rng.choice(len(rects), nnz, replace=False)
    return HaarVector.from_dict(depth, {rects[i]: float(rng.standard_normal()) for i in pick})


def test_c04_norms(criterion):
    with criterion(4, "H1 and BMO norms against closed forms and oracles", 180):
        for R in rectangles_upto(3):
            f = HaarVector.atom(4, R)
            assert h1_norm(f) == pytest.approx(float(R.measure), rel=1e-14)
            assert bmo_norm_exact(f) == pytest.approx(1.0, rel=1e-14)
        for k in range(1, 5):
            for L0 in (ROOT, DyadicInterval(1, 0), DyadicInterval(2, 3)):
                f = rademacher_block(ROOT, L0, 0, k, 4)
                assert h1_norm(f) == pytest.approx(math.sqrt(k) * float(L0.measure), rel=1e-12)
                assert bmo_norm_exact(f) == pytest.approx(math.sqrt(k), rel=1e-12)
        rng = np.random.default_rng(4)
        for _ in range(5):
            f = _random_vector(rng, 4, 60)
            mc = oracles.monte_carlo_h1(f.to_dict(), 4, 10 ** 6, seed=int(rng.integers(1 << 30)))
            assert abs(h1_norm(f) - mc) <= 0.01 * mc
        for _ in range(100):
            f = _random_vector(rng, 3, int(rng.integers(1, 10)))
            assert bmo_norm_lower(f, budget=16).value <= bmo_norm_exact(f) * (1 + 1e-12)


def _candidates(K0L0, axis, levels, depth):
    """Sub-rectangles a cover may use: scanned side split, other side intact."""
    out = []
    for k in levels:
        if axis == "X" and K0L0.x.level + k <= depth:
            out += [DyadicRectangle(K, K0L0.y) for K in K0L0.x.descendants(k)]
        if axis == "Y" and K0L0.y.level + k <= depth:
            out += [DyadicRectangle(K0L0.x, L) for L in K0L0.y.descendants(k)]
    return out


def _concentrated(rng, depth, pool, nnz):
    pick = rng.choice(len(pool), min(nnz, len(pool)), replace=False)
    return HaarVector.from_dict(depth, {pool[i]: float(rng.standard_normal()) for i in pick})


def _level_block(rng, K0L0, axis, r, depth, cap=18):
    """Random-sign sum filling consecutive scanned levels from r (support <= cap)."""
    levels, size = [], 0
    for k in range(r, r + 6):
        if size + (1 << k) > cap:
            break
        levels.append(k)
        size += 1 << k
    m = int(rng.integers(1, len(levels) + 1))
    pool = _candidates(K0L0, axis, levels[:m], depth)
    return HaarVector.from_dict(depth, {R: float(rng.choice([-1, 1]) * rng.uniform(0.5, 1))
                                        for R in pool})


def _lemma_instance(rng, axis):
    """Random data meeting the hypotheses, concentrated where the scan looks."""
    depth = 6
    lx, ly = (int(v) for v in rng.integers(0, 2, 2))
    K0L0 = DyadicRectangle(DyadicInterval(lx, int(rng.integers(0, 1 << lx))),
                           DyadicInterval(ly, int(rng.integers(0, 1 << ly))))
    # bias towards the tight end: small tau means the bound is near 12
    count = int(rng.choice([1, 1, 2, 3]))
    delta = Fraction(1, int(rng.choice([2, 2, 2, 4])))
    r = int(rng.integers(0, 3))
    target = 12 - r - int(rng.integers(0, 3))  # i^2 / (delta tau)^2 lands near target
    tau = count / (float(delta) * math.sqrt(target + 0.5))
    pool = _candidates(K0L0, axis, range(r, r + 4), depth)
    share_x = rng.dirichlet(np.ones(count))
    share_y = rng.dirichlet(np.ones(count))
    xs, ys = [], []
    for j in range(count):
        x = _level_block(rng, K0L0, axis, r, depth)
        xs.append(x * (share_x[j] / bmo_norm_exact(x)))
        y = _concentrated(rng, depth, pool, int(rng.integers(1, 6)))
        ys.append(y * (share_y[j] * float(K0L0.measure) / h1_norm(y)))
    ctx = FrequencyWeightContext(depth, xs, ys)
    bound = lemma_level_bound(count, tau, delta) + r
    return K0L0, ctx, tau, delta, r, bound, xs, ys


def test_c05_covering_lemma(criterion):
    with criterion(5, "almost cover within the level bound on 50 instances", 120):
        rng = np.random.default_rng(5)
        partial = 0
        for trial in range(50):
            axis = "X" if trial % 2 == 0 else "Y"
            K0L0, ctx, tau, delta, r, bound, xs, ys = _lemma_instance(rng, axis)
            assert bound <= 12
            assert sum(bmo_norm_exact(x) for x in xs) <= 1 + 1e-9
            assert sum(h1_norm(y) for y in ys) <= float(K0L0.measure) * (1 + 1e-9)
            res = comb_cover(K0L0, ctx, tau, delta, r, bound, axis)
            assert res.met, (trial, res.to_json())
            assert r <= res.level <= bound
            assert res.fraction >= 1 - delta
            partial += res.fraction < 1 or res.level > r
            assert len(set(res.members)) == len(res.members)
            for R in res.members:
                assert K0L0.contains(R)
                if axis == "X":
                    assert R.y == K0L0.y
                else:
                    assert R.x == K0L0.x
                # weight recomputed directly from the pairings
                w = sum(abs(v[R]) + abs(u[R]) for v, u in zip(xs, ys)) * float(R.measure)
                assert w == pytest.approx(frequency_weight(ctx, R), rel=1e-12, abs=1e-15)
                assert w <= tau * float(R.measure) * (1 + 1e-12)
        assert partial >= 10  # the weight bound must actually exclude rectangles


def test_c06_condensation(criterion):
    with criterion(6, "two-parameter condensation of D^4 x D^4", 30):
        c = condense_2d(intervals_upto(4), intervals_upto(4), 1)
        PE = (c.P @ c.E).toarray()
        assert np.abs(PE - np.eye(PE.shape[0])).max() <= 1e-12
        bt = bitree_verify(c.system)
        assert math.isfinite(bt["C2"]) and not bt["violations"]
        for one in (c.first, c.second):
            for I, fam in one.families.items():
                if I.level == 0:
                    continue
                parent = one.families[I.predecessor()]
                half = (lambda K: K.left()) if I.is_left_child() else (lambda K: K.right())
                assert all(any(half(P).contains(K) for P in parent) for K in fam)
        C1 = unconditionality_factor(c.system, trials=200)
        assert 1 <= C1 < math.inf


@pytest.fixture(scope="module")
def identity_system():
    return quasi_diagonalize(identity(4), 1, mode=STRICT)


def test_c07_identity_quasidiag(criterion):
    with criterion(7, "quasi-diagonalization of Id at N = 4, strict", 60):
        sysb = quasi_diagonalize(identity(4), 1, mode=STRICT)
        assert all(st.met for st in sysb.stages)
        idxs = sysb.indices()
        # exact pairings <b_j, b_i> = |E_i* cap E_j*| for disjoint members
        for a, b in itertools.permutations(idxs, 2):
            assert not set(sysb[a]) & set(sysb[b])
        M = verify_almost_diagonal(identity(4), sysb)["matrix"]
        assert not (M - np.diag(np.diag(M))).any()
        for idx in idxs:
            q = sum((R.measure for R in sysb[idx]), Fraction(0))
            assert idx.measure / 2 <= q <= idx.measure
        rep = verify_block_system(sysb, identity(4))
        assert rep["ok"] and rep["parent_child"]["ok"] and rep["local_product"]["ok"]


def _direct_pairings(T, sysb):
    A = T.matrix.tocsc()
    idxs = sysb.indices()
    TB = []
    for J in idxs:
        col = np.zeros(A.shape[0])
        for S in sysb[J]:
            c = order_index(S) - 1
            lo, hi = A.indptr[c], A.indptr[c + 1]
            col[A.indices[lo:hi]] += A.data[lo:hi]
        TB.append(col)
    M = np.zeros((len(idxs), len(idxs)))
    for a, I in enumerate(idxs):
        rows = [(order_index(R) - 1, float(R.measure)) for R in sysb[I]]
        for b in range(len(idxs)):
            M[a, b] = sum(TB[b][k] * w for k, w in rows)
    return M


def test_c08_generic_quasidiag(criterion):
    with criterion(8, "quasi-diagonalization of 10 random contractions at N = 6", 600):
        for seed in range(10):
            T = random_contraction(6, seed)
            sysb = quasi_diagonalize(T, 1, mode=BEST_EFFORT)
            rep = verify_almost_diagonal(T, sysb)
            M = _direct_pairings(T, sysb)
            assert np.abs(rep["matrix"] - M).max() <= 1e-10
            off = np.abs(M).sum(axis=1) - np.abs(np.diag(M))
            np.testing.assert_allclose(rep["off_diagonal"], off, atol=1e-10)
            w = verify_stage_weights(sysb, T)
            assert w["ok"], (seed, w)


def test_c09_projection(criterion, identity_system):
    with criterion(9, "block projection on the identity system", 30):
        Q = block_Q(identity_system).toarray()
        assert np.abs(Q @ Q - Q).max() <= 1e-10
        D = np.diag(layout(4).area)
        assert np.abs(D @ Q - Q.T @ D).max() <= 1e-10
        assert np.linalg.matrix_rank(Q) == len(identity_system)


def _check_factor(T, H_expected):
    res = factor_identity(T, 1, n1_work=7)
    rep = res.report
    assert res.H == H_expected
    H = T if H_expected == "T" else T.identity_minus()
    # Eq. 3.3 on the selected product, exact arithmetic on the single-member blocks
    for I in res.ramsey.A:
        for J in res.ramsey.B:
            R = DyadicRectangle(I, J)
            (member,) = res.system[R]
            val = Fraction(H.entry(member, member)) * member.measure
            assert abs(val) >= member.measure / 2
    assert set(res.ramsey.A) == set(intervals_upto(3))
    assert set(res.ramsey.B) == set(intervals_upto(7))
    HE = H.matrix @ res.E
    assert np.abs(res.P @ HE - np.eye(res.P.shape[0])).max() <= 1e-8
    assert rep.residual <= 1e-8


def test_c10_factorization(criterion):
    with criterion(10, "factorization through Id, 0 and ten {0,1} multipliers", 900):
        _check_factor(identity(7), "T")
        _check_factor(zero(7), "Id-T")
        rects = rectangles_upto(7)
        for seed in range(10):
            d = np.random.default_rng(seed).integers(0, 2, len(rects)).astype(float)
            T = haar_multiplier(7, d)
            try:
                res = factor_identity(T, 1, n1_work=7)
            except RamseyMassInsufficient as exc:
                diag = exc.diagnostics
                assert diag["required"] == 4
                # recompute the coloring from the multiplier values alone
                c = Coloring(7, [R for R, v in zip(rects, d) if v >= 0.5])
                for row in diag["n0_search"]:
                    again = ramsey_extract(c, row["n0"])
                    assert str(oracles.carleson(again.A)) == row["carleson_A"]
                    assert str(oracles.carleson(again.B)) == row["carleson_B"]
                    want = again.color == INSIDE
                    assert all((DyadicRectangle(I, J) in c) == want
                               for I in again.A for J in again.B)
                assert min(Fraction(diag["carleson_A"]), Fraction(diag["carleson_B"])) < 4
                continue
            H = T if res.H == "T" else T.identity_minus()
            assert np.abs(res.P @ (H.matrix @ res.E) - np.eye(res.P.shape[0])).max() <= 1e-8


def test_c11_dimension_plan(criterion):
    with criterion(11, "exact dimension plan", 1):
        p = plan_dimensions(1, 1)
        assert p.N2 == 4 and p.N1 == 4 * 2 ** 256
        p = plan_dimensions(2, 1)
        assert p.N2 == 32 and (p.N1_coef, p.N1_exp) == (32, 4 ** 32)
        assert p.N1_str == f"32*2^{4 ** 32}"
