import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from densegen import numkernel as nk
from densegen.errors import DimensionTooSmall, FiberMismatch, NoRealRoot, PoleAtZ, PositivityViolated
from densegen.generators import build_complex_pair
from densegen.upsilon import (
    BorderClass,
    BorderedMatrix,
    UpsilonPoint,
    classify,
    combine_points,
    fiber_perturb,
    is_S,
    join,
    realize_combine,
    same_fiber_factor,
    split,
    upsilon_of,
)

H = math.sqrt(2) / 2


def on_fiber(r, n, field, point, det_sign=None):
    """Random bordered matrix with Υ = point (X rescaled onto the fiber)."""
    while True:
        F = nk.random_invertible(r, n, field, 1e-2)
        if det_sign is not None and np.sign(nk.det(F).real) != det_sign:
            F[0] *= -1
        X = nk.random_matrix(r, n, 1, field).ravel()
        Y = nk.random_matrix(r, n, 1, field).ravel()
        a0 = Y @ nk.solve(F, X)
        if abs(a0) > 1e-2:
            return join(BorderedMatrix(F, X * (point[0] / a0), Y, point[1]))


def test_split_identity():
    B = split(np.eye(3))
    assert np.array_equal(B.F, np.eye(2))
    assert not B.X.any() and not B.Y.any() and B.eta == 1


def test_split_rejects_1x1():
    with pytest.raises(DimensionTooSmall):
        split(np.eye(1))


def test_roundtrip_exact(rng):
    G = rng.normal(size=(5, 5))
    assert np.array_equal(join(split(G)), G)


def test_complex_ladder_block_structure():
    C = build_complex_pair(3).A
    B = split(C)
    up = upsilon_of(B)
    assert up.a == pytest.approx(H) and up.eta == pytest.approx(-H)
    assert classify(B) == BorderClass.I_n


def test_upsilon_hand_example():
    B = BorderedMatrix(np.diag([2.0, 1.0]), np.array([1.0, 0]), np.array([3.0, 0]), 7.0)
    assert tuple(upsilon_of(B)) == pytest.approx((1.5, 7.0))
    S = join(BorderedMatrix(np.diag([2.0, 3.0]), np.zeros(2), np.zeros(2), 1.0))
    assert tuple(upsilon_of(S)) == (0.0, 1.0)


def test_classify_variants():
    assert classify(np.diag([2.0, 3.0, 1.0])) == BorderClass.S_n_plus
    assert classify(np.diag([-2.0, 3.0, 1.0])) == BorderClass.S_n_minus
    G = np.eye(3)
    G[2, 0] = 1.0
    assert classify(G) == BorderClass.BarOnly


def test_same_fiber_identity(rng):
    G = on_fiber(rng, 3, nk.REAL, (0.7, 2.0))
    L, R = same_fiber_factor(G, G)
    assert np.linalg.norm(L @ G @ R - G) <= 1e-10


def test_same_fiber_positive(rng):
    G1 = on_fiber(rng, 2, nk.REAL, (0.4, -1.0), det_sign=1)
    G2 = on_fiber(rng, 2, nk.REAL, (0.4, -1.0), det_sign=1)
    L, R = same_fiber_factor(G1, G2, positive=True)
    assert np.linalg.norm(L @ G1 @ R - G2) <= 1e-8 * np.linalg.norm(G2)
    assert classify(L) == classify(R) == BorderClass.S_n_plus


def test_same_fiber_complex(rng):
    pt = (1 + 2j, -0.5)
    G1, G2 = on_fiber(rng, 3, nk.COMPLEX, pt), on_fiber(rng, 3, nk.COMPLEX, pt)
    L, R = same_fiber_factor(G1, G2)
    assert np.linalg.norm(L @ G1 @ R - G2) <= 1e-8 * np.linalg.norm(G2)


def test_same_fiber_mismatch(rng):
    G1 = on_fiber(rng, 2, nk.REAL, (1.0, 1.0))
    G2 = on_fiber(rng, 2, nk.REAL, (2.0, 1.0))
    with pytest.raises(FiberMismatch):
        same_fiber_factor(G1, G2)


def test_combine_examples():
    assert tuple(combine_points((H, -H), (H, -H), 2)) == pytest.approx((0.9, 2.5))
    z = 0.3
    assert tuple(combine_points((0, 1), (H, -H), z)) == pytest.approx((z + H, z - H))
    assert tuple(combine_points((1, 1), (1, 1), 1)) == pytest.approx((2, 2))


def test_combine_guards():
    with pytest.raises(PoleAtZ):
        combine_points((1, 1), (1, 1), 0.0)
    with pytest.raises(PoleAtZ):
        combine_points((1, 1), (2, 1), -2.0)
    with pytest.raises(PositivityViolated):
        combine_points((1, 1), (2, 1), -1.0, real_positive=True)


def test_realize_closed_form():
    _, _, M = realize_combine((H, -H), (H, -H), 1.0, 1.0, 2)
    assert tuple(upsilon_of(split(M))) == pytest.approx((1 / 6, 1.5))


def test_realize_a_zero_collapse():
    M1, _, M = realize_combine((0.0, 1.0), (0.4, 0.2), 1.5, 2.0, 3)
    assert not split(M1).X.any()
    assert tuple(upsilon_of(split(M))) == pytest.approx((3.0 + 0.4, 3.0 + 0.2))


def test_realize_complex(rng):
    p = UpsilonPoint(complex(*rng.normal(size=2)), complex(*rng.normal(size=2)))
    q = UpsilonPoint(complex(*rng.normal(size=2)), complex(*rng.normal(size=2)))
    _, _, M = realize_combine(p, q, 2.0, -0.5, 3, nk.COMPLEX)
    want = combine_points(p, q, -1.0)
    assert upsilon_of(split(M)).distance(want) <= 1e-10 * (1 + abs(want.a) + abs(want.eta))


def test_fiber_perturb_zero_move(rng):
    G = on_fiber(rng, 3, nk.REAL, (0.5, 2.0))
    res = fiber_perturb(split(G), UpsilonPoint(0.5, 2.0), full_output=True)
    assert abs(res.t) <= 1e-12


def test_fiber_perturb_worked_example():
    V = np.array([1.0, 0.0], dtype=complex)
    B = BorderedMatrix(np.eye(2, dtype=complex), V, V.copy(), 0j)
    res = fiber_perturb(B, UpsilonPoint(2 + 0j, 5 + 0j), full_output=True)
    assert abs(abs(res.t) - (math.sqrt(2) - 1)) <= 1e-12
    assert res.bordered.eta == 5
    assert upsilon_of(res.bordered).distance((2, 5)) <= 1e-10


def test_fiber_perturb_skips_degenerate_direction():
    # F^-1 = [[0, 1], [1, -1]]: e1 has W^T F^-1 W = 0, so e2 is used
    F = np.array([[1.0, 1.0], [1.0, 0.0]])
    B = BorderedMatrix(F, np.array([1.0, 0.0]), np.array([0.0, 1.0]), 0.0)
    res = fiber_perturb(B, UpsilonPoint(-3.0, 0.0), full_output=True)
    assert np.array_equal(res.W, [0.0, 1.0])
    assert upsilon_of(res.bordered).a == pytest.approx(-3.0)


def test_fiber_perturb_no_real_root():
    # over the reals the two sign branches cover every real value, so only a
    # non-real target is out of reach
    B = BorderedMatrix(np.eye(1), np.array([1.0]), np.array([1.0]), 0.0)
    with pytest.raises(NoRealRoot):
        fiber_perturb(B, UpsilonPoint(complex(0, 1), 0.0))


def test_fiber_perturb_continuity(rng):
    B = split(on_fiber(rng, 3, nk.REAL, (1.0, 0.5)))
    ts = []
    for k in range(10):
        d = 0.5 ** k
        ts.append(abs(fiber_perturb(B, UpsilonPoint(1.0 + d, 0.5), full_output=True).t))
    assert all(b <= a for a, b in zip(ts, ts[1:]))
    K = max(t / 0.5 ** k for k, t in enumerate(ts))
    assert all(t <= K * 0.5 ** k + 1e-15 for k, t in enumerate(ts))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 6), field=st.sampled_from([nk.REAL, nk.COMPLEX]), seed=st.integers(0, 2 ** 32 - 1))
def test_factorization_soundness(n, field, seed):
    r = np.random.default_rng(seed)
    pt = (r.normal() + (1j * r.normal() if field == nk.COMPLEX else 0), r.normal())
    positive = field == nk.REAL
    G1 = on_fiber(r, n, field, pt, det_sign=1 if positive else None)
    G2 = on_fiber(r, n, field, pt, det_sign=1 if positive else None)
    L, R = same_fiber_factor(G1, G2, positive=positive)
    G = L @ G1 @ R
    assert np.linalg.norm(G - G2) <= 1e-8 * np.linalg.norm(G2)
    assert is_S(classify(L)) and is_S(classify(R))
    if positive:
        assert nk.det(L[:-1, :-1]) > 0 and nk.det(R[:-1, :-1]) > 0
    assert upsilon_of(split(G)).distance(upsilon_of(split(G1))) <= 1e-8 * (1 + abs(pt[0]) + abs(pt[1]))


@settings(max_examples=100, deadline=None)
@given(vals=st.lists(st.floats(-3, 3), min_size=6, max_size=6))
def test_combine_product_coherence(vals):
    a, e, b, d, r, s = vals
    z = r * s
    if min(abs(r), abs(s), abs(z + a * b), abs(z)) < 1e-6:
        return
    _, _, M = realize_combine((a, e), (b, d), r, s, 2)
    want = combine_points((a, e), (b, d), z)
    assert upsilon_of(split(M)).distance(want) <= 1e-10 * (1 + abs(want.a) + abs(want.eta))
