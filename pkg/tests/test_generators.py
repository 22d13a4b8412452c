import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from densegen import numkernel as nk
from densegen.errors import MissingCanonicalForm
from densegen.generators import (
    CASEN2_A,
    CASEN2_B,
    CASEN2_E,
    HALF_TURN_BLOCK,
    CanonicalForm,
    DensityScope,
    GeneratorPair,
    One,
    ReflectionBlock,
    UnitModulusScalar,
    build_complex_pair,
    build_pair,
    build_real_pair,
    casen3_pair,
    check_class,
    ladder_sigma,
    lift_complex,
    lift_real,
)
from densegen.words import Word, evaluate_word


def test_casen2_constants():
    p = build_real_pair(2)
    assert CASEN2_A == -(2 ** 0.6) and CASEN2_B == 8 / 3 and CASEN2_E == -(2 ** -0.8)
    assert np.array_equal(p.A, [[CASEN2_A, CASEN2_E], [1.0, 0.0]])
    assert np.array_equal(p.B, np.diag([1.0, CASEN2_B]))
    assert p.density_scope == DensityScope.PositiveDeterminant


def test_casen2_word_identity():
    C = evaluate_word(Word.parse("A B A^3 B A"), build_real_pair(2))
    assert np.linalg.norm(C - np.diag([4 / 9, 1.0])) <= 1e-12


def test_casen3_square():
    p = casen3_pair()
    assert np.linalg.norm(p.A @ p.A - np.diag([8 / 3, 1.0, 1.0])) <= 1e-12
    assert p.density_scope == DensityScope.FullMatrixAlgebra
    assert check_class(p.A, "R")


def test_one_dimensional_registry():
    p = build_real_pair(1)
    a, b = p.A[0, 0], p.B[0, 0]
    ratio = math.log(-a) / math.log(b)
    assert ratio < 0 and Fraction(ratio).limit_denominator(10 ** 4) != ratio
    assert p.density_scope == DensityScope.Unvalidated


def test_block_identities():
    assert np.allclose(HALF_TURN_BLOCK @ HALF_TURN_BLOCK, -np.eye(2))
    R = ReflectionBlock().matrix()
    assert np.allclose(R @ R, np.eye(2))


@pytest.mark.parametrize("n", range(4, 9))
def test_real_ladder(n):
    p = build_real_pair(n)
    low = p.lower
    sigma = ladder_sigma(p)
    assert np.linalg.norm(p.A @ p.A - nk.blockdiag(low.A, [[sigma]])) <= 1e-12 * (1 + np.linalg.norm(low.A))
    tau = -np.sign(nk.det(low.B))
    assert np.array_equal(p.B, nk.blockdiag(low.B, [[tau]]))
    assert check_class(p.A, "R")


def test_casen3_lift_corner():
    p = lift_real(casen3_pair())
    assert nk.det(casen3_pair().A) < 0
    assert np.linalg.norm(p.A @ p.A - nk.blockdiag(casen3_pair().A, [[-1.0]])) <= 1e-12


@pytest.mark.parametrize("n", range(3, 9))
def test_complex_ladder(n):
    p = build_complex_pair(n)
    low = p.lower
    assert np.linalg.norm(p.A @ p.A - nk.blockdiag(low.A, [[1.0]])) <= 1e-12 * (1 + np.linalg.norm(low.A))
    assert np.array_equal(p.B, nk.blockdiag(low.B, [[1.0]]))
    assert check_class(p.A, "C")


def test_complex_spectrum_n4():
    ev = nk.eigenvalues(build_complex_pair(4).A)
    assert any(abs(x - 1) < 1e-9 for x in ev) and any(abs(x + 1) < 1e-9 for x in ev)
    assert sum(abs(abs(x) - 1) > 1e-9 for x in ev) == 1


def test_rotation_angles_halve():
    # the real ladder above casen3 produces rotation blocks whose angle halves each level
    def angles(p):
        return sorted(cmath.phase(x) for x in nk.eigenvalues(p.A) if x.imag > 1e-9)

    pairs = [build_real_pair(n) for n in range(4, 9)]
    for lo, hi in zip(pairs, pairs[1:]):
        a_lo, a_hi = angles(lo), angles(hi)
        assert a_lo
        for th in a_lo:
            assert any(abs(t - th / 2) <= 1e-10 for t in a_hi)


def test_lift_complex_identity_input():
    canon = CanonicalForm((One(), One()), np.eye(2, dtype=complex))
    pair = GeneratorPair(np.eye(2, dtype=complex), np.eye(2, dtype=complex), nk.COMPLEX, 2,
                         DensityScope.Unvalidated, canon)
    up = lift_complex(pair)
    assert np.allclose(up.A @ up.A, np.eye(3))


def test_root_of_unity_halves():
    b = UnitModulusScalar(Fraction(1, 3))
    from densegen.generators import _sqrt_block

    assert abs(_sqrt_block(b).matrix()[0, 0] - cmath.exp(1j * math.pi / 3)) <= 1e-15


def test_lift_needs_canonical_form():
    pair = GeneratorPair(np.eye(2, dtype=complex), np.eye(2, dtype=complex), nk.COMPLEX, 2,
                         DensityScope.Unvalidated)
    with pytest.raises(MissingCanonicalForm):
        lift_complex(pair)


def test_check_class_examples():
    assert check_class(np.eye(3), "C")
    assert not check_class(np.diag([2.0, 3.0]), "C")
    assert not check_class(np.diag([2.0, 3.0, 1.0]), "R")


def test_strict_class_rejects_free_scalar():
    A = build_complex_pair(2).A
    assert check_class(A, "C")
    assert not check_class(A, "C", strict=True)


@pytest.mark.parametrize("field", [nk.REAL, nk.COMPLEX])
def test_pair_json_roundtrip(field):
    p = build_pair(5, field)
    q = GeneratorPair.from_json(p.to_json())
    assert np.array_equal(p.A, q.A) and np.array_equal(p.B, q.B)
    assert q.kind == p.kind and q.lower is not None
