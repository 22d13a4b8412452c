"""Two-generator pairs in every dimension, real and complex.

Low dimensions come from explicit constants; higher ones from a square-root
lift: given (A, E) in dimension n with A in block form, build C in dimension
n+1 with C^2 = diag(A, sigma) and D = diag(E, tau). The block form of every
A is carried symbolically (:class:`CanonicalForm`) so square roots act on
tags rather than on numerically computed eigenvectors.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field as dc_field, replace
from fractions import Fraction
from typing import Union

import numpy as np

from . import numkernel as nk
from .errors import MissingCanonicalForm, NotInClassR

SQRT2 = math.sqrt(2.0)
HALF_SQRT2 = SQRT2 / 2

# constants of the real 2x2 pair
CASEN2_A = -(2.0 ** 0.6)
CASEN2_B = 8.0 / 3.0
CASEN2_E = -(2.0 ** -0.8)


class DensityScope(str, enum.Enum):
    FullMatrixAlgebra = "FullMatrixAlgebra"
    PositiveDeterminant = "PositiveDeterminant"
    Unvalidated = "Unvalidated"
    EmpiricallySupported = "EmpiricallySupported"


# --- canonical blocks ---------------------------------------------------------

@dataclass(frozen=True)
class PositiveScalar:
    value: float
    size = 1

    def matrix(self):
        return np.array([[self.value]])


@dataclass(frozen=True)
class One:
    size = 1

    def matrix(self):
        return np.array([[1.0]])


@dataclass(frozen=True)
class RotationBlock:
    """Rotation by pi / 2**m."""
    m: int
    size = 2

    def matrix(self):
        th = math.pi / 2 ** self.m
        c, s = math.cos(th), math.sin(th)
        if self.m == 0:
            c, s = -1.0, 0.0
        elif self.m == 1:
            c, s = 0.0, 1.0
        return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class ReflectionBlock:
    """[[r, r], [r, -r]] with r = sqrt(2)/2; squares to the identity."""
    size = 2

    def matrix(self):
        return np.array([[HALF_SQRT2, HALF_SQRT2], [HALF_SQRT2, -HALF_SQRT2]])


@dataclass(frozen=True)
class SignScalar:
    sign: int
    size = 1

    def matrix(self):
        return np.array([[float(self.sign)]])


@dataclass(frozen=True)
class UnitModulusScalar:
    """exp(2 pi i * turns), turns a reduced fraction in (-1/2, 1/2]."""
    turns: Fraction
    size = 1

    @property
    def order(self) -> int:
        return self.turns.denominator

    def matrix(self):
        t = self.turns
        if t == Fraction(1, 2):
            return np.array([[-1.0 + 0j]])
        if t == Fraction(1, 4):
            return np.array([[1j]])
        if t == Fraction(-1, 4):
            return np.array([[-1j]])
        return np.array([[cmath.exp(2j * math.pi * float(t))]])


@dataclass(frozen=True)
class FreeComplexScalar:
    value: complex
    size = 1

    def matrix(self):
        return np.array([[complex(self.value)]])


Block = Union[PositiveScalar, One, RotationBlock, ReflectionBlock, SignScalar,
              UnitModulusScalar, FreeComplexScalar]


@dataclass(frozen=True)
class CanonicalForm:
    """matrix == transform @ blockdiag(blocks) @ inv(transform)."""
    blocks: tuple
    transform: np.ndarray

    @property
    def dim(self) -> int:
        return sum(b.size for b in self.blocks)

    def block_matrix(self, field: nk.Field = nk.REAL) -> np.ndarray:
        D = nk.blockdiag(*[b.matrix() for b in self.blocks])
        return D.astype(nk.dtype_of(field)) if field == nk.COMPLEX else np.real_if_close(D).astype(float)

    def matrix(self, field: nk.Field = nk.REAL) -> np.ndarray:
        T = self.transform
        D = self.block_matrix(field)
        out = T @ D @ nk.invert(T)
        return out.astype(nk.dtype_of(field)) if field == nk.COMPLEX else np.real(out)

    def to_json(self) -> dict:
        return {"blocks": [_block_to_json(b) for b in self.blocks],
                "transform": nk.matrix_to_json(self.transform)}

    @classmethod
    def from_json(cls, obj) -> "CanonicalForm":
        return cls(tuple(_block_from_json(b) for b in obj["blocks"]),
                   nk.matrix_from_json(obj["transform"]))


def _block_to_json(b) -> dict:
    kind = type(b).__name__
    if isinstance(b, PositiveScalar):
        return {"kind": kind, "value": b.value}
    if isinstance(b, RotationBlock):
        return {"kind": kind, "m": b.m}
    if isinstance(b, SignScalar):
        return {"kind": kind, "sign": b.sign}
    if isinstance(b, UnitModulusScalar):
        return {"kind": kind, "turns": [b.turns.numerator, b.turns.denominator]}
    if isinstance(b, FreeComplexScalar):
        return {"kind": kind, "value": nk.scalar_to_json(b.value)}
    return {"kind": kind}


def _block_from_json(obj):
    kind = obj["kind"]
    if kind == "PositiveScalar":
        return PositiveScalar(float(obj["value"]))
    if kind == "RotationBlock":
        return RotationBlock(int(obj["m"]))
    if kind == "SignScalar":
        return SignScalar(int(obj["sign"]))
    if kind == "UnitModulusScalar":
        return UnitModulusScalar(Fraction(*obj["turns"]))
    if kind == "FreeComplexScalar":
        return FreeComplexScalar(complex(*obj["value"]))
    if kind == "One":
        return One()
    if kind == "ReflectionBlock":
        return ReflectionBlock()
    raise ValueError(f"unknown block kind {kind!r}")


# eigenbasis of the reflection block: columns for eigenvalues +1, -1
_C8, _S8 = math.cos(math.pi / 8), math.sin(math.pi / 8)
REFLECTION_EIGVECS = np.array([[_C8, -_S8], [_S8, _C8]])
# [[1, -sqrt2], [sqrt2, -1]] = S @ rot(pi/2) @ S^-1
HALF_TURN_BLOCK = np.array([[1.0, -SQRT2], [SQRT2, -1.0]])
HALF_TURN_SIMILARITY = np.array([[1.0, 1.0], [0.0, SQRT2]])


# --- generator pairs ----------------------------------------------------------

@dataclass(frozen=True)
class GeneratorPair:
    A: np.ndarray
    B: np.ndarray
    field: nk.Field
    dim: int
    density_scope: DensityScope
    canonical_A: CanonicalForm | None = None
    provenance: str = ""
    # how this pair was built; ``lower`` is the pair it was lifted from
    kind: str = "registry"
    lower: "GeneratorPair | None" = dc_field(default=None, repr=False)

    def __post_init__(self):
        if self.A.shape != (self.dim, self.dim) or self.B.shape != (self.dim, self.dim):
            raise ValueError("A and B must be dim x dim")
        nk.common_field(self.A, self.B)
        if nk.field_of(self.A) != self.field:
            raise nk.FieldMismatch("matrix dtype disagrees with field tag")

    @property
    def pair_id(self) -> str:
        return f"{self.field}-{self.dim}-{self.kind}"

    def to_json(self) -> dict:
        out = {
            "A": nk.matrix_to_json(self.A),
            "B": nk.matrix_to_json(self.B),
            "field": self.field,
            "dim": self.dim,
            "density_scope": self.density_scope.value,
            "provenance": self.provenance,
            "kind": self.kind,
        }
        if self.canonical_A is not None:
            out["canonical_A"] = self.canonical_A.to_json()
        return out

    @classmethod
    def from_json(cls, obj) -> "GeneratorPair":
        """Load a pair; ladder pairs are rebuilt so their lift chain is available."""
        field, dim = obj["field"], int(obj["dim"])
        A = nk.matrix_from_json(obj["A"])
        B = nk.matrix_from_json(obj["B"])
        try:
            built = build_pair(dim, field)
        except ValueError:
            built = None
        if built is not None and np.allclose(built.A, A, atol=1e-12) and np.allclose(built.B, B, atol=1e-12):
            scope = DensityScope(obj.get("density_scope", built.density_scope.value))
            return replace(built, density_scope=scope)
        canon = obj.get("canonical_A")
        return cls(A, B, field, dim,
                   DensityScope(obj.get("density_scope", "Unvalidated")),
                   CanonicalForm.from_json(canon) if canon else None,
                   obj.get("provenance", "loaded from JSON"), kind="custom")


def _sign(x: float) -> int:
    return 1 if x > 0 else -1


def casen2_pair() -> GeneratorPair:
    A = np.array([[CASEN2_A, CASEN2_E], [1.0, 0.0]])
    B = np.diag([1.0, CASEN2_B])
    return GeneratorPair(A, B, nk.REAL, 2, DensityScope.PositiveDeterminant,
                         None, "real 2x2: A=[[a,e],[1,0]], B=diag(1,b), a=-2^(3/5), b=8/3, e=-2^(-4/5)",
                         kind="casen2")


def casen3_pair() -> GeneratorPair:
    A = nk.blockdiag(np.array([[math.sqrt(CASEN2_B)]]), ReflectionBlock().matrix())
    E = np.array([[0.0, 1.0, 0.0], [CASEN2_E, CASEN2_A, 0.0], [0.0, 0.0, 1.0]])
    canon = CanonicalForm(
        (PositiveScalar(math.sqrt(CASEN2_B)), One(), SignScalar(-1)),
        nk.blockdiag(np.eye(1), REFLECTION_EIGVECS),
    )
    return GeneratorPair(A, E, nk.REAL, 3, DensityScope.FullMatrixAlgebra, canon,
                         "real 3x3: A=diag(sqrt(b), reflection), E=[[0,1,0],[e,a,0],[0,0,1]]",
                         kind="casen3", lower=casen2_pair())


def real_registry_1d() -> GeneratorPair:
    a, b = -math.e, math.exp(-SQRT2)
    return GeneratorPair(np.array([[a]]), np.array([[b]]), nk.REAL, 1, DensityScope.Unvalidated,
                         None, "registry real 1x1: (a, b) = (-e, e^-sqrt2), ln(-a)/ln(b) = -1/sqrt2",
                         kind="registry")


def complex_registry(n: int) -> GeneratorPair:
    if n == 1:
        a = 2 * cmath.exp(2j * math.pi * SQRT2)
        b = cmath.exp(2j * math.pi * math.sqrt(3)) / 3
        return GeneratorPair(np.array([[a]]), np.array([[b]]), nk.COMPLEX, 1,
                             DensityScope.Unvalidated, None,
                             "registry complex 1x1: (2 e^{2 pi i sqrt2}, e^{2 pi i sqrt3}/3)",
                             kind="registry")
    if n == 2:
        z1 = 2 ** 0.6 * cmath.exp(2j * math.pi * SQRT2)
        A = np.diag([z1, 1.0 + 0j])
        E = np.array([[0, 1], [-(2 ** -0.8) * cmath.exp(-2j * math.pi * math.sqrt(3)), -(2 ** 0.6)]],
                     dtype=complex)
        canon = CanonicalForm((FreeComplexScalar(z1), One()), np.eye(2, dtype=complex))
        return GeneratorPair(A, E, nk.COMPLEX, 2, DensityScope.Unvalidated, canon,
                             "registry complex 2x2: A=diag(2^(3/5) e^{2 pi i sqrt2}, 1), E mirrors the real 2x2 shape",
                             kind="registry")
    raise ValueError("complex registry covers n = 1, 2 only")


def _block_slices(blocks):
    out, i = [], 0
    for b in blocks:
        out.append(list(range(i, i + b.size)))
        i += b.size
    return out


def _sqrt_block(b):
    if isinstance(b, PositiveScalar):
        return PositiveScalar(math.sqrt(b.value))
    if isinstance(b, One):
        return One()
    if isinstance(b, RotationBlock):
        return RotationBlock(b.m + 1)
    if isinstance(b, UnitModulusScalar):
        return UnitModulusScalar(b.turns / 2)
    if isinstance(b, FreeComplexScalar):
        return FreeComplexScalar(cmath.sqrt(b.value))
    raise NotInClassR(f"no square-root rule for block {b!r}")


def validate_real_canonical(canon: CanonicalForm, det_sign: int):
    blocks = canon.blocks
    if len(blocks) < 2:
        raise NotInClassR("need at least a positive scalar and a sign scalar")
    if not isinstance(blocks[0], PositiveScalar) or not blocks[0].value > 0:
        raise NotInClassR("first block must be a positive scalar")
    if not isinstance(blocks[-1], SignScalar) or blocks[-1].sign != det_sign:
        raise NotInClassR("last block must be the sign of det(A)")
    for b in blocks[1:-1]:
        if not isinstance(b, (One, RotationBlock)):
            raise NotInClassR(f"middle block {b!r} is neither 1 nor a rotation")
    has_one = (any(isinstance(b, One) for b in blocks[1:-1]) or blocks[-1].sign == 1
               or blocks[0].value == 1.0)
    if not has_one:
        raise NotInClassR("no eigenvalue equal to 1")


def lift_real(pair: GeneratorPair) -> GeneratorPair:
    """(A, E) in R_n -> (C, D) in dimension n+1 with C^2 = diag(A, sgn det A)."""
    if pair.field != nk.REAL:
        raise ValueError("lift_real needs a real pair")
    canon = pair.canonical_A
    if canon is None:
        raise MissingCanonicalForm("lift_real needs the block form of A")
    dA, dE = nk.det(pair.A), nk.det(pair.B)
    if dA == 0 or dE == 0:
        raise NotInClassR("A and E must be invertible")
    s = _sign(dA)
    validate_real_canonical(canon, s)
    n = pair.dim
    blocks = canon.blocks
    head = [_sqrt_block(b) for b in blocks[:-1]]
    if s > 0:
        last = ReflectionBlock().matrix()
        local = REFLECTION_EIGVECS
        tail_blocks = [One(), SignScalar(-1)]
    else:
        last = HALF_TURN_BLOCK
        local = HALF_TURN_SIMILARITY
        tail_blocks = [RotationBlock(1)]
    block_form = nk.blockdiag(*[b.matrix() for b in head], last)
    T_up = nk.blockdiag(canon.transform, np.eye(1))
    C = T_up @ block_form @ nk.invert(T_up)
    T = T_up @ nk.blockdiag(np.eye(n - 1), local)
    new_blocks = head + tail_blocks
    if s < 0:
        # move an eigenvalue-1 block to the end as the (positive) sign scalar
        slices = _block_slices(new_blocks)
        idx = next((i for i in range(1, len(head)) if isinstance(new_blocks[i], One)), None)
        if idx is None:
            raise NotInClassR("det(A) < 0 but no unit block to carry eigenvalue 1")
        order = [i for i in range(len(new_blocks)) if i != idx] + [idx]
        perm = [j for i in order for j in slices[i]]
        T = T[:, perm]
        new_blocks = [new_blocks[i] for i in order[:-1]] + [SignScalar(1)]
    D = nk.blockdiag(pair.B, np.array([[-float(_sign(dE))]]))
    return GeneratorPair(
        C, D, nk.REAL, n + 1, pair.density_scope,
        CanonicalForm(tuple(new_blocks), T),
        f"real lift of dimension {n} (det A {'>' if s > 0 else '<'} 0)",
        kind="real-lift-pos" if s > 0 else "real-lift-neg", lower=pair,
    )


def validate_complex_canonical(canon: CanonicalForm, strict: bool = False):
    blocks = canon.blocks
    if not blocks or not isinstance(blocks[-1], One):
        raise MissingCanonicalForm("last block must be 1")
    first = blocks[0]
    if strict and isinstance(first, FreeComplexScalar):
        raise MissingCanonicalForm("strict mode: first block must be a root of unity")
    for b in blocks[1:-1]:
        if not isinstance(b, (One, UnitModulusScalar)):
            raise MissingCanonicalForm(f"block {b!r} is not a root of unity")


def lift_complex(pair: GeneratorPair) -> GeneratorPair:
    """(A, E) with A in C_n -> (C, D), C^2 = diag(A, 1), D = diag(E, 1)."""
    if pair.field != nk.COMPLEX:
        raise ValueError("lift_complex needs a complex pair")
    canon = pair.canonical_A
    if canon is None:
        raise MissingCanonicalForm("lift_complex needs the block form of A")
    validate_complex_canonical(canon)
    n = pair.dim
    head = [_sqrt_block(b) for b in canon.blocks[:-1]]
    block_form = nk.blockdiag(*[b.matrix() for b in head], ReflectionBlock().matrix()).astype(complex)
    T_up = nk.blockdiag(canon.transform, np.eye(1)).astype(complex)
    C = T_up @ block_form @ nk.invert(T_up)
    # eigenvalue order (-1, +1) so the block form ends with 1
    local = REFLECTION_EIGVECS[:, ::-1]
    T = T_up @ nk.blockdiag(np.eye(n - 1), local)
    blocks = tuple(head) + (UnitModulusScalar(Fraction(1, 2)), One())
    D = nk.blockdiag(pair.B, np.eye(1)).astype(complex)
    return GeneratorPair(
        C, D, nk.COMPLEX, n + 1, pair.density_scope, CanonicalForm(blocks, T),
        f"complex lift of dimension {n}", kind="complex-lift", lower=pair,
    )


def build_real_pair(n: int) -> GeneratorPair:
    if n < 1:
        raise ValueError("dimension must be positive")
    if n == 1:
        return real_registry_1d()
    if n == 2:
        return casen2_pair()
    pair = casen3_pair()
    for _ in range(n - 3):
        pair = lift_real(pair)
    return pair


def build_complex_pair(n: int) -> GeneratorPair:
    if n < 1:
        raise ValueError("dimension must be positive")
    if n <= 2:
        return complex_registry(n)
    pair = complex_registry(2)
    for _ in range(n - 2):
        pair = lift_complex(pair)
    return pair


def build_pair(n: int, field: nk.Field) -> GeneratorPair:
    if field == nk.REAL:
        return build_real_pair(n)
    if field == nk.COMPLEX:
        return build_complex_pair(n)
    raise ValueError(f"unknown field {field!r}")


def ladder_sigma(pair: GeneratorPair) -> float:
    """Corner entry sigma in C^2 = diag(A_lower, sigma)."""
    if pair.kind == "complex-lift":
        return 1.0
    if pair.kind in ("real-lift-pos", "real-lift-neg"):
        return float(_sign(nk.det(pair.lower.A)))
    raise ValueError(f"{pair.kind} pair is not a lift")


# --- class membership -----------------------------------------------------------

@dataclass
class ClassCheck:
    passed: bool
    reason: str = ""
    certificate: dict = dc_field(default_factory=dict)

    def __bool__(self):
        return self.passed


MAX_ROOT_ORDER = 2 ** 16


def root_of_unity_order(lam: complex, tol: float) -> int | None:
    """Smallest N <= 2^16 (from the best rational angle) with |lam^N - 1| <= tol."""
    if abs(abs(lam) - 1) > tol:
        return None
    turns = cmath.phase(lam) / (2 * math.pi)
    frac = Fraction(turns).limit_denominator(MAX_ROOT_ORDER)
    N = frac.denominator
    if abs(cmath.exp(N * cmath.log(lam)) - 1) <= tol:
        return N
    return None


def _check_C(ev, tol, strict):
    free = []
    orders = []
    for lam in ev:
        N = root_of_unity_order(complex(lam), tol)
        if N is None:
            free.append(complex(lam))
        else:
            orders.append((complex(lam), N))
    allowed_free = 0 if strict else 1
    if len(free) > allowed_free:
        return ClassCheck(False, f"{len(free)} eigenvalues are not roots of unity")
    if not any(abs(lam - 1) <= tol for lam, _ in orders):
        return ClassCheck(False, "no eigenvalue equal to 1")
    return ClassCheck(True, "", {"free": free, "roots_of_unity": orders})


def _rotation_exponent(theta: float, tol: float) -> int | None:
    """m with theta == pi / 2**m, or None."""
    if theta <= tol:
        return None
    m = -math.log2(theta / math.pi)
    mi = round(m)
    if mi >= 0 and abs(theta - math.pi / 2 ** mi) <= tol:
        return mi
    return None


def _check_R(A, ev, tol):
    if np.iscomplexobj(A):
        return ClassCheck(False, "R_n membership needs a real matrix")
    n = A.shape[0]
    if n < 2:
        return ClassCheck(False, "R_n needs dimension >= 2")
    d = nk.det(A)
    if d == 0:
        return ClassCheck(False, "singular matrix")
    s = _sign(d)
    rest = [complex(x) for x in ev]
    # Z_k = sgn det
    j = min(range(len(rest)), key=lambda i: abs(rest[i] - s))
    if abs(rest[j] - s) > tol:
        return ClassCheck(False, f"no eigenvalue equal to sgn det = {s}")
    rest.pop(j)
    # Z_1 > 0: the unique positive real eigenvalue that is not 1, else a 1
    pos = [i for i, x in enumerate(rest)
           if abs(x.imag) <= tol and x.real > tol and abs(x - 1) > tol]
    if len(pos) > 1:
        return ClassCheck(False, "more than one positive real eigenvalue other than 1")
    if pos:
        z1 = rest.pop(pos[0]).real
    else:
        ones = [i for i, x in enumerate(rest) if abs(x - 1) <= tol]
        if not ones:
            return ClassCheck(False, "no positive leading scalar")
        z1 = rest.pop(ones[0]).real
    unit, rotations, minus_ones = 0, [], 0
    upper = sorted([x for x in rest if x.imag > tol], key=lambda x: x.imag)
    lower = [x for x in rest if x.imag < -tol]
    for x in rest:
        if abs(x.imag) <= tol:
            if abs(x - 1) <= tol:
                unit += 1
            elif abs(x + 1) <= tol:
                minus_ones += 1
            else:
                return ClassCheck(False, f"real eigenvalue {x.real:.6g} not allowed in the middle")
    if minus_ones % 2:
        return ClassCheck(False, "unpaired eigenvalue -1")
    rotations += [0] * (minus_ones // 2)
    if len(upper) != len(lower):
        return ClassCheck(False, "complex eigenvalues are not in conjugate pairs")
    for x in upper:
        k = min(range(len(lower)), key=lambda i: abs(lower[i] - x.conjugate()))
        if abs(lower[k] - x.conjugate()) > tol:
            return ClassCheck(False, "complex eigenvalues are not in conjugate pairs")
        lower.pop(k)
        if abs(abs(x) - 1) > tol:
            return ClassCheck(False, f"complex eigenvalue {x} off the unit circle")
        m = _rotation_exponent(cmath.phase(x), tol)
        if m is None:
            return ClassCheck(False, f"angle of {x} is not pi / 2^m")
        rotations.append(m)
    has_one = unit > 0 or s == 1 or abs(z1 - 1) <= tol
    if not has_one:
        return ClassCheck(False, "no eigenvalue equal to 1")
    return ClassCheck(True, "", {"z1": z1, "sign": s, "ones": unit, "rotations": sorted(rotations)})


def check_class(A, cls: str, tol: float = 1e-8, strict: bool = False) -> ClassCheck:
    """Eigenvalue test for membership in C_n ("C") or R_n ("R")."""
    A = np.asarray(A)
    ev = nk.eigenvalues(A)
    if cls in ("C", "C_n"):
        return _check_C(ev, tol, strict)
    if cls in ("R", "R_n"):
        return _check_R(A, ev, tol)
    raise ValueError(f"unknown class {cls!r}")
