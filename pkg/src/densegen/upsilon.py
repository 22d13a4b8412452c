"""Bordered matrices and the invariant Υ(G) = (Y^T F^-1 X, eta).

An (n+1)x(n+1) matrix G is read as

    G = [ F    X  ]
        [ Y^T  eta]

with F the leading n x n block. Two bordered matrices with the same Υ value
are related by a sandwich diag(S1, 1) G diag(S2, 1); products of two
rank-one-bordered matrices move Υ by an explicit rational map
(:func:`combine_points`). Together these let a planner reason about the
(n+1)-dimensional semigroup through points of K^2.
"""

from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import numkernel as nk
from .dualbasis import DualSpec, solve_dual_with_inverse
from .errors import (
    DimensionTooSmall,
    FiberMismatch,
    NoRealRoot,
    NotBordered,
    PoleAtZ,
    PositivityViolated,
    SingularF,
    SingularMatrix,
)

CLASSIFY_TOL = 1e-9
POLE_GUARD = 1e-9
FIBER_TOL = 1e-9


class UpsilonPoint(NamedTuple):
    a: complex | float
    eta: complex | float

    def to_json(self):
        return [nk.scalar_to_json(self.a), nk.scalar_to_json(self.eta)]

    @classmethod
    def from_json(cls, obj):
        return cls(nk.scalar_from_json(obj[0]), nk.scalar_from_json(obj[1]))

    def distance(self, other) -> float:
        return float(np.hypot(abs(self.a - other[0]), abs(self.eta - other[1])))


@dataclass(frozen=True)
class BorderedMatrix:
    F: np.ndarray
    X: np.ndarray  # 1-D, length n
    Y: np.ndarray  # 1-D, length n
    eta: complex | float

    def __post_init__(self):
        n = self.F.shape[0]
        if self.F.shape != (n, n) or self.X.shape != (n,) or self.Y.shape != (n,):
            raise ValueError("inconsistent block shapes")

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def field(self) -> nk.Field:
        return nk.common_field(self.F, self.X, self.Y)

    def to_json(self) -> dict:
        return {
            "F": nk.matrix_to_json(self.F),
            "X": nk.matrix_to_json(self.X.reshape(-1, 1)),
            "Y": nk.matrix_to_json(self.Y.reshape(-1, 1)),
            "eta": nk.scalar_to_json(self.eta),
        }

    @classmethod
    def from_json(cls, obj) -> "BorderedMatrix":
        F = nk.matrix_from_json(obj["F"])
        X = nk.matrix_from_json(obj["X"]).reshape(-1)
        Y = nk.matrix_from_json(obj["Y"]).reshape(-1)
        eta = nk.scalar_from_json(obj["eta"])
        if nk.field_of(F) == nk.REAL:
            eta = complex(eta).real
        return cls(F, X, Y, eta)


class BorderClass(enum.Enum):
    I_n = "I_n"
    I_n_plus = "I_n_plus"
    I_n_minus = "I_n_minus"
    S_n = "S_n"
    S_n_plus = "S_n_plus"
    S_n_minus = "S_n_minus"
    BarOnly = "BarOnly"
    None_ = "None"


def split(G) -> BorderedMatrix:
    G = np.asarray(G)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"square matrix required, got {G.shape}")
    if G.shape[0] < 2:
        raise DimensionTooSmall("bordered split needs dimension >= 2")
    eta = G[-1, -1]
    eta = complex(eta) if np.iscomplexobj(G) else float(eta)
    return BorderedMatrix(G[:-1, :-1].copy(), G[:-1, -1].copy(), G[-1, :-1].copy(), eta)


def join(B: BorderedMatrix) -> np.ndarray:
    n = B.n
    dtype = np.result_type(B.F, B.X, B.Y, np.asarray(B.eta), np.float64)
    G = np.empty((n + 1, n + 1), dtype=dtype)
    G[:-1, :-1] = B.F
    G[:-1, -1] = B.X
    G[-1, :-1] = B.Y
    G[-1, -1] = B.eta
    return G


def _as_bordered(G) -> BorderedMatrix:
    return G if isinstance(G, BorderedMatrix) else split(G)


def upsilon_of(B) -> UpsilonPoint:
    """Υ(B) = (Y^T F^-1 X, eta)."""
    B = _as_bordered(B)
    try:
        w = nk.solve(B.F, B.X)
    except SingularMatrix as exc:
        raise SingularF(str(exc)) from exc
    a = B.Y @ w
    a = complex(a) if np.iscomplexobj(a) else float(a)
    return UpsilonPoint(a, B.eta)


def classify(B, tol: float = CLASSIFY_TOL) -> BorderClass:
    B = _as_bordered(B)
    real = B.field == nk.REAL
    d = nk.det(B.F)
    if abs(d) <= tol:
        return BorderClass.None_
    try:
        a = upsilon_of(B).a
    except SingularF:
        return BorderClass.None_
    if np.linalg.norm(B.X) <= tol and np.linalg.norm(B.Y) <= tol and abs(B.eta - 1) <= tol:
        if not real:
            return BorderClass.S_n
        return BorderClass.S_n_plus if d > 0 else BorderClass.S_n_minus
    if abs(a) > tol:
        if not real:
            return BorderClass.I_n
        return BorderClass.I_n_plus if d > 0 else BorderClass.I_n_minus
    return BorderClass.BarOnly


_I_CLASSES = {BorderClass.I_n, BorderClass.I_n_plus, BorderClass.I_n_minus}
_S_CLASSES = {BorderClass.S_n, BorderClass.S_n_plus, BorderClass.S_n_minus}


def is_I(cls: BorderClass) -> bool:
    return cls in _I_CLASSES


def is_S(cls: BorderClass) -> bool:
    return cls in _S_CLASSES


def same_fiber_factor(G1, G2, positive: bool = False):
    """Block-diagonal (S_left, S_right) with S_left @ G1 @ S_right == G2.

    S_right = diag(R, 1) where R solves R^-1 F1^-1 X1 = F2^-1 X2 and
    R^T Y1 = Y2; S_left = diag(F2 R^-1 F1^-1, 1). With ``positive`` (real
    field, det F1 and det F2 of equal sign) det R > 0, so both inner blocks
    have positive determinant.
    """
    B1, B2 = _as_bordered(G1), _as_bordered(G2)
    field = nk.common_field(B1.F, B2.F)
    c1, c2 = classify(B1), classify(B2)
    if not (is_I(c1) and is_I(c2)):
        raise NotBordered(f"both operands must lie in I_n (got {c1.value}, {c2.value})")
    p1, p2 = upsilon_of(B1), upsilon_of(B2)
    scale = max(abs(p1.a), abs(p1.eta), 1.0)
    if abs(p1.a - p2.a) > FIBER_TOL * scale or abs(p1.eta - p2.eta) > FIBER_TOL * scale:
        raise FiberMismatch(f"Υ(G1) = {tuple(p1)} but Υ(G2) = {tuple(p2)}")
    if positive:
        if field != nk.REAL:
            raise ValueError("positive mode is only meaningful over the reals")
        if c1 != c2:
            raise NotBordered(f"positive mode needs matching det signs ({c1.value} vs {c2.value})")
    F1inv_X1 = nk.solve(B1.F, B1.X)
    F2inv_X2 = nk.solve(B2.F, B2.X)
    # Υ values agree only to FIBER_TOL; rescale Y2 onto the exact pairing
    Y2 = B2.Y * ((B1.Y @ F1inv_X1) / (B2.Y @ F2inv_X2))
    spec = DualSpec(F1inv_X1, B1.Y, F2inv_X2, Y2, field=field, want_positive_det=positive)
    R, Rinv = solve_dual_with_inverse(spec)
    left = B2.F @ Rinv @ nk.invert(B1.F)
    one = np.ones((1, 1), dtype=left.dtype)
    return nk.blockdiag(left, one), nk.blockdiag(R, one)


def combine_points(p, q, z, real_positive: bool = False, guard: float = POLE_GUARD) -> UpsilonPoint:
    """((z + a*delta)(z + b*eps)/(z + a*b), z + eps*delta) for p=(a,eps), q=(b,delta).

    In ``real_positive`` mode additionally require 1 + ab/z > 0, the
    condition for the realizing product to have det F > 0.
    """
    a, eps = p
    b, delta = q
    if abs(z) <= guard:
        raise PoleAtZ(f"z = {z} is too close to 0")
    if abs(z + a * b) <= guard:
        raise PoleAtZ(f"z = {z} is too close to -ab = {-a * b}")
    if real_positive:
        ratio = 1 + a * b / z
        if isinstance(ratio, complex) or np.iscomplexobj(ratio):
            if abs(ratio.imag) > 0:
                raise PositivityViolated("real-positive mode requires real operands")
            ratio = ratio.real
        if not ratio > 0:
            raise PositivityViolated(f"1 + ab/z = {ratio} is not positive")
    first = (z + a * delta) * (z + b * eps) / (z + a * b)
    return UpsilonPoint(first, z + eps * delta)


def _scalar(x, field):
    return complex(x) if field == nk.COMPLEX else float(np.real(x))


def realize_combine(p, q, r, s, n: int, field: nk.Field | None = None):
    """The two bordered matrices whose product realizes combine_points(p, q, r*s).

    M1 = [I, (a/r)V; r V^T, eps],  M2 = [I, s V; (b/s) V^T, delta]
    with V the first canonical basis vector of K^n.
    """
    a, eps = p
    b, delta = q
    if field is None:
        field = nk.COMPLEX if any(np.iscomplexobj(v) for v in (a, eps, b, delta, r, s)) else nk.REAL
    if r == 0 or s == 0:
        raise PoleAtZ("r and s must be nonzero")
    # raises PoleAtZ for a forbidden z = rs
    combine_points(p, q, r * s)
    dtype = nk.dtype_of(field)
    V = np.zeros(n, dtype=dtype)
    V[0] = 1
    eye = np.eye(n, dtype=dtype)
    M1 = join(BorderedMatrix(eye, (a / r) * V, r * V, _scalar(eps, field)))
    M2 = join(BorderedMatrix(eye.copy(), s * V, (b / s) * V, _scalar(delta, field)))
    return M1, M2, M1 @ M2


def _quadratic_roots(c2, c1, c0):
    """Roots of c2 t^2 + c1 t + c0 over C, computed without cancellation."""
    disc = cmath.sqrt(c1 * c1 - 4 * c2 * c0)
    sgn = 1 if (np.conj(c1) * disc).real >= 0 else -1
    qq = -0.5 * (c1 + sgn * disc)
    if qq == 0:
        return [0j, 0j]
    return [qq / c2, c0 / qq]


@dataclass(frozen=True)
class Perturbation:
    bordered: BorderedMatrix
    t: complex | float
    sign: int
    W: np.ndarray


def _perturb_candidates(B, Finv, target_a, W, real):
    """Admissible (t, sign) solving g^{sign}(t) = target_a for direction W."""
    a0 = B.Y @ Finv @ B.X
    yw = B.Y @ Finv @ W
    wx = W @ Finv @ B.X
    ww = W @ Finv @ W
    out = []
    for sign in (1, -1):
        roots = _quadratic_roots(sign * ww, sign * yw + wx, a0 - target_a)
        for t in roots:
            if real:
                if abs(t.imag) > 1e-12 * max(1.0, abs(t)):
                    continue
                t = t.real
            out.append((abs(t), sign, t))
    return out


def fiber_perturb(B, target, rng: np.random.Generator | None = None,
                  full_output: bool = False):
    """Move B onto the fiber Υ^-1(target) along (X ± tW, Y + tW).

    eta is set to target.eta; t is the smallest-magnitude root over both
    signs. Direction W is the first canonical vector with |W^T F^-1 W| >
    1e-6 that admits a root, then up to 16 random unit vectors.
    """
    B = _as_bordered(B)
    target = UpsilonPoint(*target)
    field = B.field
    real = field == nk.REAL
    try:
        Finv = nk.invert(B.F)
    except SingularMatrix as exc:
        raise SingularF(str(exc)) from exc
    n = B.n
    dtype = nk.dtype_of(field)
    if rng is None:
        rng = np.random.default_rng(0)

    def directions():
        for j in range(n):
            W = np.zeros(n, dtype=dtype)
            W[j] = 1
            yield W
        for _ in range(16):
            W = nk.random_matrix(rng, n, 1, field).reshape(-1)
            yield W / np.linalg.norm(W)

    for W in directions():
        if abs(W @ Finv @ W) <= 1e-6:
            continue
        cands = _perturb_candidates(B, Finv, target.a, W, real)
        if not cands:
            continue
        _, sign, t = min(cands, key=lambda c: (c[0], -c[1]))
        if real:
            t = float(t)
            eta = float(np.real(target.eta))
        else:
            eta = complex(target.eta)
        out = BorderedMatrix(B.F.copy(), B.X + sign * t * W, B.Y + t * W, eta)
        if full_output:
            return Perturbation(out, t, sign, W)
        return out
    raise NoRealRoot(f"no direction W reaches Y^T F^-1 X = {target.a} over the reals")
