"""Invertible matrices with one prescribed column of M^-1 and of M^T.

Given column vectors P0, Q0, P, Q with Q0^T P0 = Q^T P != 0, find an
invertible M with

    M^-1 P0 = P,    M^T Q0 = Q,

optionally with det(M) > 0 over the reals. Transposes are plain transposes
(bilinear, never conjugated), also over C.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numkernel as nk
from .errors import BadPairing, DegenerateExtension, DimensionTooSmall

PAIRING_TOL = 1e-10
# |Q_{k+1}^T P_{k+1} - 1| above this means the extension step lost accuracy.
EXTENSION_TOL = 1e-9


def _vec(v, dtype) -> np.ndarray:
    return np.asarray(v, dtype=dtype).reshape(-1)


@dataclass(frozen=True)
class DualSpec:
    P0: np.ndarray
    Q0: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    field: nk.Field = nk.REAL
    want_positive_det: bool = False

    def __post_init__(self):
        dtype = nk.dtype_of(self.field)
        vecs = []
        for name in ("P0", "Q0", "P", "Q"):
            raw = np.asarray(getattr(self, name))
            if self.field == nk.REAL and np.iscomplexobj(raw):
                raise nk.FieldMismatch(f"{name} is complex but field is real")
            v = _vec(raw, dtype)
            if not np.all(np.isfinite(v)):
                raise nk.NonFiniteEntries(f"{name} has non-finite entries")
            if not np.any(v):
                raise BadPairing(f"{name} is the zero vector")
            object.__setattr__(self, name, v)
            vecs.append(v)
        if len({v.shape[0] for v in vecs}) != 1:
            raise ValueError("P0, Q0, P, Q must have the same length")
        d0 = self.Q0 @ self.P0
        d1 = self.Q @ self.P
        if d0 == 0:
            raise BadPairing("Q0^T P0 is zero")
        if abs(d0 - d1) > PAIRING_TOL * max(abs(d0), 1.0):
            raise BadPairing(f"pairings differ: Q0^T P0 = {d0}, Q^T P = {d1}")

    @property
    def n(self) -> int:
        return self.P0.shape[0]


def _orthonormal_basis(cols: list[np.ndarray]) -> np.ndarray:
    """Modified Gram-Schmidt over the Hermitian inner product."""
    basis = []
    for c in cols:
        w = np.array(c, dtype=np.complex128)
        for _ in range(2):  # second sweep restores orthogonality lost to cancellation
            for u in basis:
                w = w - (np.vdot(u, w)) * u
        nrm = np.linalg.norm(w)
        if nrm > 1e-14 * max(np.linalg.norm(c), 1.0):
            basis.append(w / nrm)
    return np.array(basis).T if basis else np.zeros((len(cols[0]) if cols else 0, 0))


def _next_Q(Ps: list[np.ndarray], dtype) -> np.ndarray:
    """A vector Q with Q^T P_i = 0 for every P_i in Ps.

    Q^T P = conj(Q)^H P, so conj(Q) must lie in the Hermitian orthogonal
    complement of span(Ps). Take the canonical basis vector with the largest
    component in that complement and project it.
    """
    n = Ps[0].shape[0]
    U = _orthonormal_basis(Ps)
    resid = np.eye(n, dtype=np.complex128) - U @ U.conj().T
    j = int(np.argmax(np.linalg.norm(resid, axis=0)))
    r = resid[:, j]
    # second projection pass for accuracy
    r = r - U @ (U.conj().T @ r)
    Q = np.conj(r)
    if dtype == np.float64:
        Q = Q.real
    return np.asarray(Q, dtype=dtype)


def _dual_extension(P, Q, want_positive_det=False):
    """Returns (M, M^-1). Columns of M^-1 are P_1..P_n, rows of M are Q_1..Q_n."""
    dtype = np.result_type(P, Q, np.float64)
    P = _vec(P, dtype)
    Q = _vec(Q, dtype)
    n = P.shape[0]
    if abs(Q @ P - 1) > PAIRING_TOL:
        raise BadPairing(f"Q^T P = {Q @ P}, expected 1")
    Ps, Qs = [P], [Q]
    for k in range(1, n):
        Qn = _next_Q(Ps, dtype)
        Qs.append(Qn)
        # least-norm Z with Q_i^T Z = 0 (i <= k) and Q_{k+1}^T Z = 1
        A = np.array(Qs)
        rhs = np.zeros(k + 1, dtype=dtype)
        rhs[-1] = 1.0
        Z, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        Z = np.asarray(Z, dtype=dtype)
        if abs(Qn @ Z - 1) > EXTENSION_TOL or np.max(np.abs(A[:-1] @ Z), initial=0.0) > EXTENSION_TOL:
            raise DegenerateExtension(
                f"step {k}: no well-conditioned P_{k + 1} (Q^T P = {Qn @ Z})")
        Ps.append(Z)
    Minv = np.array(Ps).T
    M = np.array(Qs)
    if want_positive_det and dtype == np.float64 and n > 1 and nk.det(M) < 0:
        M[-1] *= -1
        Minv[:, -1] *= -1
    return M, Minv


def extend_to_dual_basis(P, Q, want_positive_det: bool = False) -> np.ndarray:
    """Invertible M whose inverse has first column P and whose transpose has
    first column Q. Requires Q^T P = 1 (rescale first)."""
    return _dual_extension(P, Q, want_positive_det)[0]


def solve_dual_with_inverse(spec: DualSpec):
    """Like :func:`solve_dual` but also returns M^-1, which falls out for free."""
    n = spec.n
    d = spec.Q0 @ spec.P0
    if n == 1:
        m = spec.Q[0] / spec.Q0[0]
        if abs(m * spec.P[0] - spec.P0[0]) > 1e-9 * abs(spec.P0[0]):
            raise DimensionTooSmall("scalar constraints are inconsistent")
        if spec.want_positive_det and spec.field == nk.REAL and m <= 0:
            raise DimensionTooSmall("1x1 solution is forced to be negative")
        M = np.array([[m]], dtype=nk.dtype_of(spec.field))
        return M, 1.0 / M
    # divide the Q side by d so both pairings become 1
    M1, M1inv = _dual_extension(spec.P0, spec.Q0 / d, spec.want_positive_det)
    M2, M2inv = _dual_extension(spec.P, spec.Q / d, spec.want_positive_det)
    return M1inv @ M2, M2inv @ M1


def solve_dual(spec: DualSpec) -> np.ndarray:
    """Invertible M with M^-1 P0 = P and M^T Q0 = Q (det M > 0 on request)."""
    return solve_dual_with_inverse(spec)[0]
