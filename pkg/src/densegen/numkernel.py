"""Small dense linear algebra over R or C.

Matrices are plain numpy arrays. The dtype is the field tag: ``float64``
means real, ``complex128`` means complex. Nothing else is accepted, so a
real matrix never silently picks up an imaginary part and mixed-field
arithmetic is rejected by :func:`common_field`.
"""

from __future__ import annotations

from typing import Literal

import numpy as np

from .errors import FieldMismatch, NoConvergence, NonFiniteEntries, SingularMatrix

Field = Literal["real", "complex"]

REAL: Field = "real"
COMPLEX: Field = "complex"

# Reject a pivot smaller than this fraction of the largest row norm.
PIVOT_RTOL = 1e-12

_DTYPES = {REAL: np.float64, COMPLEX: np.complex128}


def dtype_of(field: Field):
    try:
        return _DTYPES[field]
    except KeyError:
        raise ValueError(f"unknown field {field!r}") from None


def field_of(M) -> Field:
    M = np.asarray(M)
    if np.iscomplexobj(M):
        return COMPLEX
    return REAL


def as_matrix(data, field: Field | None = None) -> np.ndarray:
    """Coerce ``data`` into a 2-D matrix over ``field`` (inferred if None).

    Complex data cannot be coerced to the real field, even when every
    imaginary part is zero; use ``np.real`` explicitly for that.
    """
    arr = np.asarray(data)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {arr.shape}")
    if field is None:
        field = field_of(arr)
    if field == REAL and np.iscomplexobj(arr):
        raise FieldMismatch("complex entries cannot be stored in a real matrix")
    out = np.array(arr, dtype=dtype_of(field))
    if not np.all(np.isfinite(out)):
        raise NonFiniteEntries("matrix has NaN or infinite entries")
    return out


def common_field(*mats) -> Field:
    fields = {field_of(M) for M in mats}
    if len(fields) > 1:
        raise FieldMismatch(f"mixed fields: {sorted(fields)}")
    return fields.pop()


def _check_square(M):
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"square matrix required, got shape {M.shape}")


def lu_factor(M):
    """Partial-pivot LU. Returns (LU, perm, sign, min_pivot_ratio).

    ``LU`` stores L below the diagonal (unit diagonal implied) and U on and
    above it. ``min_pivot_ratio`` is the smallest |pivot| divided by the
    largest row norm of M; 0 for an exactly singular column.
    """
    A = np.array(M, dtype=np.result_type(M, np.float64))
    _check_square(A)
    n = A.shape[0]
    perm = np.arange(n)
    sign = 1
    scale = max(float(np.max(np.linalg.norm(A, axis=1))), np.finfo(float).tiny) if n else 1.0
    min_ratio = np.inf
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        if p != k:
            A[[k, p]] = A[[p, k]]
            perm[[k, p]] = perm[[p, k]]
            sign = -sign
        piv = A[k, k]
        ratio = abs(piv) / scale
        min_ratio = min(min_ratio, ratio)
        if piv == 0:
            continue
        if k + 1 < n:
            A[k + 1:, k] /= piv
            A[k + 1:, k + 1:] -= np.outer(A[k + 1:, k], A[k, k + 1:])
    return A, perm, sign, float(min_ratio if n else 1.0)


def det(M):
    """LU determinant. Returns a Python float for real input, complex otherwise."""
    M = np.asarray(M)
    _check_square(M)
    LU, _, sign, _ = lu_factor(M)
    d = sign * np.prod(np.diag(LU))
    return complex(d) if np.iscomplexobj(M) else float(d)


def _lu_solve(LU, perm, B):
    n = LU.shape[0]
    X = np.array(B[perm], dtype=LU.dtype)
    for i in range(1, n):
        X[i] -= LU[i, :i] @ X[:i]
    for i in range(n - 1, -1, -1):
        X[i] -= LU[i, i + 1:] @ X[i + 1:]
        X[i] /= LU[i, i]
    return X


def solve(M, B):
    M = np.asarray(M)
    LU, perm, _, ratio = lu_factor(M)
    if ratio < PIVOT_RTOL:
        raise SingularMatrix(f"pivot ratio {ratio:.3e} below {PIVOT_RTOL:g}")
    B = np.asarray(B)
    out = _lu_solve(LU, perm, B.reshape(B.shape[0], -1))
    return out.reshape(B.shape) if B.ndim == 1 else out


def invert(M) -> np.ndarray:
    """Inverse via partial-pivot LU; raises SingularMatrix on a tiny pivot."""
    M = np.asarray(M)
    _check_square(M)
    return solve(M, np.eye(M.shape[0], dtype=M.dtype))


def eigenvalues(M) -> np.ndarray:
    """All eigenvalues (with multiplicity) as a complex array.

    LAPACK's geev does the Hessenberg reduction and shifted QR sweeps.
    """
    M = np.asarray(M)
    _check_square(M)
    if M.shape[0] > 64:
        raise ValueError("dimension above 64 is out of scope")
    try:
        ev = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return np.asarray(ev, dtype=np.complex128)


def fro(M) -> float:
    return float(np.linalg.norm(M))


def blockdiag(*blocks) -> np.ndarray:
    blocks = [np.atleast_2d(np.asarray(b)) for b in blocks]
    dtype = np.result_type(*blocks, np.float64)
    n = sum(b.shape[0] for b in blocks)
    m = sum(b.shape[1] for b in blocks)
    out = np.zeros((n, m), dtype=dtype)
    i = j = 0
    for b in blocks:
        out[i:i + b.shape[0], j:j + b.shape[1]] = b
        i += b.shape[0]
        j += b.shape[1]
    return out


def random_matrix(rng: np.random.Generator, rows: int, cols: int | None = None,
                  field: Field = REAL) -> np.ndarray:
    """Entries uniform in [-1, 1] (real) or the unit disc (complex)."""
    cols = rows if cols is None else cols
    if field == REAL:
        return rng.uniform(-1.0, 1.0, size=(rows, cols))
    r = np.sqrt(rng.uniform(0.0, 1.0, size=(rows, cols)))
    phi = rng.uniform(0.0, 2 * np.pi, size=(rows, cols))
    return r * np.exp(1j * phi)


def random_invertible(rng, n: int, field: Field = REAL, min_abs_det: float = 1e-6):
    while True:
        M = random_matrix(rng, n, n, field)
        if abs(det(M)) >= min_abs_det:
            return M


# --- JSON -------------------------------------------------------------------

def scalar_to_json(x) -> list[float]:
    x = complex(x)
    return [x.real, x.imag]


def scalar_from_json(obj) -> complex | float:
    if isinstance(obj, (list, tuple)):
        re, im = obj
        return complex(re, im) if im else float(re)
    return obj


def matrix_to_json(M) -> dict:
    M = np.asarray(M)
    field = field_of(M)
    if field == REAL:
        data = [float(v) for v in M.ravel()]
    else:
        data = [[float(v.real), float(v.imag)] for v in M.ravel()]
    return {"field": field, "rows": int(M.shape[0]), "cols": int(M.shape[1]), "data": data}


def matrix_from_json(obj: dict) -> np.ndarray:
    field = obj["field"]
    rows, cols = int(obj["rows"]), int(obj["cols"])
    data = obj["data"]
    if len(data) != rows * cols:
        raise ValueError(f"data has {len(data)} entries, expected {rows * cols}")
    vals = []
    for v in data:
        if isinstance(v, (list, tuple)):
            vals.append(complex(v[0], v[1]))
        else:
            vals.append(v)
    if field == REAL:
        if any(isinstance(v, complex) and v.imag != 0 for v in vals):
            raise FieldMismatch("real matrix with nonzero imaginary parts")
        vals = [v.real if isinstance(v, complex) else v for v in vals]
    return as_matrix(np.array(vals).reshape(rows, cols), field)

