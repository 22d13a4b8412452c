"""Inhomogeneous Kronecker approximation and scalar-matrix words.

``kronecker_approx`` finds integers with |rho - m*theta - n| < eps. The
search bound comes from the continued-fraction convergents of theta: with
N = q_k + q_{k-1} the points {m*theta}, 0 <= m < N, leave no gap wider than
||q_{k-1} theta|| (three-gap theorem), so once that falls below eps a scan
over N consecutive m is guaranteed to succeed.
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction

import numpy as np

from .errors import NotFoundWithinBound, WordOverflow
from .words import Word, evaluate_word

SCAN_LIMIT = 10 ** 6
RATIONAL_Q_MAX = 10 ** 4
RATIONAL_TOL = 1e-10


class SignMode(str, enum.Enum):
    FreeIntegers = "free"
    PositiveCoefficients = "positive"


def continued_fraction(x: float, max_terms: int = 40) -> list[int]:
    terms = []
    for _ in range(max_terms):
        a = math.floor(x)
        terms.append(int(a))
        frac = x - a
        if frac < 1e-12:
            break
        x = 1.0 / frac
        if x > 1e15:
            break
    return terms


def convergents(x: float, max_terms: int = 40):
    """Yield (p_k, q_k) for the continued fraction of x."""
    p0, q0, p1, q1 = 1, 0, 0, 1
    for a in continued_fraction(x, max_terms):
        p0, q0, p1, q1 = a * p0 + p1, a * q0 + q1, p0, q0
        yield p0, q0


def looks_rational(theta: float, q_max: int = RATIONAL_Q_MAX, tol: float = RATIONAL_TOL):
    """Return p/q if |q*theta - p| <= tol*max(1, |q*theta|) for some q <= q_max."""
    q = np.arange(1, q_max + 1, dtype=np.float64)
    qt = q * theta
    resid = np.abs(qt - np.round(qt))
    hits = np.nonzero(resid <= tol * np.maximum(1.0, np.abs(qt)))[0]
    if hits.size:
        qq = int(q[hits[0]])
        return Fraction(int(round(qq * theta)), qq)
    return None


def search_bound(theta: float, eps: float) -> int | None:
    """N such that m in [0, N) puts {m theta} within eps of every point of [0, 1)."""
    prev_q = 0
    for p, q in convergents(theta):
        if q > SCAN_LIMIT:
            return None
        # ||q theta|| for this convergent bounds the gaps of the next window
        if prev_q and abs(prev_q * theta - round(prev_q * theta)) < eps:
            return q + prev_q
        prev_q = q
    return None


def _scan(theta, rho, ms):
    r = rho - ms * theta
    n = np.round(r)
    return n, np.abs(r - n)


def _best_in(theta, rho, ms, eps):
    n, err = _scan(theta, rho, ms.astype(np.float64))
    ok = np.nonzero(err < eps)[0]
    if ok.size:
        # smallest |m| first, then smallest error
        i = ok[np.lexsort((err[ok], np.abs(ms[ok])))[0]]
        return int(ms[i]), int(n[i]), float(err[i])
    i = int(np.argmin(err))
    return None, int(n[i]), float(err[i])


def _check_theta(theta):
    frac = looks_rational(theta)
    if frac is not None:
        raise ValueError(f"theta = {theta!r} is numerically rational ({frac})")


def kronecker_approx(theta, rho: float, eps: float, sign_mode=SignMode.FreeIntegers):
    """Integers (m, n) with |rho - m*theta - n| < eps.

    In PositiveCoefficients mode ``theta`` is the pair (alpha, beta) with
    alpha > 0 > beta, ``rho`` is gamma, and the result (k, l) satisfies
    k, l >= 1 and |k*alpha + l*beta - gamma| < eps.
    """
    if SignMode(sign_mode) == SignMode.PositiveCoefficients:
        alpha, beta = theta
        return positive_combination(alpha, beta, rho, eps)
    if not eps > 1e-12:
        raise ValueError("eps must exceed 1e-12")
    theta = float(theta)
    _check_theta(theta)
    N = search_bound(abs(theta), eps)
    best_err = math.inf
    if N is not None:
        ms = np.arange(-N, N + 1, dtype=np.int64)
        m, n, err = _best_in(theta, rho, ms, eps)
        if m is not None:
            return m, n
        best_err = err
    ms = np.arange(-SCAN_LIMIT, SCAN_LIMIT + 1, dtype=np.int64)
    m, n, err = _best_in(theta, rho, ms, eps)
    if m is not None:
        return m, n
    raise NotFoundWithinBound(f"no |m| <= {SCAN_LIMIT} within {eps}", min(best_err, err), SCAN_LIMIT)


def positive_combination(alpha: float, beta: float, gamma: float, eps: float, min_l: int = 1,
                         max_span: int = SCAN_LIMIT):
    """(k, l) with k, l >= 1, min_l <= l <= min_l + max_span and
    |k*alpha + l*beta - gamma| < eps."""
    if not (alpha > 0 > beta):
        raise ValueError("need alpha > 0 > beta")
    if not eps > 1e-12:
        raise ValueError("eps must exceed 1e-12")
    theta = -beta / alpha
    _check_theta(theta)
    rho = gamma / alpha
    tol = eps / alpha
    # k = l*theta + rho rounded; scan l upward from the smallest admissible
    l0 = max(1, int(min_l))
    # k >= 1 needs l*theta + rho > 1/2
    l0 = max(l0, int(math.ceil((0.5 - rho) / theta)) if rho < 0.5 else l0)
    N = search_bound(theta, tol)
    spans = [N] if N is not None and N < max_span else []
    spans.append(max_span)
    best = math.inf
    for span in spans:
        ls = np.arange(l0, l0 + span + 1, dtype=np.float64)
        r = rho + ls * theta
        k = np.round(r)
        err = np.abs(r - k) * alpha
        ok = np.nonzero((err < eps) & (k >= 1))[0]
        if ok.size:
            i = ok[0]
            return int(k[i]), int(ls[i])
        best = min(best, float(err.min()))
    raise NotFoundWithinBound(f"no l in [{l0}, {l0 + max_span}] within {eps}", best, max_span)


# --- scalar matrices from the real 2x2 pair -------------------------------------

C_WORD = Word.parse("A B A^3 B A")  # evaluates to diag(4/9, 1)


def _squared_word(k, l):
    return (C_WORD * l + Word.of(("A", 1), ("B", k))) * 2


# keeps the prescribed words short; longer ones are ruined by rounding anyway
DIRECT_L_SPAN = 400


def _negative_scalar_word(d, eps, pair, max_rounds=4):
    from .generators import CASEN2_A, CASEN2_B, CASEN2_E

    a, b, e = CASEN2_A, CASEN2_B, CASEN2_E
    c = 4.0 / 9.0
    target = d * np.eye(2)
    delta = eps / 4
    mu = eps / (4 * (1 + abs(d)))
    best = None
    for _ in range(max_rounds):
        # c^l |a| <= mu, and b^k c^l e within delta of d
        min_l = max(1, math.ceil(math.log(mu / abs(a)) / math.log(c)))
        log_tol = 0.5 * delta / abs(d)
        try:
            k, l = positive_combination(math.log(b), math.log(c), math.log(d / e), log_tol,
                                        min_l=min_l, max_span=DIRECT_L_SPAN)
        except NotFoundWithinBound:
            break
        w = _squared_word(k, l)
        try:
            err = float(np.linalg.norm(evaluate_word(w, pair) - target))
        except WordOverflow:
            err = math.inf
        if best is None or err < best[1]:
            best = (w, err)
        if err < eps:
            break
        delta /= 4
        mu /= 4
    return best if best is not None else (None, math.inf)


# A squared word S(k, l) = (C^l A B^k)^2 is close to X I with X = c^l b^k e < 0,
# off by about c^l |a| (1 + |X|). In floating point C is diagonal only to
# ~1e-16 and B^k amplifies that by b^k, so single words stall near 1e-2.
# Splitting large exponent totals (K, L) over m factors, each with l near
# SPLIT_L where the two effects balance, keeps every factor accurate to ~1e-8.
SPLIT_L = (16, 30)
MAX_FACTORS = 1000
MAX_SPLIT_EVALS = 6


def _split_word(K, L, m):
    letters = []
    for i in range(m):
        k = K // m + (1 if i < K % m else 0)
        l = L // m + (1 if i < L % m else 0)
        letters.extend(_squared_word(k, l).letters)
    return Word(tuple(letters))


def _split_scalar_word(d, eps, pair):
    from .generators import CASEN2_B, CASEN2_E

    alpha, beta = math.log(CASEN2_B), math.log(4.0 / 9.0)
    tol = eps / (4 * abs(d))
    target = d * np.eye(2)
    best = (None, math.inf)
    m = 1 if d < 0 else 2
    evals = 0
    while m <= MAX_FACTORS and evals < MAX_SPLIT_EVALS:
        gamma = math.log(abs(d)) - m * math.log(-CASEN2_E)
        lo, hi = SPLIT_L[0] * m, SPLIT_L[1] * m
        try:
            K, L = positive_combination(alpha, beta, gamma, tol, min_l=lo, max_span=hi - lo)
        except NotFoundWithinBound:
            K = None
        if K is not None and K >= m:
            w = _split_word(K, L, m)
            evals += 1
            try:
                err = float(np.linalg.norm(evaluate_word(w, pair) - target))
            except WordOverflow:
                err = math.inf
            if err < best[1]:
                best = (w, err)
            if err < eps:
                break
        # sign of the product is (-1)^m
        m += 2
    return best


def scalar_word(d: float, eps: float, pair=None) -> Word:
    """Word over the real 2x2 pair evaluating to within eps of d*I (Frobenius).

    d < 0: (C^l A B^k)^2 with C = A B A^3 B A = diag(4/9, 1), where
    (8/3)^k (4/9)^l e ~ d and (4/9)^l is small. d > 0: square the word for
    -sqrt(d). When rounding keeps these from reaching eps, products of
    several moderate squares are used instead.
    """
    from .generators import casen2_pair

    if d == 0:
        raise ValueError("d must be nonzero")
    if not eps > 1e-10:
        raise ValueError("eps must exceed 1e-10")
    pair = casen2_pair() if pair is None else pair
    target = d * np.eye(2)
    if d < 0:
        w, err = _negative_scalar_word(d, eps, pair)
    else:
        r = math.sqrt(d)
        inner = _negative_scalar_word(-r, eps / (2 * r + 1), pair)[0]
        w, err = None, math.inf
        if inner is not None:
            w = inner * 2
            try:
                err = float(np.linalg.norm(evaluate_word(w, pair) - target))
            except WordOverflow:
                pass
    if err >= eps:
        alt = _split_scalar_word(d, eps, pair)
        if alt[1] < err:
            w, err = alt
    if err >= eps:
        raise NotFoundWithinBound(f"scalar word for d={d} reached only {err:.3e}", err, None)
    return w
