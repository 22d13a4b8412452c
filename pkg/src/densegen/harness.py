"""Experiments: empirical density, the (n+1)-tuple obstruction, n-transitivity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import numkernel as nk
from .errors import ScopeError
from .generators import DensityScope, GeneratorPair
from .rng import SplitMix64
from .synthesis import ApproxResult, SearchBudget, approx_matrix
from .words import Word, evaluate_word

QUANTILES = (0.0, 0.25, 0.5, 0.75, 1.0)
SUPPORT_HIT_RATE = 0.9


@dataclass
class DensityReport:
    pair_id: str
    dimension: int
    field: str
    samples: int
    eps: float
    hit_rate: float
    error_quantiles: list
    budget: dict
    seed: int
    suite: str = "random"
    excluded: list = field(default_factory=list)
    witness: "DensityReport | None" = None

    def to_json(self) -> dict:
        out = {
            "pair_id": self.pair_id,
            "dimension": self.dimension,
            "field": self.field,
            "suite": self.suite,
            "samples": self.samples,
            "eps": self.eps,
            "hit_rate": self.hit_rate,
            "error_quantiles": [[q, e] for q, e in zip(QUANTILES, self.error_quantiles)],
            "budget": self.budget,
            "seed": self.seed,
            "excluded": list(self.excluded),
        }
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


def sample_target(rng: SplitMix64, pair: GeneratorPair, max_tries: int = 1000) -> np.ndarray:
    """Gaussian entries scaled to Frobenius norm sqrt(n); det > 0 when the scope demands it."""
    n = pair.dim
    cplx = pair.field == nk.COMPLEX
    for _ in range(max_tries):
        T = rng.normal_matrix(n, n, cplx)
        T *= math.sqrt(n) / np.linalg.norm(T)
        if pair.density_scope != DensityScope.PositiveDeterminant or nk.det(T).real > 0:
            return T
    raise RuntimeError("could not sample a positive-determinant target")


def random_word(rng: SplitMix64, max_len: int) -> Word:
    L = rng.integers(1, max_len + 1)
    return Word(tuple(("A" if rng.integers(0, 2) == 0 else "B", 1) for _ in range(L)))


def witness_target(rng: SplitMix64, pair: GeneratorPair, max_len: int = 6, perturbation: float = 1e-3):
    """W + perturbation * N with W a short word's value and |N|_F = 1."""
    w = random_word(rng, max_len)
    W = evaluate_word(w, pair)
    N = rng.normal_matrix(pair.dim, pair.dim, pair.field == nk.COMPLEX)
    return w, W + perturbation * N / np.linalg.norm(N)


def _quantiles(errs):
    if not errs:
        return [math.nan] * len(QUANTILES)
    arr = np.array(errs, dtype=float)
    return [float(np.quantile(arr, q)) for q in QUANTILES]


def _run_suite(pair, targets, eps, budget, seed, suite):
    errs, excluded = [], []
    for i, T in enumerate(targets):
        try:
            res = approx_matrix(T, pair, eps, budget)
        except ScopeError as exc:
            excluded.append({"sample": i, "reason": type(exc).__name__, "note": str(exc)})
            continue
        errs.append(res.achieved_error)
    hits = sum(1 for e in errs if e <= eps)
    return DensityReport(pair.pair_id, pair.dim, pair.field, len(errs), eps,
                         hits / len(errs) if errs else math.nan, _quantiles(errs),
                         budget.to_json(), seed, suite, excluded)


def density_experiment(pair: GeneratorPair, samples: int, eps: float, budget: SearchBudget | None = None,
                       seed: int = 0, witness_samples: int = 100, witness_eps: float = 1e-2,
                       witness_len: int = 6, perturbation: float = 1e-3, targets=None) -> DensityReport:
    """Random-target suite plus a separately reported witness suite.

    ``targets`` overrides the random sampler (out-of-scope ones are
    recorded under ``excluded`` rather than raising).
    """
    budget = budget or SearchBudget()
    root = SplitMix64(seed)
    rand_rng, wit_rng = root.split(), root.split()
    if targets is None:
        targets = [sample_target(rand_rng, pair) for _ in range(samples)]
    report = _run_suite(pair, targets, eps, budget, seed, "random")
    if witness_samples:
        wt = [witness_target(wit_rng, pair, witness_len, perturbation)[1] for _ in range(witness_samples)]
        report.witness = _run_suite(pair, wt, witness_eps, budget, seed, "witness")
    return report


def promote_scope(pair: GeneratorPair, report: DensityReport, threshold: float = SUPPORT_HIT_RATE):
    """Mark an unvalidated pair as empirically supported when the random suite clears the bar."""
    if pair.density_scope == DensityScope.Unvalidated and report.hit_rate >= threshold:
        return replace(pair, density_scope=DensityScope.EmpiricallySupported)
    return pair


# --- the (n+1)-tuple obstruction ------------------------------------------------

@dataclass
class DependenceCheck:
    passed: bool
    alpha: np.ndarray
    max_residual: float
    bound: float
    trials: int

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "alpha": [nk.scalar_to_json(a) for a in self.alpha],
            "max_residual": self.max_residual,
            "bound": self.bound,
            "trials": self.trials,
        }


def null_coefficients(X) -> np.ndarray:
    """Unit alpha with sum alpha_i X_i ~ 0 (least right singular vector)."""
    S = np.column_stack([np.atleast_1d(np.asarray(x)) for x in X])
    _, _, Vh = np.linalg.svd(S)
    return Vh[-1].conj()


def dependence_invariant_check(X, F=None, trials: int = 100, rng=None, tol: float = 1e-9) -> DependenceCheck:
    """Any n+1 vectors in K^n are dependent, and every linear map keeps the relation.

    Checks |sum alpha_i F X_i| <= tol |F| max|X_i| for the given F (if any)
    and ``trials`` random maps of the same field.
    """
    X = [np.atleast_1d(np.asarray(x)) for x in X]
    n = X[0].shape[0]
    if len(X) != n + 1:
        raise ValueError(f"need {n + 1} vectors in dimension {n}, got {len(X)}")
    cplx = any(np.iscomplexobj(x) for x in X) or (F is not None and np.iscomplexobj(F))
    rng = rng if rng is not None else SplitMix64(0)
    alpha = null_coefficients(X)
    maps = [np.asarray(F)] if F is not None else []
    maps += [rng.normal_matrix(n, n, cplx) for _ in range(trials)]
    xmax = max(float(np.linalg.norm(x)) for x in X)
    worst = (-1.0, 0.0, 0.0)  # (resid / bound, resid, bound)
    for M in maps:
        resid = float(np.linalg.norm(sum(a * (M @ x) for a, x in zip(alpha, X))))
        b = tol * float(np.linalg.norm(M)) * xmax
        ratio = resid / b if b > 0 else (0.0 if resid == 0 else math.inf)
        if ratio > worst[0]:
            worst = (ratio, resid, b)
    return DependenceCheck(worst[0] <= 1.0, alpha, worst[1], worst[2], len(maps))


# --- n-transitivity ---------------------------------------------------------------

@dataclass
class TransitivityResult:
    word: Word
    distance: float
    success: bool
    M: np.ndarray
    resampled: int
    approx: ApproxResult

    def to_json(self) -> dict:
        return {
            "word": self.word.to_json(),
            "word_text": str(self.word),
            "distance": self.distance,
            "success": self.success,
            "M": nk.matrix_to_json(self.M),
            "resampled": self.resampled,
            "flags": list(self.approx.flags),
        }


def transitivity_demo(pair: GeneratorPair, U_center, V_center, radius: float,
                      budget: SearchBudget | None = None, rng=None, min_abs_det: float = 1e-6):
    """Find a word w with |eval(w) M - V_center| <= radius for some M near U_center.

    M is U_center itself when invertible, otherwise a point resampled in the
    U-ball until |det M| >= min_abs_det. The target is V_center M^-1.
    """
    rng = rng if rng is not None else SplitMix64(0)
    U = np.asarray(U_center)
    V = np.asarray(V_center)
    cplx = pair.field == nk.COMPLEX
    M, resampled = U, 0
    while abs(nk.det(M)) < min_abs_det:
        N = rng.normal_matrix(*U.shape, cplx)
        M = U + 0.5 * radius * N / np.linalg.norm(N)
        resampled += 1
        if resampled > 10000:
            raise RuntimeError("no invertible matrix found in the U-ball")
    T = V @ nk.invert(M)
    eps = radius / max(float(np.linalg.norm(M, 2)), 1e-300)
    res = approx_matrix(T, pair, eps, budget)
    dist = float(np.linalg.norm(evaluate_word(res.word, pair) @ M - V))
    return TransitivityResult(res.word, dist, dist <= radius, M, resampled, res)
