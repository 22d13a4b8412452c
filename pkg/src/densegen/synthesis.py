"""Word synthesis: find a word over a generator pair close to a target matrix.

Three routes, tried in order and the best result kept:

beam search
    breadth over word length, exponents 1..4 per step, deduplicated by a
    quantized fingerprint and pruned to a norm shell around the target.

embedding
    for ladder pairs whose lower level embeds cleanly, a target of the form
    diag(M, 1) is solved one level down and the word translated up.

Υ-route
    plan the target's Υ value, realize the plan as products of rank-one
    bordered matrices, move each realized factor onto the fiber of the
    pair's own elements with block-diagonal sandwiches, then approximate
    every sandwich factor one level down.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import numkernel as nk
from .diophantine import scalar_word
from .errors import DensegenError, NotFoundWithinBound, ScopeError
from .generators import DensityScope, GeneratorPair
from .planner import (
    SEED,
    Combine,
    CombinePlan,
    ProductRealize,
    Ref,
    Surrogate,
    minus_factors,
    plan_complex_point,
    plan_real_minus,
    plan_real_plus,
    refine_plan,
    split_z,
)
from .upsilon import (
    UpsilonPoint,
    classify,
    fiber_perturb,
    is_I,
    join,
    realize_combine,
    same_fiber_factor,
    split,
    upsilon_of,
)
from .words import Word, WordOverflow, evaluate_word

FINGERPRINT_GRID = 1e-4
SHELL_RHO = 1e3
SHELL_WARMUP = 8
MAX_EXPONENT = 4
# surrogate parameter used when realizing plans; refine_plan removes its error
REALIZE_T = 0.05


@dataclass(frozen=True)
class SearchBudget:
    max_evaluations: int = 10 ** 6
    max_word_length: int = 64
    beam_width: int = 1024

    def __post_init__(self):
        if min(self.max_evaluations, self.max_word_length, self.beam_width) <= 0:
            raise ValueError("budget fields must be positive")

    def to_json(self):
        return {"max_evaluations": self.max_evaluations, "max_word_length": self.max_word_length,
                "beam_width": self.beam_width}


@dataclass
class ApproxResult:
    word: Word
    achieved_error: float
    target_norm: float
    evaluations: int
    wall_budget_used: float
    flags: list = field(default_factory=list)
    route: str = "beam"

    def hit(self, eps) -> bool:
        return self.achieved_error <= eps

    def to_json(self) -> dict:
        return {
            "word": self.word.to_json(),
            "word_text": str(self.word),
            "achieved_error": self.achieved_error,
            "target_norm": self.target_norm,
            "evaluations": self.evaluations,
            "wall_budget_used": self.wall_budget_used,
            "flags": list(self.flags),
            "route": self.route,
        }


def word_error(w: Word, pair, target) -> float:
    try:
        return float(np.linalg.norm(evaluate_word(w, pair) - target))
    except WordOverflow:
        return math.inf


# --- beam search ----------------------------------------------------------------

def _fingerprints(mats):
    q = np.round(mats / FINGERPRINT_GRID)
    if np.iscomplexobj(q):
        q = np.concatenate([q.real, q.imag], axis=-1)
    q = np.nan_to_num(q, nan=0.0, posinf=1e300, neginf=-1e300)
    return [row.tobytes() for row in q.reshape(len(mats), -1)]


class _Level:
    """Beam states of one word length: matrices plus run-length letters."""

    def __init__(self, mats, words):
        self.mats = mats
        self.words = words  # tuples of (gen, exp)


def _may_append(word, g):
    # canonical generation: a run is extended only from a multiple of
    # MAX_EXPONENT, so each word arises from exactly one parent
    if not word:
        return True
    last_g, last_e = word[-1]
    return last_g != g or last_e % MAX_EXPONENT == 0


def _append(word, g, e):
    if word and word[-1][0] == g:
        return word[:-1] + ((g, word[-1][1] + e),)
    return word + ((g, e),)


def beam_search(target, pair: GeneratorPair, eps: float, budget: SearchBudget | None = None,
                rho: float = SHELL_RHO, warmup: int = SHELL_WARMUP, seeds=()) -> ApproxResult:
    """Best-effort search over words by increasing length.

    Level L is built from levels L-1..L-4 by appending a generator power;
    the search stops at the first word within eps (evaluations counted in
    generation order), or when the budget runs out. ``seeds`` are extra
    starting words (e.g. long scalar words) evaluated before the search
    and expanded alongside the empty word.
    """
    budget = budget or SearchBudget()
    T = np.asarray(target)
    if T.shape != (pair.dim, pair.dim):
        raise ValueError(f"target shape {T.shape} does not match pair dimension {pair.dim}")
    dtype = np.result_type(pair.A, pair.B, T)
    T = T.astype(dtype)
    tnorm = float(np.linalg.norm(T))
    powers = {}
    for g, G in (("A", pair.A), ("B", pair.B)):
        P = np.eye(pair.dim, dtype=dtype)
        for e in range(1, MAX_EXPONENT + 1):
            P = P @ G
            powers[g, e] = P
    root_mats, root_words = [np.eye(pair.dim, dtype=dtype)], [()]
    best_err, best_word = math.inf, ()
    evals = 0
    hit = None
    for sw in seeds:
        if evals >= budget.max_evaluations:
            break
        try:
            M = evaluate_word(sw, pair).astype(dtype)
        except WordOverflow:
            continue
        evals += 1
        err = float(np.linalg.norm(M - T))
        if err < best_err:
            best_err, best_word = err, sw.letters
        if err <= eps:
            hit = sw.letters
            break
        root_mats.append(M)
        root_words.append(sw.letters)
    levels = {0: _Level(np.stack(root_mats), root_words)}
    seen = set(_fingerprints(levels[0].mats))
    lo, hi = tnorm / rho, tnorm * rho
    for L in range(1, budget.max_word_length + 1 if hit is None else 1):
        mats_parts, words, errs_parts = [], [], []
        for e in range(1, MAX_EXPONENT + 1):
            par = levels.get(L - e)
            if par is None:
                continue
            for g in ("A", "B"):
                idx = [i for i, w in enumerate(par.words) if _may_append(w, g)]
                if not idx:
                    continue
                room = budget.max_evaluations - evals
                if room <= 0:
                    break
                idx = idx[:room]
                batch = par.mats[idx] @ powers[g, e]
                errs = np.linalg.norm(batch - T, axis=(1, 2))
                errs = np.where(np.isfinite(errs), errs, np.inf)
                ok = np.nonzero(errs <= eps)[0]
                if ok.size:
                    j = int(ok[0])
                    evals += j + 1
                    hit = _append(par.words[idx[j]], g, e)
                    break
                evals += len(idx)
                mats_parts.append(batch)
                errs_parts.append(errs)
                words.extend(_append(par.words[i], g, e) for i in idx)
            if hit is not None or evals >= budget.max_evaluations:
                break
        if hit is not None:
            break
        if not words:
            break
        mats = np.concatenate(mats_parts)
        errs = np.concatenate(errs_parts)
        i_best = int(np.argmin(errs))
        if errs[i_best] < best_err or (errs[i_best] == best_err and words[i_best] < best_word):
            best_err, best_word = float(errs[i_best]), words[i_best]
        if evals >= budget.max_evaluations:
            break
        norms = np.linalg.norm(mats, axis=(1, 2))
        keep = np.isfinite(norms)
        if L > warmup:
            keep &= (norms >= lo) & (norms <= hi)
        cand = np.nonzero(keep)[0]
        # (error, word) order makes the beam and the dedup winner deterministic
        cand = sorted(cand, key=lambda i: (errs[i], words[i]))
        fps = _fingerprints(mats[cand]) if cand else []
        chosen = []
        for i, fp in zip(cand, fps):
            if fp in seen:
                continue
            seen.add(fp)
            chosen.append(i)
            if len(chosen) >= budget.beam_width:
                break
        levels[L] = _Level(mats[chosen], [words[i] for i in chosen])
        levels.pop(L - MAX_EXPONENT, None)
    w = Word(hit if hit is not None else best_word)
    err = word_error(w, pair, T)
    flags = [] if err <= eps else ["miss"]
    if evals >= budget.max_evaluations and err > eps:
        flags.append("budget-exhausted")
    return ApproxResult(w, err, tnorm, evals, evals / budget.max_evaluations, flags, "beam")


# --- embedding of the lower level ------------------------------------------------

_SWAP2 = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class Embedding:
    """diag(M, 1) = word(upper) when lower_word evaluates to conj(M)."""
    lower: GeneratorPair
    mapping: dict

    def lower_target(self, M):
        return _SWAP2 @ M @ _SWAP2 if self.mapping["A"] == Word.parse("B") else M

    def lift(self, w: Word) -> Word:
        return w.substitute(self.mapping)


def embedding_for(pair: GeneratorPair) -> Embedding | None:
    """The clean embedding of the lower level, if the pair has one.

    Clean means the corner stays exactly 1 for every word, so diag(M, 1)
    is reachable for every M the lower pair reaches.
    """
    low = pair.lower
    if low is None:
        return None
    n = pair.dim - 1
    if pair.kind == "casen3":
        # A^2 = diag(P B2 P, 1) and E = diag(P A2 P, 1) with P the swap
        return Embedding(low, {"A": Word.parse("B"), "B": Word.parse("A^2")})
    C2 = pair.A @ pair.A
    D = pair.B
    clean = (np.allclose(C2[:n, :n], low.A, atol=1e-10) and abs(C2[n, n] - 1) < 1e-12
             and np.allclose(D[:n, :n], low.B, atol=1e-12) and abs(D[n, n] - 1) < 1e-12
             and np.allclose(C2[:n, n], 0, atol=1e-10) and np.allclose(C2[n, :n], 0, atol=1e-10))
    if not clean:
        return None
    return Embedding(low, {"A": Word.parse("A^2"), "B": Word.parse("B")})


def _is_embedded_shape(T, tol):
    n = T.shape[0] - 1
    return (np.linalg.norm(T[:n, n]) <= tol and np.linalg.norm(T[n, :n]) <= tol
            and abs(T[n, n] - 1) <= tol)


# --- the Υ-route ---------------------------------------------------------------------

class _Expr:
    """Ordered product of fixed words ("w", Word) and sandwich blocks ("s", F)."""

    def __init__(self, items, matrix):
        self.items = items
        self.matrix = matrix


class _Realizer:
    def __init__(self, pair: GeneratorPair):
        self.pair = pair
        self.n = pair.dim - 1
        self.real = pair.field == nk.REAL
        seed = upsilon_of(split(pair.A))
        if seed.distance(SEED) > 1e-9:
            raise ScopeError(f"generator A has Υ = {tuple(seed)}, not the planner seed")
        self.seed_expr = _Expr([("w", Word.parse("A"))], pair.A)

    def operand(self, x, outs):
        if isinstance(x, Ref):
            return outs[x.step]
        if UpsilonPoint(*x).distance(SEED) > 1e-12:
            raise ScopeError(f"plan operand {tuple(x)} is not the seed")
        return self.seed_expr

    def combine(self, ep: _Expr, eq: _Expr, r, s) -> _Expr:
        p = upsilon_of(split(ep.matrix))
        q = upsilon_of(split(eq.matrix))
        M1, M2, M = realize_combine(p, q, r, s, self.n, self.pair.field)
        L1, R1 = same_fiber_factor(ep.matrix, M1, positive=self.real)
        L2, R2 = same_fiber_factor(eq.matrix, M2, positive=self.real)
        n = self.n
        items = [("s", L1[:n, :n])] + ep.items + [("s", (R1 @ L2)[:n, :n])] + eq.items + [("s", R2[:n, :n])]
        return _Expr(items, M)

    def fit(self, expr: _Expr, G) -> _Expr:
        """Sandwich expr onto the fiber of G: S_L expr S_R == G."""
        L, R = same_fiber_factor(expr.matrix, G, positive=self.real)
        n = self.n
        return _Expr([("s", L[:n, :n])] + expr.items + [("s", R[:n, :n])], np.asarray(G))

    def realize(self, plan: CombinePlan) -> _Expr:
        outs: list[_Expr] = []
        for st in plan.steps:
            if isinstance(st, Combine):
                outs.append(self.combine(self.operand(st.p, outs), self.operand(st.q, outs), st.r, st.s))
            elif isinstance(st, Surrogate):
                b = self.operand(st.base, outs)
                outs.append(self.combine(b, b, *split_z(st.param, self.real)))
            elif isinstance(st, ProductRealize):
                outs.append(self.realize_minus(st))
            else:
                raise TypeError(f"unknown step {st!r}")
        return outs[-1]

    def realize_minus(self, st: ProductRealize) -> _Expr:
        M1, M2 = minus_factors(st.c, st.d, st.v, self.n)
        parts = []
        for M in (M1, M2):
            sub = refine_plan(plan_real_plus(*upsilon_of(split(M)), t=REALIZE_T))
            parts.append(self.fit(self.realize(sub), M))
        return _Expr(parts[0].items + parts[1].items, M1 @ M2)


def _simplify(items):
    """Merge adjacent sandwich blocks and drop identities."""
    out = []
    for kind, val in items:
        if kind == "s" and out and out[-1][0] == "s":
            out[-1] = ("s", out[-1][1] @ val)
        elif kind == "w" and out and out[-1][0] == "w":
            out[-1] = ("w", out[-1][1] + val)
        else:
            out.append((kind, val))
    res = []
    for kind, val in out:
        if kind == "s" and np.linalg.norm(val - np.eye(val.shape[0])) <= 1e-13:
            continue
        if res and res[-1][0] == kind == "w":
            res[-1] = ("w", res[-1][1] + val)
        else:
            res.append((kind, val))
    return res


def plan_for_target(T, t: float = REALIZE_T):
    """Refined plan for Υ(T) in the mode fixed by the field and sign of det F."""
    B = split(T)
    u, v = upsilon_of(B)
    if np.iscomplexobj(T):
        return refine_plan(plan_complex_point(u, v, t))
    if nk.det(B.F) > 0:
        return refine_plan(plan_real_plus(u, v, t))
    return plan_real_minus(u, v)


def _nudge_into_I(T, delta):
    """A nearby matrix whose bordered split is in I_n (invertible F, a != 0)."""
    B = split(T)
    n = B.n
    F = B.F
    if abs(nk.det(F)) <= 1e-9 * max(1.0, np.linalg.norm(F)) ** n:
        F = F + delta * np.eye(n)
    Bp = type(B)(F, B.X, B.Y, B.eta)
    if not is_I(classify(Bp)):
        a = upsilon_of(Bp).a
        Bp = fiber_perturb(Bp, UpsilonPoint(a + delta, B.eta))
    return join(Bp)


# --- approx_matrix --------------------------------------------------------------

class _Synth:
    def __init__(self, budget: SearchBudget, deadline: float | None):
        self.budget = budget
        self.evaluations = 0
        self.deadline = deadline
        self.cache: dict = {}

    def remaining(self):
        return max(0, self.budget.max_evaluations - self.evaluations)

    def sub_budget(self, share):
        return SearchBudget(max(1, int(share)), self.budget.max_word_length, self.budget.beam_width)

    def approx(self, T, pair: GeneratorPair, eps: float, share: int | None = None) -> ApproxResult:
        key = (pair.pair_id, np.round(np.asarray(T) / 1e-12).tobytes(), eps)
        if key in self.cache:
            return self.cache[key]
        share = self.remaining() if share is None else min(share, self.remaining())
        res = self._approx(np.asarray(T), pair, eps, max(share, 1))
        self.cache[key] = res
        return res

    def _approx(self, T, pair, eps, share):
        flags = []
        if pair.density_scope == DensityScope.Unvalidated:
            flags.append("unvalidated-scope")
        if (pair.field == nk.REAL and pair.density_scope == DensityScope.PositiveDeterminant
                and nk.det(T) <= 0):
            raise ScopeError("this pair is only dense among matrices with positive determinant")
        cands = []
        beam_share = share if pair.dim <= 2 else max(1, share // 4)
        seeds = ()
        if pair.dim == 2 and pair.field == nk.REAL and pair.kind == "casen2":
            seed = self._scalar_seed(T, eps)
            seeds = (seed,) if seed is not None else ()
        res = beam_search(T, pair, eps, self.sub_budget(beam_share), seeds=seeds)
        self.evaluations += res.evaluations
        cands.append(res)
        if res.achieved_error <= eps:
            res.flags = flags + res.flags
            return res
        if pair.dim >= 3:
            emb = embedding_for(pair)
            if emb is None:
                flags.append("no-reduction-route")
            else:
                if _is_embedded_shape(T, eps / 4):
                    cands.append(self._embedded_route(T, pair, emb, eps))
                if not cands[-1].achieved_error <= eps:
                    cands.append(self._upsilon_route(T, pair, emb, eps))
        cands = [c for c in cands if c is not None]
        best = min(cands, key=lambda r: (r.achieved_error, len(r.word)))
        out = ApproxResult(best.word, best.achieved_error, float(np.linalg.norm(T)),
                           self.evaluations, self.evaluations / self.budget.max_evaluations,
                           flags + [f for f in best.flags if f not in ("miss", "budget-exhausted")],
                           best.route)
        if out.achieved_error > eps:
            out.flags.append("miss")
            if self.remaining() == 0:
                out.flags.append("budget-exhausted")
        return out

    @staticmethod
    def _scalar_seed(T, eps):
        """A scalar word near T when T is within eps/2 of a multiple of I."""
        d = float(np.trace(T).real / 2)
        if d == 0 or np.linalg.norm(T - d * np.eye(2)) > eps / 2:
            return None
        try:
            return scalar_word(d, eps / 2)
        except (NotFoundWithinBound, ValueError):
            return None

    def _embedded_route(self, T, pair, emb: Embedding, eps):
        n = pair.dim - 1
        try:
            sub = self.approx(emb.lower_target(T[:n, :n]), emb.lower, eps / 2)
        except DensegenError as exc:
            return ApproxResult(Word(), math.inf, float(np.linalg.norm(T)), self.evaluations, 0.0,
                                [f"embedding-failed: {type(exc).__name__}"], "embedding")
        w = emb.lift(sub.word)
        return ApproxResult(w, word_error(w, pair, T), float(np.linalg.norm(T)), self.evaluations,
                            0.0, [], "embedding")

    def _upsilon_route(self, T, pair, emb: Embedding, eps):
        tnorm = float(np.linalg.norm(T))
        fail = lambda why: ApproxResult(Word(), math.inf, tnorm, self.evaluations, 0.0,  # noqa: E731
                                        [f"upsilon-route-failed: {why}"], "upsilon")
        if self.deadline is not None and time.monotonic() > self.deadline:
            return fail("deadline")
        try:
            Tp = _nudge_into_I(T, eps / 8)
            plan = plan_for_target(Tp)
            end = plan.evaluate()
            if end.distance(upsilon_of(split(Tp))) > 1e-10:
                Tp = join(fiber_perturb(split(Tp), end))
            rz = _Realizer(pair)
            expr = rz.fit(rz.realize(plan), Tp)
        except DensegenError as exc:
            return fail(type(exc).__name__)
        items = _simplify(expr.items)
        mats = []
        for kind, val in items:
            if kind == "w":
                mats.append(evaluate_word(val, pair))
            else:
                mats.append(nk.blockdiag(val, np.ones((1, 1), dtype=val.dtype)))
        k = sum(1 for kind, _ in items if kind == "s")
        if k == 0:
            w = Word(tuple(l for _, v in items for l in v.letters))
            return ApproxResult(w, word_error(w, pair, T), tnorm, self.evaluations, 0.0, [], "upsilon")
        # first-order budget: an error D in factor i moves the product by about
        # |prefix_i| |D| |suffix_i|; split eps equally with a 2x safety factor
        prefix = [np.eye(pair.dim)]
        for M in mats:
            prefix.append(prefix[-1] @ M)
        suffix = [np.eye(pair.dim)]
        for M in reversed(mats):
            suffix.append(M @ suffix[-1])
        suffix = suffix[::-1]
        residual = max(eps - float(np.linalg.norm(prefix[-1] - T)), eps / 2)
        share = max(1, self.remaining() // k)
        words = []
        for i, (kind, val) in enumerate(items):
            if kind == "w":
                words.append(val)
                continue
            amp = float(np.linalg.norm(prefix[i])) * float(np.linalg.norm(suffix[i + 1]))
            sub_eps = residual / (2 * k * max(amp, 1e-12))
            try:
                sub = self.approx(emb.lower_target(val), emb.lower, sub_eps, share)
            except DensegenError as exc:
                return fail(type(exc).__name__)
            words.append(emb.lift(sub.word))
        w = Word(tuple(l for v in words for l in v.letters))
        return ApproxResult(w, word_error(w, pair, T), tnorm, self.evaluations, 0.0, [], "upsilon")


def approx_matrix(target, pair: GeneratorPair, eps: float, budget: SearchBudget | None = None,
                  time_limit: float | None = None) -> ApproxResult:
    """Best-effort word for ``target``; the receipt's error is recomputed on the word."""
    budget = budget or SearchBudget()
    T = np.asarray(target)
    if T.shape != (pair.dim, pair.dim):
        raise ValueError(f"target shape {T.shape} does not match pair dimension {pair.dim}")
    if pair.field == nk.REAL and np.iscomplexobj(T):
        if np.max(np.abs(T.imag)) > 0:
            raise nk.FieldMismatch("complex target for a real pair")
        T = T.real
    if pair.density_scope == DensityScope.Unvalidated:
        warnings.warn(f"pair {pair.pair_id} has no validated density claim", stacklevel=2)
    deadline = None if time_limit is None else time.monotonic() + time_limit
    synth = _Synth(budget, deadline)
    res = synth.approx(T, pair, eps)
    # honest receipt at the top level
    res.achieved_error = word_error(res.word, pair, T)
    res.evaluations = synth.evaluations
    res.wall_budget_used = synth.evaluations / budget.max_evaluations
    return res
