"""Plans that reach a target Υ value from the seed point of a generator pair.

A plan is a short program of :func:`combine_points` calls. Points that are
only limits of reachable ones (like (0, 1)) are replaced by a surrogate at
finite parameter ``t``; the plan then records how far its endpoint lands
from the target and the first-order rate ``K`` with error <= K*t.

Three regimes:

* complex: three stages through the surrogate (0, 1)
* real, det F > 0: a chain of real-guarded squares reaching (0, z), then
  the half-plane v > u, then the rest of the plane
* real, det F < 0: a single explicit product of two bordered matrices
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from . import numkernel as nk
from .errors import (
    DegenerateTarget,
    GuardViolation,
    NoAdmissibleC,
    PoleAtZ,
    PositivityViolated,
)
from .upsilon import POLE_GUARD, UpsilonPoint, combine_points, split, upsilon_of

SQRT2 = math.sqrt(2.0)
HALF_SQRT2 = SQRT2 / 2
SEED = UpsilonPoint(HALF_SQRT2, -HALF_SQRT2)
FOLD_DELTA = 1e-6
DEFAULT_T = 1e-5


class PlanMode(str, enum.Enum):
    ComplexFull = "ComplexFull"
    RealPlus = "RealPlus"
    RealMinus = "RealMinus"


@dataclass(frozen=True)
class Ref:
    """Operand that refers to the output of an earlier step."""
    step: int


@dataclass(frozen=True)
class Combine:
    p: object
    q: object
    r: complex
    s: complex

    @property
    def z(self):
        return self.r * self.s


@dataclass(frozen=True)
class Surrogate:
    """combine(base, base, z=param): a finite stand-in for a limit point."""
    base: object
    param: complex


@dataclass(frozen=True)
class ProductRealize:
    c: float
    d: float
    v: float


def split_z(z, real: bool):
    """Factor z = r*s with |r| = |s|."""
    if real:
        z = float(np.real(z))
        m = math.sqrt(abs(z))
        return m, math.copysign(m, z)
    w = complex(np.sqrt(complex(z)))
    return w, w


# --- evaluation -------------------------------------------------------------------

def minus_factors(c: float, d: float, v: float, n: int = 2):
    """The two I^+ factors whose product realizes (u, v) with det F = 1 + d < 0."""
    M1 = np.eye(n + 1)
    M1[0, n] = 1.0
    M1[n, 0] = (v - 1) / c
    M2 = np.eye(n + 1)
    M2[0, n] = c
    M2[n, 0] = d
    return M1, M2


def realize_minus(c: float, d: float, v: float, n: int = 2) -> np.ndarray:
    M1, M2 = minus_factors(c, d, v, n)
    return M1 @ M2


def _operand(x, outs):
    return outs[x.step] if isinstance(x, Ref) else UpsilonPoint(*x)


def evaluate_steps(steps, mode) -> list[UpsilonPoint]:
    """Output of every step in order. RealPlus enforces the real guard."""
    mode = PlanMode(mode)
    positive = mode == PlanMode.RealPlus
    outs: list[UpsilonPoint] = []
    for i, st in enumerate(steps):
        try:
            if isinstance(st, Combine):
                p, q = _operand(st.p, outs), _operand(st.q, outs)
                out = combine_points(p, q, st.z, real_positive=positive)
            elif isinstance(st, Surrogate):
                b = _operand(st.base, outs)
                out = combine_points(b, b, st.param, real_positive=positive)
            elif isinstance(st, ProductRealize):
                out = upsilon_of(split(realize_minus(st.c, st.d, st.v)))
            else:
                raise TypeError(f"unknown step {st!r}")
        except PositivityViolated as exc:
            raise GuardViolation(f"step {i}: {exc}") from exc
        if mode != PlanMode.ComplexFull:
            out = UpsilonPoint(float(np.real(out.a)), float(np.real(out.eta)))
        outs.append(out)
    return outs


@dataclass(frozen=True)
class CombinePlan:
    steps: tuple
    target: UpsilonPoint
    predicted_error: float
    mode: PlanMode
    rate: float = 0.0  # K in error <= K*t
    t: float = 0.0
    perturbation: float = 0.0
    free: tuple = ()  # indices of two Combine steps whose z can be tuned

    def evaluate(self) -> UpsilonPoint:
        return evaluate_steps(self.steps, self.mode)[-1]

    def endpoint_error(self) -> float:
        return self.evaluate().distance(self.target)

    def to_json(self) -> dict:
        return {
            "mode": self.mode.value,
            "target": UpsilonPoint(*self.target).to_json(),
            "steps": [_step_to_json(s) for s in self.steps],
            "predicted_error": self.predicted_error,
            "rate": self.rate,
            "t": self.t,
            "perturbation": self.perturbation,
            "free": list(self.free),
        }

    @classmethod
    def from_json(cls, obj) -> "CombinePlan":
        return cls(
            tuple(_step_from_json(s) for s in obj["steps"]),
            UpsilonPoint.from_json(obj["target"]),
            float(obj["predicted_error"]),
            PlanMode(obj["mode"]),
            float(obj.get("rate", 0.0)),
            float(obj.get("t", 0.0)),
            float(obj.get("perturbation", 0.0)),
            tuple(obj.get("free", ())),
        )


def _operand_json(x):
    return {"ref": x.step} if isinstance(x, Ref) else UpsilonPoint(*x).to_json()


def _operand_from(obj):
    return Ref(int(obj["ref"])) if isinstance(obj, dict) else UpsilonPoint.from_json(obj)


def _step_to_json(st) -> dict:
    if isinstance(st, Combine):
        return {"kind": "Combine", "p": _operand_json(st.p), "q": _operand_json(st.q),
                "r": nk.scalar_to_json(st.r), "s": nk.scalar_to_json(st.s)}
    if isinstance(st, Surrogate):
        return {"kind": "Surrogate", "base": _operand_json(st.base), "param": nk.scalar_to_json(st.param)}
    return {"kind": "ProductRealize", "c": st.c, "d": st.d, "v": st.v}


def _step_from_json(obj):
    kind = obj["kind"]
    if kind == "Combine":
        return Combine(_operand_from(obj["p"]), _operand_from(obj["q"]),
                       nk.scalar_from_json(obj["r"]), nk.scalar_from_json(obj["s"]))
    if kind == "Surrogate":
        return Surrogate(_operand_from(obj["base"]), nk.scalar_from_json(obj["param"]))
    if kind == "ProductRealize":
        return ProductRealize(float(obj["c"]), float(obj["d"]), float(obj["v"]))
    raise ValueError(f"unknown step kind {kind!r}")


class _Chain:
    def __init__(self, real: bool):
        self.steps: list = []
        self.real = real

    def add(self, step) -> Ref:
        self.steps.append(step)
        return Ref(len(self.steps) - 1)

    def combine(self, p, q, z) -> Ref:
        return self.add(Combine(p, q, *split_z(z, self.real)))


def _check_t(t):
    if not 0 < t <= 0.1:
        raise ValueError("surrogate parameter t must lie in (0, 0.1]")


def _finish(build, target, mode, t, delta):
    """Evaluate a t-parametrized plan and attach its error receipt.

    predicted_error = 2 * t * |dE/dt| (central difference) + delta, where
    delta is any target perturbation; raised to the actual endpoint error
    if that is larger.
    """
    steps, free = build(t)
    end = evaluate_steps(steps, mode)[-1]
    err = end.distance(target)
    if any(isinstance(s, Surrogate) for s in steps) or mode == PlanMode.RealPlus:
        h = 0.1
        e_hi = evaluate_steps(build(t * (1 + h))[0], mode)[-1]
        e_lo = evaluate_steps(build(t * (1 - h))[0], mode)[-1]
        first = e_hi.distance(e_lo) / (2 * h)
    else:
        first = 0.0
    pred = max(2 * first + delta, err)
    return CombinePlan(tuple(steps), UpsilonPoint(*target), float(pred), mode,
                       rate=float(pred / t) if t > 0 else 0.0, t=t, perturbation=delta, free=free)


# --- complex ------------------------------------------------------------------------

def complex_stage_params(u, v):
    """(y, z) of the second and third stages for target (u, v)."""
    y = ((v - 1) ** 2 - u * v) / (SQRT2 * (u - v + 1))
    z = v + HALF_SQRT2 * y - 0.5
    return y, z


def _complex_build(u, v):
    def build(t):
        ch = _Chain(real=False)
        y, z = complex_stage_params(u, v)
        if abs(y) <= POLE_GUARD:
            # the second stage would return the seed itself
            ch.combine(SEED, SEED, z)
            return ch.steps, ()
        s1 = ch.add(Surrogate(SEED, 0.5 + t))
        s2 = ch.combine(s1, SEED, y)
        ch.combine(SEED, s2, z)
        return ch.steps, (1, 2)
    return build


def plan_complex_point(u, v, t: float = DEFAULT_T, perturb: bool = True) -> CombinePlan:
    """Plan reaching (u, v) in the complex Υ-plane from the seed (c, -c), c = sqrt(2)/2."""
    _check_t(t)
    target = UpsilonPoint(complex(u), complex(v))
    if abs(u) <= 1e-12 and abs(v - 1) <= 1e-12:
        # the target is the surrogate's limit
        return _finish(lambda tt: ([Surrogate(SEED, 0.5 + tt)], ()), target,
                       PlanMode.ComplexFull, t, 0.0)
    uu, delta = complex(u), 0.0
    for _ in range(8):
        bad = abs(uu - v + 1) < 1e-8
        if not bad:
            y, z = complex_stage_params(uu, v)
            bad = abs(z) <= POLE_GUARD or abs(v + SQRT2 * y) <= POLE_GUARD
        if not bad:
            try:
                return _finish(_complex_build(uu, complex(v)), target, PlanMode.ComplexFull, t, delta)
            except PoleAtZ:
                pass
        if not perturb:
            raise DegenerateTarget(f"target ({u}, {v}) is on an excluded set")
        delta = FOLD_DELTA if delta == 0 else 2 * delta
        uu = complex(u) + delta
    raise DegenerateTarget(f"no admissible perturbation of ({u}, {v})")


# --- real, positive determinant ----------------------------------------------------

def _zero_point(ch, z0, t):
    """Approximately (0, z0), z0 > 0."""
    s1 = ch.combine(SEED, SEED, -0.5 - t)  # (-(1+t)^2/t, -t)
    return ch.combine(s1, s1, z0)


def _direct(ch, u1, gap, t):
    """Approximately (u1, u1 + gap) for gap > 0 and u1 > 0; also returns the
    index of the step that sets the gap. u1=None asks for a first
    coordinate of order t."""
    z0 = gap ** 0.25
    s2 = _zero_point(ch, z0, t)
    s3 = ch.combine(s2, s2, -t)  # ~(-t, z0^2 - t)
    if u1 is None:
        # z = -a3*eps3 would cancel the numerator exactly; offset by t so the
        # first coordinate is ~t/z0^2 instead of t*(1 - z0^2)^2
        a3, e3 = evaluate_steps(ch.steps, PlanMode.RealPlus)[-1]
        u1 = -a3 * e3 + t
    s4 = ch.combine(s3, s3, u1)  # ~(u1, u1 + z0^4)
    return s4, s2.step


SHIFTS = (1.0, -1.0, 2.0, -2.0)


def _below_diagonal(ch, u, v, t):
    """Approximately (u, v) for v < u via combine(T, seed, (u+v)/2) with T ~ (0+, (u-v)/sqrt2)."""
    tt, gap_step = _direct(ch, None, (u - v) / SQRT2, t)
    return ch.combine(tt, SEED, (u + v) / 2), gap_step


def _real_plus_build(u, v):
    def build(t):
        ch = _Chain(real=True)
        if v > u:
            b = 2.0 if abs(u - 1) < 0.5 else 1.0
            t1, _ = _direct(ch, None, 1.0, t)  # ~(0+, 1)
            t2, gap_step = _direct(ch, b, v - u, t)  # ~(b, b + v - u)
            last = ch.combine(t1, t2, u - b)
            return ch.steps, (gap_step, last.step)
        if abs(u + v) >= 0.5:
            last, gap_step = _below_diagonal(ch, u, v, t)
            return ch.steps, (gap_step, last.step)
        # near the pole of the direct route: reach Q = (u + s, v + s) instead
        # and combine (0+, 1) with it at z = -s
        s = max(SHIFTS, key=lambda k: min(abs(k), abs((u + v) / 2 + k)))
        one, _ = _direct(ch, None, 1.0, t)
        q, gap_step = _below_diagonal(ch, u + s, v + s, t)
        last = ch.combine(one, q, -s)
        return ch.steps, (gap_step, last.step)
    return build


def plan_real_plus(u: float, v: float, t: float = DEFAULT_T) -> CombinePlan:
    """Plan reaching real (u, v) with every step keeping det F > 0."""
    _check_t(t)
    u, v = float(u), float(v)
    target = UpsilonPoint(u, v)
    vv, delta = v, 0.0
    if abs(u - v) < FOLD_DELTA:
        # v = u needs a zero gap; aim just below
        vv, delta = u - FOLD_DELTA, abs(u - FOLD_DELTA - v)
    for _ in range(6):
        try:
            return _finish(_real_plus_build(u, vv), target, PlanMode.RealPlus, t, delta)
        except PoleAtZ:
            vv -= FOLD_DELTA
            delta = abs(vv - v)
    raise DegenerateTarget(f"no pole-free plan near ({u}, {v})")


# --- real, negative determinant ----------------------------------------------------

def minus_d(u, v, c):
    """d making the product's Υ equal (u, v)."""
    return (c * (u - v + 1) + 1 - v) / (c * (c + 1 - u))


def minus_d_flipped(u, v, c):
    """Variant with u - v - 1 in the middle term. It misses the product matrix; kept for comparison."""
    return (c * (u - v - 1) + 1 - v) / (c * (c + 1 - u))


def c_scan(kmax: int = 40):
    for k in range(1, kmax + 1):
        yield 2.0 ** -k
        yield -(2.0 ** -k)


def plan_real_minus(u: float, v: float) -> CombinePlan:
    """Single-step plan realizing (u, v) by a product with det F = 1 + d < 0."""
    u, v = float(u), float(v)
    if abs(u - 1) < 1e-8 or abs(v - 1) < 1e-8:
        raise DegenerateTarget(f"({u}, {v}): need u != 1 and v != 1")
    target = UpsilonPoint(u, v)
    nearest = None
    for c in c_scan():
        if abs(c + 1 - u) < 1e-8:
            continue
        d = minus_d(u, v, c)
        if not d < -1:
            if nearest is None or d < nearest[1]:
                nearest = (c, d)
            continue
        got = upsilon_of(split(realize_minus(c, d, v)))
        err = got.distance(target)
        if err <= 1e-9 * max(1.0, abs(u), abs(v)):
            step = ProductRealize(c, d, v)
            return CombinePlan((step,), target, float(err), PlanMode.RealMinus, free=())
        if nearest is None or err < abs(nearest[1]):
            nearest = (c, err)
    raise NoAdmissibleC(f"no c = +-2^-k gives d < -1 for ({u}, {v})", nearest)


def plan_point(u, v, mode, t: float = DEFAULT_T) -> CombinePlan:
    mode = PlanMode(mode)
    if mode == PlanMode.ComplexFull:
        return plan_complex_point(u, v, t)
    if mode == PlanMode.RealPlus:
        return plan_real_plus(u, v, t)
    return plan_real_minus(u, v)


# --- exact endpoint ----------------------------------------------------------------

def _with_z(steps, idx, z, real):
    st = steps[idx]
    out = list(steps)
    out[idx] = replace(st, **dict(zip(("r", "s"), split_z(z, real))))
    return out


def refine_plan(plan: CombinePlan, tol: float = 1e-13, max_iter: int = 30) -> CombinePlan:
    """Tune the z of the two free steps by Newton so the endpoint hits the
    target to rounding. The surrogate error is absorbed; predicted_error
    becomes the final residual."""
    if len(plan.free) != 2:
        return plan
    real = plan.mode != PlanMode.ComplexFull
    steps = list(plan.steps)
    i, j = plan.free
    zs = np.array([steps[i].z, steps[j].z], dtype=np.float64 if real else np.complex128)
    tgt = np.array([plan.target.a, plan.target.eta], dtype=zs.dtype)

    def resid(zv):
        st = _with_z(_with_z(steps, i, zv[0], real), j, zv[1], real)
        end = evaluate_steps(st, plan.mode)[-1]
        return np.array([end.a, end.eta], dtype=zs.dtype) - tgt, st

    F, cur = resid(zs)
    for _ in range(max_iter):
        if np.linalg.norm(F) <= tol * max(1.0, np.linalg.norm(tgt)):
            break
        J = np.empty((2, 2), dtype=zs.dtype)
        for k in range(2):
            h = 1e-7 * max(1.0, abs(zs[k]))
            zh = zs.copy()
            zh[k] += h
            J[:, k] = (resid(zh)[0] - F) / h
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        while lam > 1e-4:
            try:
                F2, st2 = resid(zs + lam * step)
            except (PoleAtZ, GuardViolation):
                F2 = None
            if F2 is not None and np.linalg.norm(F2) < np.linalg.norm(F):
                zs, F, cur = zs + lam * step, F2, st2
                break
            lam /= 2
        else:
            break
    err = float(np.linalg.norm(F))
    if err > plan.predicted_error:
        return plan
    return replace(plan, steps=tuple(cur), predicted_error=err)
