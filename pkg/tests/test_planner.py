import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from densegen.errors import DegenerateTarget, GuardViolation
from densegen.planner import (
    SEED,
    Combine,
    CombinePlan,
    PlanMode,
    Surrogate,
    complex_stage_params,
    evaluate_steps,
    minus_d,
    minus_d_flipped,
    plan_complex_point,
    plan_point,
    plan_real_minus,
    plan_real_plus,
    realize_minus,
    refine_plan,
)
from densegen.upsilon import UpsilonPoint, combine_points, split, upsilon_of

H = math.sqrt(2) / 2


def exact_stage3(u, v):
    y, z = complex_stage_params(u, v)
    stage2 = UpsilonPoint(y + H, y - H)
    return combine_points(SEED, stage2, z)


def test_complex_worked_target():
    y, z = complex_stage_params(3, 5)
    assert y == pytest.approx(-1 / math.sqrt(2)) and z == pytest.approx(4.0)
    assert exact_stage3(3, 5).distance((3, 5)) <= 1e-12


def test_complex_surrogate_endpoint():
    plan = plan_complex_point(3, 5, 1e-5)
    assert plan.endpoint_error() <= 1e-3
    assert plan.predicted_error >= plan.endpoint_error()


def test_complex_target_is_surrogate():
    plan = plan_complex_point(0, 1, 1e-4)
    assert len(plan.steps) == 1 and isinstance(plan.steps[0], Surrogate)
    t = 1e-4
    assert plan.evaluate().distance((t * t / (1 + t), 1 + t)) <= 1e-15


def test_complex_degenerate():
    with pytest.raises(DegenerateTarget):
        plan_complex_point(1.0, 2.0, perturb=False)
    plan = plan_complex_point(1.0, 2.0)
    assert plan.perturbation > 0
    assert plan.endpoint_error() <= plan.predicted_error


@pytest.mark.parametrize("mode,target", [(PlanMode.ComplexFull, (3, 5)), (PlanMode.RealPlus, (1, 2))])
def test_surrogate_error_shrinks_with_t(mode, target):
    errs = [plan_point(*target, mode, t).endpoint_error() for t in (1e-2, 1e-3, 1e-4, 1e-5)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    K = plan_point(*target, mode, 1e-5).rate
    for t, e in zip((1e-2, 1e-3, 1e-4, 1e-5), errs):
        assert e <= 2 * K * t


def test_real_plus_seed_gives_zero_first_coordinate():
    a, e = SEED
    assert (e * e - a * a) ** 2 == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("target,tol", [((1, 2), 1e-3), ((5, -1), 1e-2), ((-3, -3), 1e-3), ((0.2, -0.1), 1e-3)])
def test_real_plus_targets(target, tol):
    plan = plan_real_plus(*target, t=1e-5)
    assert plan.endpoint_error() <= tol
    # every combine keeps the real guard
    evaluate_steps(plan.steps, PlanMode.RealPlus)


def test_guard_violation_is_reported():
    steps = [Combine(SEED, SEED, 1.0, -0.1)]
    with pytest.raises(GuardViolation):
        evaluate_steps(steps, PlanMode.RealPlus)


def test_real_minus_worked_example():
    assert minus_d(0, 0, -0.1) == pytest.approx(-10.0)
    plan = plan_real_minus(0, 0)
    (st_,) = plan.steps
    M = realize_minus(st_.c, st_.d, st_.v)
    assert upsilon_of(split(M)).distance((0, 0)) <= 1e-9
    assert 1 + st_.d < 0


def test_flipped_sign_formula_misses_the_product():
    # the flipped-sign d (with u - v - 1) does not reproduce (u, v) on the product matrix,
    # the derived one does
    u, v, c = 0.5, 3.0, -0.25
    for formula, ok in ((minus_d, True), (minus_d_flipped, False)):
        d = formula(u, v, c)
        M = np.array([[1 + d, 0, c + 1], [0, 1, 0], [d + (v - 1) / c, 0, v]])
        hit = upsilon_of(split(M)).distance((u, v)) <= 1e-9
        assert hit == ok


def test_real_minus_rejects_u_equal_one():
    with pytest.raises(DegenerateTarget):
        plan_real_minus(1.0, 3.0)


def test_refine_hits_target():
    for mode, target in ((PlanMode.ComplexFull, (2 - 1j, 0.5j)), (PlanMode.RealPlus, (-2.0, 4.0))):
        plan = refine_plan(plan_point(*target, mode, 0.05))
        assert plan.endpoint_error() <= 1e-12


def test_plan_json_roundtrip():
    for plan in (plan_complex_point(3, 5), plan_real_plus(5, -1), plan_real_minus(0, 0)):
        back = CombinePlan.from_json(plan.to_json())
        assert back.evaluate().distance(plan.evaluate()) == 0.0
        assert back.mode == plan.mode and back.predicted_error == plan.predicted_error


@settings(max_examples=200, deadline=None)
@given(u=st.floats(-10, 10), v=st.floats(-10, 10), iu=st.floats(-10, 10), iv=st.floats(-10, 10))
def test_complex_exact_cancellation(u, v, iu, iv):
    u, v = complex(u, iu), complex(v, iv)
    if abs(u - v + 1) < 0.1:
        return
    y, z = complex_stage_params(u, v)
    if abs(z) < 1e-6 or abs(z + H * (y - H)) < 1e-6:
        return
    got = exact_stage3(u, v)
    assert got.distance((u, v)) <= 1e-9 * max(1.0, abs(u), abs(v))


@settings(max_examples=100, deadline=None)
@given(u=st.floats(-8, 8), v=st.floats(-8, 8))
def test_real_plus_chain(u, v):
    plan = plan_real_plus(u, v, t=1e-5)
    assert plan.endpoint_error() <= 1e-3
    for p in evaluate_steps(plan.steps, PlanMode.RealPlus):
        assert np.isfinite(p.a) and np.isfinite(p.eta)


@settings(max_examples=200, deadline=None)
@given(u=st.floats(-8, 8), v=st.floats(-8, 8))
def test_real_minus_realization(u, v):
    if abs(u - 1) < 0.1 or abs(v - 1) < 0.1:
        return
    (st_,) = plan_real_minus(u, v).steps
    M = realize_minus(st_.c, st_.d, st_.v)
    assert upsilon_of(split(M)).distance((u, v)) <= 1e-9 * max(1.0, abs(u), abs(v))
    assert 1 + st_.d < 0
