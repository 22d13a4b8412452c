import json

import numpy as np

from densegen import numkernel as nk
from densegen.generators import DensityScope, build_complex_pair, casen2_pair, casen3_pair
from densegen.harness import (
    density_experiment,
    dependence_invariant_check,
    promote_scope,
    sample_target,
    transitivity_demo,
)
from densegen.rng import SplitMix64
from densegen.synthesis import SearchBudget
from densegen.words import evaluate_word


def test_sampled_targets_respect_scope():
    r = SplitMix64(0)
    for _ in range(20):
        T = sample_target(r, casen2_pair())
        assert nk.det(T) > 0
        assert abs(np.linalg.norm(T) - np.sqrt(2)) <= 1e-12


def test_witness_suite_casen2():
    rep = density_experiment(casen2_pair(), 0, 0.1, SearchBudget(10 ** 6), seed=1)
    assert rep.witness.samples == 100 and rep.witness.hit_rate == 1.0


def test_out_of_scope_target_excluded():
    rep = density_experiment(casen2_pair(), 0, 0.1, targets=[np.diag([1.0, -1.0])], witness_samples=0)
    assert rep.samples == 0 and rep.excluded[0]["reason"] == "ScopeError"


def test_report_deterministic():
    a = density_experiment(casen2_pair(), 3, 0.1, SearchBudget(10 ** 4), seed=9, witness_samples=5)
    b = density_experiment(casen2_pair(), 3, 0.1, SearchBudget(10 ** 4), seed=9, witness_samples=5)
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())


def test_promote_scope():
    p = build_complex_pair(2)
    rep = density_experiment(p, 2, 10.0, SearchBudget(100), witness_samples=0)
    assert promote_scope(p, rep).density_scope == DensityScope.EmpiricallySupported
    rep.hit_rate = 0.5
    assert promote_scope(p, rep).density_scope == DensityScope.Unvalidated


def test_dependence_exact_example():
    X = [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([1.0, 1.0])]
    chk = dependence_invariant_check(X, F=np.array([[2.0, 1.0], [0.0, 3.0]]), trials=10)
    assert chk.passed and chk.max_residual <= 1e-12
    a = chk.alpha / chk.alpha[0]
    assert np.allclose(a, [1, 1, -1])


def test_dependence_scalars_always_pass():
    assert dependence_invariant_check([np.array([3.0]), np.array([-2.0])], trials=20).passed


def test_dependence_random_both_fields():
    r = SplitMix64(11)
    for field in (nk.REAL, nk.COMPLEX):
        X = [r.normal_matrix(3, 1, field == nk.COMPLEX).ravel() for _ in range(4)]
        assert dependence_invariant_check(X, trials=100, rng=r).passed


def test_transitivity_own_generator():
    p = casen3_pair()
    M = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, 1.0]])
    res = transitivity_demo(p, M, p.A @ M, 0.5)
    assert str(res.word) == "A" and res.distance == 0.0 and res.success


def test_transitivity_distance_recomputed():
    p = casen3_pair()
    r = SplitMix64(4)
    U, V = r.normal_matrix(3), evaluate_word_target(p)
    res = transitivity_demo(p, U, V @ U, 0.5, SearchBudget(10 ** 5), rng=r)
    again = np.linalg.norm(evaluate_word(res.word, p) @ res.M - V @ U)
    assert abs(again - res.distance) <= 1e-12
    assert res.success


def evaluate_word_target(p):
    from densegen.words import Word

    return evaluate_word(Word.parse("A B^2 A B"), p)


def test_transitivity_singular_center_resamples():
    p = casen3_pair()
    res = transitivity_demo(p, np.zeros((3, 3)), np.eye(3), 0.5, SearchBudget(10 ** 3))
    assert res.resampled >= 1 and abs(nk.det(res.M)) >= 1e-6
    assert np.linalg.norm(res.M) <= 0.5 + 1e-12
