import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import l1_error_permutations, noiseless_geometry
from topicsimplex.core import (
    ConditioningError,
    DegenerateTopicError,
    IdentifiabilityError,
    PipelineError,
    TermDocMatrix,
    validate_row_stochastic,
)
from topicsimplex.estimator import (
    EstimatorConfig,
    WeightMatrix,
    assemble_topics,
    estimate_topics,
    ideal_reconstruct,
    l1_error,
    recover_weights,
)
from topicsimplex.geometry import Simplex
from topicsimplex.spectral import SvdConfig, top_left_singular
from topicsimplex.synth import SynthConfig, generate_instance

TRIANGLE = Simplex(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))


def test_recover_weights_vertex_and_barycenter():
    R = np.vstack([TRIANGLE.vertices, TRIANGLE.vertices.mean(axis=0)])
    W, clipped = recover_weights(R, TRIANGLE)
    assert np.allclose(W.data[:3], np.eye(3), atol=1e-15)
    assert np.allclose(W.data[3], 1 / 3)
    assert clipped == 0


def test_recover_weights_outside_point_is_clipped():
    W, clipped = recover_weights(np.array([[0.6, 0.6]]), TRIANGLE)
    # unclipped barycentric solve: (-0.2, 0.6, 0.6)
    assert np.allclose(W.data[0], [0.0, 0.5, 0.5], atol=1e-15)
    assert clipped == 1


def test_recover_weights_ill_conditioned():
    flat = Simplex(np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 1e-11]]), fallback=True)
    with pytest.raises(ConditioningError) as info:
        recover_weights(np.zeros((1, 2)), flat)
    assert info.value.cond >= 1e10


@given(st.integers(0, 2**32 - 1))
def test_recover_weights_rows_are_weight_vectors(seed):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(4, 3))
    R = rng.normal(size=(30, 3)) * 3
    try:
        W, _ = recover_weights(R, Simplex(V))
    except ConditioningError:
        return
    assert validate_row_stochastic(W.data, 1e-9)


def test_assemble_no_masking_is_column_renormalization():
    rng = np.random.default_rng(1)
    Pi = rng.dirichlet(np.ones(3), size=8)
    xi1 = rng.random(8) + 0.1
    A = assemble_topics(WeightMatrix(Pi), xi1, s=8).data
    raw = Pi * xi1[:, None]
    assert np.allclose(A, raw / raw.sum(axis=0), atol=1e-15)


def test_assemble_single_word_topics():
    A = assemble_topics(WeightMatrix(np.eye(4)), np.array([0.3, 0.9, 0.1, 0.2]), s=4)
    assert np.array_equal(A.data, np.eye(4))


def test_assemble_masking_keeps_lower_index_on_ties():
    Pi = np.full((4, 2), 0.5)
    A = assemble_topics(WeightMatrix(Pi), np.ones(4), s=2).data
    assert A[:, 0].tolist() == [0.5, 0.5, 0.0, 0.0]


def test_assemble_degenerate_topic():
    Pi = np.array([[1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(DegenerateTopicError):
        assemble_topics(WeightMatrix(Pi), np.ones(2), s=2)


@pytest.mark.parametrize("seed", range(3))
def test_assemble_with_exact_weights_recovers_A(seed):
    inst = generate_instance(SynthConfig(K=3, n=120, p=50, p0=3, seed=seed), noiseless=True)
    B = top_left_singular(inst.D0, SvdConfig(3, seed=seed))
    _, _, Pi, _ = noiseless_geometry(inst.A.data, B.vectors)
    Pi = np.maximum(Pi, 0)
    A = assemble_topics(WeightMatrix(Pi / Pi.sum(axis=1, keepdims=True)), B.xi1, s=50)
    assert np.abs(A.data - inst.A.data).sum(axis=0).max() <= 1e-8


def test_estimate_hand_rank_two_instance():
    A = np.array([[0.5, 0.0], [0.5, 0.0], [0.0, 0.5], [0.0, 0.5]])
    W = np.array([[1.0, 0.0, 0.5, 0.7], [0.0, 1.0, 0.5, 0.3]])
    rep = estimate_topics(TermDocMatrix.from_dense(A @ W), EstimatorConfig(K=2, m=2))
    assert l1_error(rep.topics, A) <= 1e-8
    assert np.allclose(np.sort(rep.weights.data, axis=1)[:, -1], 1.0)


def distinct_rows(inst, K, seed):
    B = top_left_singular(inst.D, SvdConfig(K, seed=seed))
    R = B.vectors[:, 1:] / B.vectors[:, [0]]
    return np.unique(np.round(R, 9), axis=0).shape[0]


@pytest.mark.parametrize("K, seed", [(2, 0), (3, 1), (4, 2), (3, 3)])
def test_estimate_noiseless_exact_with_pure_sketch(K, seed):
    inst = generate_instance(SynthConfig(K=K, n=200, p=80, p0=4, a0=0.2, seed=seed), noiseless=True)
    m = distinct_rows(inst, K, seed)
    rep = estimate_topics(inst.D, EstimatorConfig(K=K, m=m, seed=seed))
    assert l1_error(rep.topics, inst.A) <= 1e-6


def test_estimate_report_contents():
    inst = generate_instance(SynthConfig(K=3, n=200, p=150, p0=5, N=500, seed=4))
    rep = estimate_topics(inst.D, EstimatorConfig(K=3, seed=4))
    assert rep.topics.data.shape == (150, 3)
    assert validate_row_stochastic(rep.weights.data)
    assert rep.ratios.entries.shape == (150, 2)
    assert rep.simplex.K == 3
    assert rep.centers.m == 30
    assert rep.singular_values.shape == (3,)
    assert np.all(np.abs(rep.ratios.entries) <= np.log(200) + 1e-12)
    words = rep.anchor_like_words(5)
    assert len(words) == 3 and all(len(w) == 5 for w in words)


def test_estimate_is_deterministic():
    inst = generate_instance(SynthConfig(K=3, n=150, p=120, p0=5, N=300, seed=6))
    a = estimate_topics(inst.D, EstimatorConfig(K=3, seed=2))
    b = estimate_topics(inst.D, EstimatorConfig(K=3, seed=2))
    assert np.array_equal(a.topics.data, b.topics.data)


def test_estimate_drops_and_reinserts_zero_rows():
    inst = generate_instance(SynthConfig(K=3, n=150, p=100, p0=5, N=400, seed=8))
    D = inst.D.toarray()
    padded = np.vstack([D[:40], np.zeros((3, D.shape[1])), D[40:]])
    rep = estimate_topics(TermDocMatrix.from_dense(padded), EstimatorConfig(K=3, seed=1))
    ref = estimate_topics(inst.D, EstimatorConfig(K=3, seed=1))
    assert np.all(rep.topics.data[40:43] == 0.0)
    assert np.allclose(np.delete(rep.topics.data, [40, 41, 42], axis=0), ref.topics.data, atol=1e-12)
    assert rep.dropped_words.tolist() == [40, 41, 42]


def test_estimate_permutation_covariant():
    inst = generate_instance(SynthConfig(K=3, n=200, p=150, p0=5, N=500, seed=9))
    perm = np.random.default_rng(0).permutation(150)
    a = estimate_topics(inst.D, EstimatorConfig(K=3, seed=3))
    b = estimate_topics(TermDocMatrix(inst.D.data[perm, :]), EstimatorConfig(K=3, seed=3))
    assert np.allclose(b.topics.data, a.topics.data[perm], atol=1e-10)
    err_a = l1_error(a.topics, inst.A)
    err_b = l1_error(b.topics, inst.A.data[perm])
    assert err_a == pytest.approx(err_b, abs=1e-10)


def test_estimate_errors_carry_stage():
    inst = generate_instance(SynthConfig(K=2, n=30, p=20, p0=2, N=50, seed=0))
    with pytest.raises(PipelineError) as info:
        estimate_topics(inst.D, EstimatorConfig(K=2, m=500))
    assert info.value.stage == "kmeans"
    with pytest.raises(PipelineError) as info:
        estimate_topics(inst.D, EstimatorConfig(K=25))
    assert info.value.stage == "input"


def test_config_defaults():
    cfg = EstimatorConfig(K=6)
    assert (cfg.m, cfg.K0, cfg.s) == (60, 8, None)
    assert EstimatorConfig(K=3).K0 == 4


# -- noiseless oracle ---------------------------------------------------------


def test_ideal_identity():
    A = np.eye(3)
    W = np.random.default_rng(0).dirichlet(np.ones(3), size=10).T
    W[:, :3] = np.eye(3)
    B = top_left_singular(TermDocMatrix.from_dense(A @ W), SvdConfig(3))
    assert l1_error(ideal_reconstruct(B, 3), np.eye(3)) <= 1e-9


@pytest.mark.parametrize("K, seed", [(2, 0), (3, 0), (3, 1), (3, 2), (4, 3)])
def test_ideal_exact(K, seed):
    inst = generate_instance(SynthConfig(K=K, n=200, p=100, p0=3, a0=0.2, seed=seed), noiseless=True)
    B = top_left_singular(inst.D0, SvdConfig(K, seed=seed))
    assert l1_error(ideal_reconstruct(B, K), inst.A) <= 1e-8


def test_ideal_missing_anchor():
    inst = generate_instance(SynthConfig(K=3, n=200, p=100, p0=3, a0=0.2, seed=5), noiseless=True)
    A = inst.A.data.copy()
    A[3:6, 1] = 0.0  # topic 2 loses its anchors
    A[3:6, 0] = 0.5 / 100
    A /= A.sum(axis=0)
    B = top_left_singular(TermDocMatrix.from_dense(A @ inst.W.data), SvdConfig(3))
    with pytest.raises(IdentifiabilityError):
        ideal_reconstruct(B, 3)


# -- l1 error -----------------------------------------------------------------


def test_l1_identity_and_swap():
    A = np.random.default_rng(0).dirichlet(np.ones(5), size=3).T
    assert l1_error(A, A) == 0.0
    assert l1_error(A[:, [2, 0, 1]], A, "sum") == 0.0
    assert l1_error(A[:, [2, 0, 1]], A, "max") == 0.0


def test_l1_shift():
    T = np.array([[0.4, 0.0], [0.6, 0.0], [0.0, 0.5], [0.0, 0.5]])
    E = T.copy()
    E[:, 0] = [0.45, 0.55, 0.0, 0.0]
    assert l1_error(E, T, "max") == pytest.approx(0.1)
    assert l1_error(E, T, "sum") == pytest.approx(0.1)


@st.composite
def topic_pair(draw):
    K = draw(st.integers(1, 6))
    p = draw(st.integers(K, 12))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    E = rng.random((p, K)) ** 4
    T = rng.random((p, K)) ** 4
    return E / E.sum(axis=0), T / T.sum(axis=0)


@given(topic_pair())
def test_l1_matches_permutation_enumeration(pair):
    E, T = pair
    for agg in ("max", "sum"):
        assert l1_error(E, T, agg) == pytest.approx(l1_error_permutations(E, T, agg), abs=1e-12)


@given(topic_pair(), topic_pair())
def test_l1_symmetric_and_triangle(p1, p2):
    E, T = p1
    assert l1_error(E, T, "max") == pytest.approx(l1_error(T, E, "max"), abs=1e-12)
    if p2[0].shape == E.shape:
        X = p2[0]
        assert l1_error(E, T, "sum") <= l1_error(E, X, "sum") + l1_error(X, T, "sum") + 1e-12
