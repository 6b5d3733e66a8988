import math

import numpy as np
import pytest

from lassodist import linmodel
from oracles import max_pairwise_coherence, qr_pivot_rank


def test_hadamard_fig1_model():
    model = linmodel.build_hadamard_model(4, [0.0, 0.0, 4.0, 0.0], sigma=1.0, tau=1.0)
    assert model.kind is linmodel.ModelKind.ORTHOGONAL
    assert model.sparsity == 1
    np.testing.assert_allclose(model.W, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(model.A, axis=0), 1.0, atol=1e-12)


def test_hadamard_m1_trivial():
    model = linmodel.build_hadamard_model(1, [0.0], sigma=1.0, tau=1.0)
    np.testing.assert_array_equal(model.A, [[1.0]])
    np.testing.assert_array_equal(model.W, [[1.0]])


@pytest.mark.parametrize("M", [1, 2, 4, 8, 16])
def test_hadamard_orthogonality(M):
    A = linmodel.sylvester_hadamard(M) / math.sqrt(M)
    np.testing.assert_allclose(A.T @ A, np.eye(M), atol=1e-12)


@pytest.mark.parametrize("M", [0, 3, 6, 12])
def test_hadamard_rejects_bad_order(M):
    with pytest.raises(linmodel.DimensionError):
        linmodel.build_hadamard_model(M, np.zeros(max(M, 1)), 1.0, 1.0)


def test_hadamard_rejects_wrong_x_length():
    with pytest.raises(linmodel.DimensionError):
        linmodel.build_hadamard_model(4, np.zeros(3), 1.0, 1.0)


def test_bernoulli_rank_matches_pivoted_qr_oracle():
    model = linmodel.build_bernoulli_model(4, 4, np.zeros(4), 1.0, 1.0, seed=7)
    assert model.rank == qr_pivot_rank(model.A)


def test_bernoulli_m4_n8_singular():
    model = linmodel.build_bernoulli_model(4, 8, np.zeros(8), 1.0, 1.0, seed=7)
    assert model.kind is linmodel.ModelKind.SINGULAR
    assert model.rank <= 4
    assert model.W.shape == (8, 8)


def test_bernoulli_deterministic():
    a = linmodel.build_bernoulli_model(4, 8, np.zeros(8), 1.0, 1.0, seed=7)
    b = linmodel.build_bernoulli_model(4, 8, np.zeros(8), 1.0, 1.0, seed=7)
    c = linmodel.build_bernoulli_model(4, 8, np.zeros(8), 1.0, 1.0, seed=8)
    np.testing.assert_array_equal(a.A, b.A)
    assert not np.array_equal(a.A, c.A)


def test_bernoulli_unit_columns_and_symmetry():
    model = linmodel.build_bernoulli_model(6, 10, np.zeros(10), 1.0, 1.0, seed=3)
    np.testing.assert_allclose(np.linalg.norm(model.A, axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(model.W, model.W.T, atol=1e-12)
    assert np.min(np.linalg.eigvalsh(model.W)) >= -1e-10


def test_sample_zero_noise():
    model = linmodel.build_hadamard_model(4, [0.0, 0.0, 4.0, 0.0], sigma=0.0, tau=1.0)
    b = linmodel.sample_measurement(model, np.random.default_rng(0))
    np.testing.assert_array_equal(b, model.A @ model.x_true)


def test_sample_reproducible_bitwise():
    model = linmodel.build_hadamard_model(4, [0.0, 0.0, 4.0, 0.0], sigma=1.0, tau=1.0)
    b1 = linmodel.sample_measurement(model, np.random.default_rng(42))
    b2 = linmodel.sample_measurement(model, np.random.default_rng(42))
    np.testing.assert_array_equal(b1, b2)


def test_sample_noise_moments():
    # law-of-large-numbers and sample-covariance oracles over 1e5 draws
    model = linmodel.build_hadamard_model(4, [0.0, 0.0, 4.0, 0.0], sigma=1.0, tau=1.0)
    rng = np.random.default_rng(123)
    L = 100_000
    mean_ax = model.A @ model.x_true
    noise = np.empty((L, 4))
    for r in range(L):
        noise[r] = linmodel.sample_measurement(model, rng) - mean_ax
    assert np.max(np.abs(noise.mean(axis=0))) <= 4.0 / math.sqrt(L)
    cov = np.cov(noise.T, bias=True)
    assert np.max(np.abs(cov - np.eye(4))) <= 0.05


@pytest.mark.parametrize("K", [1, 2, 3, 4])
def test_rip_hadamard_zero(K):
    A = linmodel.sylvester_hadamard(4) / 2.0
    assert linmodel.rip_constant(A, K) <= 1e-10


def test_rip_k1_zero_for_unit_columns():
    model = linmodel.build_bernoulli_model(4, 8, np.zeros(8), 1.0, 1.0, seed=7)
    assert linmodel.rip_constant(model.A, 1) <= 1e-10


def test_rip_k2_equals_coherence_scan():
    model = linmodel.build_bernoulli_model(4, 8, np.zeros(8), 1.0, 1.0, seed=7)
    delta2 = linmodel.rip_constant(model.A, 2)
    assert delta2 == max_pairwise_coherence(model.A)


def test_rip_k2_equals_coherence_scan_interior_value():
    # taller matrix so the top coherence is strictly inside (0, 1)
    model = linmodel.build_bernoulli_model(16, 8, np.zeros(8), 1.0, 1.0, seed=7)
    coherence = max_pairwise_coherence(model.A)
    assert 0.0 < coherence < 1.0
    assert linmodel.rip_constant(model.A, 2) == coherence


def test_rip_monotone_in_k():
    model = linmodel.build_bernoulli_model(4, 8, np.zeros(8), 1.0, 1.0, seed=7)
    deltas = [linmodel.rip_constant(model.A, K) for K in range(1, 5)]
    assert all(a <= b + 1e-12 for a, b in zip(deltas, deltas[1:]))


def test_rip_enumeration_cap():
    model = linmodel.build_bernoulli_model(8, 30, np.zeros(30), 1.0, 1.0, seed=1)
    with pytest.raises(linmodel.EnumerationCapError):
        linmodel.rip_constant(model.A, 15)
    # explicit smaller cap
    with pytest.raises(linmodel.EnumerationCapError):
        linmodel.rip_constant(model.A, 2, cap=10)


def test_rip_k_out_of_range():
    A = linmodel.sylvester_hadamard(4) / 2.0
    with pytest.raises(ValueError):
        linmodel.rip_constant(A, 0)
    with pytest.raises(ValueError):
        linmodel.rip_constant(A, 5)
