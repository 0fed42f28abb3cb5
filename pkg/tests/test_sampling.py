import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photonsim import sampling as S
from photonsim.gaussian import beamsplitter_matrix
from photonsim.program import OracleKernels

from conftest import haar_unitary, random_complex

BS50 = beamsplitter_matrix(np.pi / 4, 0.0)


def random_subunitary(rng, d, scale=0.9):
    A = random_complex(rng, d)
    return scale * A / np.linalg.norm(A, 2)


def tv(counts, exact, shots):
    keys = set(counts) | set(exact)
    return 0.5 * sum(abs(counts.get(k, 0) / shots - exact.get(k, 0.0)) for k in keys)


def test_bs_probability_examples():
    assert S.bs_probability(np.eye(3), [1, 0, 2], [1, 0, 2]) == pytest.approx(1.0)
    U = haar_unitary(np.random.default_rng(1), 3)
    assert S.bs_probability(U, [0, 1, 0], [0, 0, 1]) == pytest.approx(abs(U[2, 1]) ** 2)
    assert S.bs_probability(BS50, [1, 1], [1, 1]) < 1e-12
    assert S.bs_probability(BS50, [1, 1], [2, 0]) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        S.bs_probability(U, [1, 0, 0], [1, 1, 0])


def test_bs_distribution_normalised():
    rng = np.random.default_rng(2)
    U = haar_unitary(rng, 4)
    dist = S.exact_distribution(U, [2, 0, 1, 0])
    assert len(dist) == math.comb(6, 3)
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)


def test_lossy_distribution_normalised_and_matches_thinning():
    eta = 0.6
    A = np.sqrt(eta) * np.eye(2)
    dist = S.exact_distribution(A, [1, 1])
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
    assert dist[(1, 1)] == pytest.approx(eta**2)
    assert dist[(0, 0)] == pytest.approx((1 - eta) ** 2)
    assert dist[(1, 0)] == pytest.approx(eta * (1 - eta))
    rng = np.random.default_rng(3)
    dist = S.exact_distribution(random_subunitary(rng, 3), [1, 0, 2])
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)


def test_sample_bs_trivial_cases():
    batch = S.sample_bs(haar_unitary(np.random.default_rng(4), 3), [0, 0, 0], 10, seed=1)
    assert not batch.samples.any()
    batch = S.sample_bs(np.eye(3), [1, 0, 1], 200, seed=2)
    assert np.all(batch.samples == [1, 0, 1])
    with pytest.raises(ValueError):
        S.sample_bs(0.5 * np.eye(2), [1, 0], 10, seed=1)


def test_sample_bs_matches_exact_distribution():
    rng = np.random.default_rng(5)
    U = haar_unitary(rng, 5)
    s = [1, 1, 1, 0, 0]
    shots = 100_000
    batch = S.sample_bs(U, s, shots, seed=11)
    assert np.all(batch.samples.sum(axis=1) == 3)
    exact = S.exact_distribution(U, s)
    assert len(exact) == 35
    assert tv(batch.counts(), exact, shots) <= 0.02


def test_sample_bs_bunched_input():
    rng = np.random.default_rng(6)
    U = haar_unitary(rng, 3)
    s = [2, 0, 1]
    shots = 50_000
    batch = S.sample_bs(U, s, shots, seed=12)
    assert tv(batch.counts(), S.exact_distribution(U, s), shots) <= 0.02


def test_sample_bs_reproducible_per_shot():
    U = haar_unitary(np.random.default_rng(7), 4)
    a = S.sample_bs(U, [1, 1, 0, 1], 400, seed=5)
    b = S.sample_bs(U, [1, 1, 0, 1], 400, seed=5)
    assert a.samples.tobytes() == b.samples.tobytes()
    assert np.array_equal(S.sample_bs(U, [1, 1, 0, 1], 50, seed=5).samples, a.samples[:50])
    assert S.sample_bs(U, [1, 1, 0, 1], 400, seed=6).samples.tobytes() != a.samples.tobytes()


def test_sample_bs_with_oracle_provider():
    U = haar_unitary(np.random.default_rng(8), 3)
    a = S.sample_bs(U, [1, 1, 0], 300, seed=9)
    b = S.sample_bs(U, [1, 1, 0], 300, seed=9, kernels=OracleKernels())
    assert np.array_equal(a.samples, b.samples)


def test_dilation():
    rng = np.random.default_rng(9)
    A = random_subunitary(rng, 4)
    U = S.dilate_lossy(A)
    assert np.max(np.abs(U.conj().T @ U - np.eye(8))) <= 1e-12
    assert np.array_equal(U[:4, :4], A)
    V = haar_unitary(rng, 3)
    U = S.dilate_lossy(V)
    assert np.allclose(U[:3, 3:], 0) and np.allclose(U[3:, :3], 0)
    U = S.dilate_lossy(np.zeros((2, 2)))
    assert np.max(np.abs(U.conj().T @ U - np.eye(4))) <= 1e-12
    with pytest.raises(ValueError):
        S.dilate_lossy(1.1 * np.eye(2))


def test_lossless_dilation_is_sample_identical():
    U = haar_unitary(np.random.default_rng(10), 4)
    s = [1, 0, 1, 1]
    a = S.sample_bs(U, s, 2000, seed=31)
    b = S.sample_lossy(U, s, 2000, seed=31)
    assert a.samples.tobytes() == b.samples.tobytes()


def test_apply_loss():
    A = haar_unitary(np.random.default_rng(11), 3)
    assert np.array_equal(S.apply_loss(A, [1, 1, 1]), A)
    lossy = S.apply_loss(A, [1, 0, 0.5])
    assert np.all(lossy[1] == 0)
    assert np.allclose(lossy[2], np.sqrt(0.5) * A[2])
    with pytest.raises(ValueError):
        S.apply_loss(A, [1, 1.2, 1])
    batch = S.sample_lossy(lossy, [1, 1, 1], 3000, seed=4)
    assert not batch.samples[:, 1].any()


def test_uniform_loss_thins_photons():
    shots = 100_000
    n = 3
    for eta in (0.25, 0.5, 0.95):
        A = S.apply_loss(np.eye(n), [eta] * n)
        batch = S.sample_lossy(A, [1] * n, shots, seed=21)
        total = batch.samples.sum(axis=1)
        sigma = math.sqrt(n * eta * (1 - eta) / shots)
        assert abs(total.mean() - eta * n) <= 3 * sigma


def test_lossy_sampling_matches_exact():
    rng = np.random.default_rng(12)
    A = random_subunitary(rng, 3, scale=0.8)
    shots = 50_000
    batch = S.sample_lossy(A, [1, 1, 0], shots, seed=13)
    assert tv(batch.counts(), S.exact_distribution(A, [1, 1, 0]), shots) <= 0.02


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_output_permutation_covariance(seed):
    rng = np.random.default_rng(seed)
    U = haar_unitary(rng, 3)
    perm = rng.permutation(3)
    s = [1, 1, 0]
    for t, p in S.exact_distribution(U, s).items():
        permuted = tuple(np.array(t)[perm])
        assert S.bs_probability(U[perm], s, permuted) == pytest.approx(p, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), eta=st.floats(0, 1))
def test_photons_never_created(seed, eta):
    rng = np.random.default_rng(seed)
    A = S.apply_loss(haar_unitary(rng, 3), [eta, 1.0, eta])
    batch = S.sample_lossy(A, [1, 0, 2], 50, seed=seed % 1000)
    assert np.all(batch.samples.sum(axis=1) <= 3)
