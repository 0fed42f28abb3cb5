import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from photonsim import fockspace as F
from photonsim.gaussian import beamsplitter_matrix
from photonsim.program import OracleKernels

from conftest import haar_unitary

HALF_PI = np.pi / 4


def ladder(n):
    return np.diag(np.sqrt(np.arange(1, n)), 1)


def test_space_dim():
    assert F.space_dim(10, 16) == 3_268_760
    assert F.space_dim(1, 7) == 7
    assert F.space_dim(5, 1) == 1
    with pytest.raises(OverflowError):
        F.space_dim(200, 200)
    with pytest.raises(ValueError):
        F.space_dim(0, 3)


def test_basis_order_and_index():
    assert F.enumerate_basis(2, 2) == [(0, 0), (1, 0), (0, 1)]
    assert F.basis_index((0, 0, 0), 4) == 0
    assert F.enumerate_basis(2, 3)[3:] == [(2, 0), (1, 1), (0, 2)]
    with pytest.raises(ValueError):
        F.basis_index((2, 2), 4)


@pytest.mark.parametrize("d", range(1, 7))
@pytest.mark.parametrize("c", range(1, 7))
def test_basis_round_trip(d, c):
    basis = F.enumerate_basis(d, c)
    assert len(basis) == F.space_dim(d, c)
    assert len(set(basis)) == len(basis)
    assert [F.basis_index(occ, c) for occ in basis] == list(range(len(basis)))
    totals = [sum(occ) for occ in basis]
    assert totals == sorted(totals)


def test_squeezing_operator_matches_generator_exponential():
    big = 90
    a = ladder(big)
    for z in (0.3, 0.8 * np.exp(0.7j), 1.0 * np.exp(-2.0j)):
        exact = expm((np.conj(z) * a @ a - z * a.T @ a.T) / 2)[:14, :14]
        assert np.max(np.abs(F.build_squeezing_operator(14, z) - exact)) < 1e-12


def test_displacement_operator_matches_generator_exponential():
    big = 90
    a = ladder(big)
    for alpha in (0.3, 1.0 * np.exp(0.4j), -0.7 + 0.9j):
        exact = expm(alpha * a.T - np.conj(alpha) * a)[:14, :14]
        assert np.max(np.abs(F.build_displacement_operator(14, alpha) - exact)) < 1e-12


def test_squeezing_identity_and_vacuum_column():
    assert np.allclose(F.build_squeezing_operator(8, 0.0), np.eye(8))
    for r in (0.2, 0.5, 1.0):
        for phi in (0.0, 1.3):
            col = F.build_squeezing_operator(12, r * np.exp(1j * phi))[:, 0]
            for k in range(6):
                amp = (-np.exp(1j * phi) * np.tanh(r)) ** k * math.sqrt(math.factorial(2 * k)) / (2**k * math.factorial(k)) / math.sqrt(np.cosh(r))
                assert abs(col[2 * k] - amp) < 1e-12
            assert np.all(col[1::2] == 0)


def test_squeezed_vacuum_probabilities():
    r = 0.5
    state = F.apply_single_mode(F.FockStateVector.vacuum(1, 12), F.build_squeezing_operator(12, r), 0)
    probs = F.pnr_probabilities(state)
    assert probs[(0,)] == pytest.approx(1 / np.cosh(r), abs=1e-12)
    assert probs[(2,)] == pytest.approx(np.tanh(r) ** 2 / (2 * np.cosh(r)), abs=1e-12)


def test_displaced_vacuum_is_poisson():
    state = F.apply_single_mode(F.FockStateVector.vacuum(1, 20), F.build_displacement_operator(20, np.exp(0.3j)), 0)
    probs = F.pnr_probabilities(state)
    for n in range(20):
        assert probs[(n,)] == pytest.approx(np.exp(-1) / math.factorial(n), abs=1e-12)


def test_truncated_squeezing_norm_is_partial_sum():
    r = 0.9
    state = F.apply_single_mode(F.FockStateVector.vacuum(2, 6), F.build_squeezing_operator(6, r), 0)
    partial = sum(np.tanh(r) ** (2 * k) * math.factorial(2 * k) / (4**k * math.factorial(k) ** 2) / np.cosh(r) for k in range(3))
    assert state.norm2() == pytest.approx(partial, abs=1e-9)
    assert state.norm2() < 1


def test_local_operator_on_second_mode_discards_above_cutoff():
    state = F.FockStateVector.from_occupations(2, 4, {(2, 0): 1.0})
    out = F.apply_single_mode(state, F.build_displacement_operator(4, 0.5), 1)
    D = F.build_displacement_operator(4, 0.5)
    assert out.amplitude((2, 0)) == pytest.approx(D[0, 0])
    assert out.amplitude((2, 1)) == pytest.approx(D[1, 0])
    assert out.norm2() == pytest.approx(abs(D[0, 0]) ** 2 + abs(D[1, 0]) ** 2)


def test_identity_operator_keeps_state():
    rng = np.random.default_rng(1)
    amps = rng.normal(size=F.space_dim(3, 5)) + 1j * rng.normal(size=F.space_dim(3, 5))
    state = F.FockStateVector(3, 5, amps / np.linalg.norm(amps))
    for mode in range(3):
        assert F.state_distance(F.apply_single_mode(state, np.eye(5), mode), state) == 0.0


def test_kerr_and_phaseshift_phases():
    state = F.FockStateVector.from_occupations(2, 5, {(3, 1): 1.0})
    kappa, phi = 0.37, 1.1
    kerr = F.apply_diagonal(state, np.exp(1j * kappa * np.arange(5) ** 2), 0)
    assert kerr.amplitude((3, 1)) == pytest.approx(np.exp(9j * kappa))
    shifted = F.apply_single_mode(state, F.build_phaseshift_operator(5, phi), 1)
    assert shifted.amplitude((3, 1)) == pytest.approx(np.exp(1j * phi))
    assert F.apply_single_mode(state, F.build_kerr_operator(5, kappa), 0).amplitude((3, 1)) == pytest.approx(np.exp(9j * kappa))


def test_single_photon_on_beamsplitter():
    state = F.FockStateVector.from_occupations(2, 3, {(1, 0): 1.0})
    out = F.apply_passive_interferometer(state, beamsplitter_matrix(HALF_PI, 0.0), [0, 1])
    probs = F.pnr_probabilities(out)
    assert probs[(1, 0)] == pytest.approx(0.5, abs=1e-12)
    assert probs[(0, 1)] == pytest.approx(0.5, abs=1e-12)


def test_hong_ou_mandel():
    state = F.FockStateVector.from_occupations(2, 3, {(1, 1): 1.0})
    probs = F.pnr_probabilities(F.apply_passive_interferometer(state, beamsplitter_matrix(HALF_PI, 0.0), [0, 1]))
    assert probs[(1, 1)] < 1e-12
    assert probs[(2, 0)] == pytest.approx(0.5, abs=1e-12)
    assert probs[(0, 2)] == pytest.approx(0.5, abs=1e-12)


def _beamsplitter_closed_form(n, m, theta, phi, c):
    """Amplitudes of B|n, m> from the binomial expansion of the mapped creation operators."""
    t = math.cos(theta)
    r = np.exp(1j * phi) * math.sin(theta)
    out = {}
    for k in range(n + 1):
        for j in range(m + 1):
            # a† -> t a† + r b†,  b† -> -r* a† + t b†
            coef = math.comb(n, k) * t**k * r ** (n - k) * math.comb(m, j) * (-np.conj(r)) ** j * t ** (m - j)
            p, q = k + j, (n - k) + (m - j)
            amp = coef * math.sqrt(math.factorial(p) * math.factorial(q) / (math.factorial(n) * math.factorial(m)))
            out[(p, q)] = out.get((p, q), 0) + amp
    return out


def test_beamsplitter_closed_form_vs_permanent_lift():
    c = 6
    theta, phi = 0.61, 2.3
    U = beamsplitter_matrix(theta, phi)
    for n, m in F.enumerate_basis(2, c):
        state = F.FockStateVector.from_occupations(2, c, {(n, m): 1.0})
        lifted = F.apply_passive_interferometer(state, U, [0, 1])
        expected = F.FockStateVector.from_occupations(2, c, _beamsplitter_closed_form(n, m, theta, phi, c))
        assert F.state_distance(lifted, expected) < 1e-12


def test_phaseshifter_lift_phase():
    state = F.FockStateVector.from_occupations(3, 6, {(1, 3, 1): 1.0})
    out = F.apply_passive_interferometer(state, [[np.exp(0.4j)]], [1])
    assert out.amplitude((1, 3, 1)) == pytest.approx(np.exp(1.2j))


def test_sector_matrices_are_unitary():
    U = haar_unitary(np.random.default_rng(2), 3)
    for total in range(5):
        M = F.sector_matrix(U, total)
        assert np.max(np.abs(M @ M.conj().T - np.eye(len(M)))) < 1e-10


def test_passive_gate_on_subset_matches_full_embedding():
    rng = np.random.default_rng(3)
    d, c = 3, 5
    amps = rng.normal(size=F.space_dim(d, c)) + 1j * rng.normal(size=F.space_dim(d, c))
    state = F.FockStateVector(d, c, amps / np.linalg.norm(amps))
    U = haar_unitary(rng, 2)
    full = np.eye(3, dtype=complex)
    full[np.ix_([2, 0], [2, 0])] = U
    a = F.apply_passive_interferometer(state, U, [2, 0])
    b = F.apply_passive_interferometer(state, full, [0, 1, 2])
    assert F.state_distance(a, b) < 1e-12


def test_oracle_provider_gives_same_lift():
    U = haar_unitary(np.random.default_rng(4), 3)
    state = F.FockStateVector.from_occupations(3, 4, {(1, 1, 1): 0.6, (2, 0, 1): 0.8})
    a = F.apply_passive_interferometer(state, U, [0, 1, 2])
    b = F.apply_passive_interferometer(state, U, [0, 1, 2], OracleKernels())
    assert F.state_distance(a, b) < 1e-12


def test_passive_gate_errors():
    state = F.FockStateVector.vacuum(2, 3)
    with pytest.raises(ValueError):
        F.apply_passive_interferometer(state, [[1, 1], [0, 1]], [0, 1])
    with pytest.raises(ValueError):
        F.apply_passive_interferometer(state, np.eye(2), [0, 0])
    with pytest.raises(IndexError):
        F.apply_single_mode(state, np.eye(3), 4)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), r=st.floats(0.1, 1.2))
def test_passive_gates_preserve_norm_after_truncation(seed, r):
    rng = np.random.default_rng(seed)
    d, c = 3, 5
    state = F.FockStateVector.vacuum(d, c)
    for m in range(d):
        state = F.apply_single_mode(state, F.build_squeezing_operator(c, r * np.exp(1j * m)), m)
    before = state.norm2()
    for _ in range(5):
        modes = list(rng.choice(d, size=2, replace=False))
        state = F.apply_passive_interferometer(state, haar_unitary(rng, 2), modes)
    assert abs(state.norm2() - before) < 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_kerr_and_phase_leave_pnr_probabilities(seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=F.space_dim(2, 5)) + 1j * rng.normal(size=F.space_dim(2, 5))
    state = F.FockStateVector(2, 5, amps / np.linalg.norm(amps))
    kappa, phi = rng.uniform(0, 2 * np.pi, 2)
    out = F.apply_single_mode(F.apply_single_mode(state, F.build_kerr_operator(5, kappa), 0), F.build_phaseshift_operator(5, phi), 1)
    p, q = F.pnr_probabilities(state), F.pnr_probabilities(out)
    assert all(abs(p[k] - q[k]) < 1e-14 for k in p)


def test_pnr_probabilities_vacuum_and_marginal():
    assert F.pnr_probabilities(F.FockStateVector.vacuum(3, 4))[(0, 0, 0)] == 1.0
    state = F.FockStateVector.from_occupations(3, 4, {(1, 0, 2): 0.6, (0, 1, 1): 0.8})
    marg = F.pnr_probabilities(state, [2])
    assert marg[(2,)] == pytest.approx(0.36)
    assert marg[(1,)] == pytest.approx(0.64)
    assert sum(F.pnr_probabilities(state).values()) == pytest.approx(state.norm2())
    with pytest.raises(ValueError):
        F.pnr_probabilities(F.FockStateVector(1, 2, np.zeros(2)))


def test_sample_pnr_statistics_and_reproducibility():
    state = F.apply_single_mode(F.FockStateVector.vacuum(2, 8), F.build_squeezing_operator(8, 0.8), 0)
    state = F.apply_passive_interferometer(state, beamsplitter_matrix(0.5, 0.3), [0, 1])
    shots = 100_000
    batch = F.sample_pnr(state, shots, seed=123)
    assert batch.samples.shape == (shots, 2)
    probs = F.pnr_probabilities(state)
    counts = batch.counts()
    norm = state.norm2()
    for occ, p in probs.items():
        p = p / norm
        sigma = math.sqrt(shots * p * (1 - p))
        assert abs(counts.get(occ, 0) - shots * p) <= 3 * sigma + 1e-9
    again = F.sample_pnr(state, shots, seed=123)
    assert again.samples.tobytes() == batch.samples.tobytes()
    assert F.sample_pnr(state, 1000, seed=124).samples.tobytes() != batch.samples[:1000].tobytes()


def test_state_distance():
    a = F.FockStateVector.from_occupations(2, 3, {(1, 0): 1.0})
    b = F.FockStateVector.from_occupations(2, 3, {(0, 1): 1.0})
    assert F.state_distance(a, a) == 0
    assert F.state_distance(a, b) == pytest.approx(math.sqrt(2))
    neg = F.FockStateVector(2, 3, -0.5 * a.amplitudes)
    half = F.FockStateVector(2, 3, 0.5 * a.amplitudes)
    assert F.state_distance(half, neg) == pytest.approx(2 * 0.5)
    with pytest.raises(ValueError):
        F.state_distance(a, F.FockStateVector.vacuum(2, 4))
