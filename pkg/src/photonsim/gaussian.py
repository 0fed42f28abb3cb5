"""Gaussian states in phase space.

Conventions: quadratures ordered ``(x_1..x_d, p_1..p_d)``; ``hbar`` defaults to
2; the covariance is the symmetrised second moment, so the vacuum has
``sigma = hbar * I``.  Gates are stored as real symplectic matrices obtained
from the ladder-operator (Heisenberg) form ``a -> E a + F a†`` by the unitary
change of basis ``W`` below.

Photon-counting probabilities go through the dimensionless complex
covariance ``Sigma = W sigma W† / (2 hbar)``, ``Q = Sigma + I/2`` and
``A = X (I - Q^{-1})``, which gives ``Q = I`` and ``A = 0`` for the vacuum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

from . import kernels as _kernels
from .rng import check_seed, inverse_cdf, new_seed, shot_normals, shot_uniforms
from .samples import SampleBatch

SYMPLECTIC_TOL = 1e-10
SYMMETRY_TOL = 1e-10


def omega(d: int) -> np.ndarray:
    """Canonical symplectic form in x-then-p ordering."""
    I = np.eye(d)
    Z = np.zeros((d, d))
    return np.block([[Z, I], [-I, Z]])


def w_matrix(d: int) -> np.ndarray:
    """Maps ``(x, p)`` to ``sqrt(hbar) * (a, a†)``."""
    I = np.eye(d)
    return np.block([[I, 1j * I], [I, -1j * I]]) / np.sqrt(2.0)


def x_matrix(d: int) -> np.ndarray:
    I = np.eye(d)
    Z = np.zeros((d, d))
    return np.block([[Z, I], [I, Z]])


def _quad_index(modes: Sequence[int], d: int) -> np.ndarray:
    modes = np.asarray(modes, dtype=np.intp)
    return np.concatenate([modes, modes + d])


class GaussianState:
    """Mean vector and covariance matrix of a ``d``-mode Gaussian state."""

    def __init__(self, mu, sigma, hbar: float = 2.0):
        mu = np.asarray(mu, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        if mu.ndim != 1 or mu.size % 2:
            raise ValueError("mean vector must have length 2d")
        if sigma.shape != (mu.size, mu.size):
            raise ValueError(f"covariance must be {mu.size}x{mu.size}, got {sigma.shape}")
        if hbar <= 0:
            raise ValueError("hbar must be positive")
        if sigma.size and np.max(np.abs(sigma - sigma.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(sigma))):
            raise ValueError("covariance matrix is not symmetric")
        self.mu = mu.copy()
        self.sigma = sigma.copy()
        self.hbar = float(hbar)

    @property
    def d(self) -> int:
        return self.mu.size // 2

    def copy(self) -> "GaussianState":
        return GaussianState(self.mu, self.sigma, self.hbar)

    def reduced(self, modes: Sequence[int]) -> "GaussianState":
        """Marginal state on ``modes`` (row/column selection)."""
        idx = _quad_index(modes, self.d)
        return GaussianState(self.mu[idx], self.sigma[np.ix_(idx, idx)], self.hbar)

    def is_physical(self, tol: float = 1e-9) -> bool:
        """``sigma + i hbar Omega`` positive semidefinite."""
        M = self.sigma + 1j * self.hbar * omega(self.d)
        return bool(np.min(np.linalg.eigvalsh(M)) >= -tol * max(1.0, self.hbar))

    def mean_photon_numbers(self) -> np.ndarray:
        """``<n_i>`` per mode from second moments."""
        d, h = self.d, self.hbar
        x, p = self.mu[:d], self.mu[d:]
        diag = np.diag(self.sigma)
        return (diag[:d] + diag[d:]) / (4 * h) + (x**2 + p**2) / (2 * h) - 0.5

    def __repr__(self) -> str:
        return f"GaussianState(d={self.d}, hbar={self.hbar})"


def vacuum_state(d: int, hbar: float = 2.0) -> GaussianState:
    if d < 1:
        raise ValueError("need at least one mode")
    return GaussianState(np.zeros(2 * d), hbar * np.eye(2 * d), hbar)


# -- gates --------------------------------------------------------------------


@dataclass
class SymplecticGate:
    """Real symplectic ``S`` and displacement acting on ``modes`` (local x-then-p order)."""

    S: np.ndarray
    displacement: np.ndarray
    modes: tuple[int, ...]

    def __post_init__(self):
        k = len(self.modes)
        self.S = np.asarray(self.S, dtype=float)
        self.displacement = np.asarray(self.displacement, dtype=float)
        if self.S.shape != (2 * k, 2 * k) or self.displacement.shape != (2 * k,):
            raise ValueError("gate matrix/displacement do not match the number of modes")
        if len(set(self.modes)) != k:
            raise ValueError(f"repeated mode indices in {self.modes}")
        Om = omega(k)
        if np.max(np.abs(self.S.T @ Om @ self.S - Om), initial=0.0) > SYMPLECTIC_TOL * max(1.0, np.max(np.abs(self.S)) ** 2):
            raise ValueError("gate matrix is not symplectic within tolerance")


def ladder_to_real(E: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Real symplectic matrix of the Heisenberg map ``a -> E a + F a†``."""
    k = E.shape[0]
    Sc = np.block([[E, F], [F.conj(), E.conj()]])
    W = w_matrix(k)
    S = W.conj().T @ Sc @ W
    if np.max(np.abs(S.imag), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(S))):
        raise ValueError("ladder blocks do not have the [[E, F], [F*, E*]] structure")
    return S.real


def passive_gate(U, modes: Sequence[int]) -> SymplecticGate:
    U = np.asarray(U, dtype=complex)
    k = len(modes)
    return SymplecticGate(ladder_to_real(U, np.zeros((k, k))), np.zeros(2 * k), tuple(modes))


def phaseshifter(phi: float, mode: int) -> SymplecticGate:
    return passive_gate([[np.exp(1j * phi)]], (mode,))


def beamsplitter_matrix(theta: float, phi: float = 0.0) -> np.ndarray:
    """Heisenberg mode matrix ``[[t, -r*], [r, t]]`` with ``t = cos theta``, ``r = e^{i phi} sin theta``."""
    t = np.cos(theta)
    r = np.exp(1j * phi) * np.sin(theta)
    return np.array([[t, -np.conj(r)], [r, t]])


def beamsplitter(theta: float, phi: float, modes: Sequence[int]) -> SymplecticGate:
    return passive_gate(beamsplitter_matrix(theta, phi), modes)


def squeezing(r: float, phi: float, mode: int) -> SymplecticGate:
    E = np.array([[np.cosh(r)]], dtype=complex)
    F = np.array([[-np.exp(1j * phi) * np.sinh(r)]])
    return SymplecticGate(ladder_to_real(E, F), np.zeros(2), (mode,))


def displacement(alpha: complex, mode: int, hbar: float = 2.0) -> SymplecticGate:
    shift = np.sqrt(2 * hbar) * np.array([alpha.real, alpha.imag])
    return SymplecticGate(np.eye(2), shift, (mode,))


def gaussian_transform(passive, active, modes: Sequence[int]) -> SymplecticGate:
    """Gate generated by the quadratic Hamiltonian with Hermitian ``passive`` and symmetric ``active`` blocks."""
    A = np.asarray(passive, dtype=complex)
    B = np.asarray(active, dtype=complex)
    k = len(modes)
    if A.shape != (k, k) or B.shape != (k, k):
        raise ValueError(f"passive and active blocks must be {k}x{k}")
    if np.max(np.abs(A - A.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(A))):
        raise ValueError("passive block must be Hermitian")
    if np.max(np.abs(B - B.T)) > 1e-12 * max(1.0, np.max(np.abs(B))):
        raise ValueError("active block must be symmetric")
    H = np.block([[A, B], [B.conj(), A.conj()]])
    K = np.diag(np.concatenate([np.ones(k), -np.ones(k)]))
    Sc = expm(-1j * K @ H)
    E, F = Sc[:k, :k], Sc[:k, k:]
    I = np.eye(k)
    if np.max(np.abs(E @ E.conj().T - F @ F.conj().T - I)) > SYMPLECTIC_TOL * max(1.0, np.max(np.abs(E)) ** 2):
        raise ValueError("generated transform is not symplectic within tolerance")
    return SymplecticGate(ladder_to_real(E, F), np.zeros(2 * k), tuple(modes))


def symplectic_of(name: str, params: dict, modes: Sequence[int], hbar: float = 2.0) -> SymplecticGate:
    """Gate from an instruction name and its parameter mapping."""
    modes = tuple(int(m) for m in modes)
    if name == "Phaseshifter":
        return phaseshifter(params["phi"], *modes)
    if name == "Beamsplitter":
        return beamsplitter(params["theta"], params.get("phi", 0.0), modes)
    if name == "Squeezing":
        return squeezing(params["r"], params.get("z_phi", 0.0), *modes)
    if name == "Displacement":
        alpha = complex(params.get("alpha_re", 0.0), params.get("alpha_im", 0.0))
        return displacement(alpha, *modes, hbar=hbar)
    if name == "Interferometer":
        return passive_gate(params["matrix"], modes)
    if name == "GaussianTransform":
        return gaussian_transform(params["passive"], params["active"], modes)
    raise ValueError(f"{name} is not a Gaussian gate")


def evolve(state: GaussianState, gate: SymplecticGate) -> GaussianState:
    """``mu -> S mu + delta``, ``sigma -> S sigma S^T`` on the gate's modes."""
    d = state.d
    for m in gate.modes:
        if not 0 <= m < d:
            raise IndexError(f"mode {m} out of range for {d} modes")
    idx = _quad_index(gate.modes, d)
    S = np.eye(2 * d)
    S[np.ix_(idx, idx)] = gate.S
    mu = S @ state.mu
    mu[idx] += gate.displacement
    sigma = S @ state.sigma @ S.T
    return GaussianState(mu, 0.5 * (sigma + sigma.T), state.hbar)


# -- photon counting ----------------------------------------------------------------


@dataclass
class HusimiData:
    Q: np.ndarray
    Sigma: np.ndarray
    A: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    Qinv: np.ndarray
    prefactor: float
    displaced: bool


def husimi_data(state: GaussianState) -> HusimiData:
    """Husimi covariance ``Q``, kernel matrix ``A`` and loop vector ``gamma``.

    ``beta = (alpha, alpha*)`` is the complex mean; the displaced prefactor is
    ``exp(-beta† Q^{-1} beta / 2) / sqrt(det Q)`` and ``gamma = X Q^{-1} beta``.
    """
    d, h = state.d, state.hbar
    W = w_matrix(d)
    Sigma = W @ state.sigma @ W.conj().T / (2 * h)
    Q = Sigma + 0.5 * np.eye(2 * d)
    try:
        Qinv = np.linalg.inv(Q)
    except np.linalg.LinAlgError as exc:
        raise ValueError("Husimi covariance is singular (unphysical state)") from exc
    X = x_matrix(d)
    A = X @ (np.eye(2 * d) - Qinv)
    A = 0.5 * (A + A.T)
    beta = W @ state.mu / np.sqrt(h)
    displaced = bool(np.any(beta != 0))
    detQ = np.linalg.det(Q).real
    if not detQ > 0:
        raise ValueError("Husimi covariance is not positive definite (unphysical state)")
    quad = (beta.conj() @ Qinv @ beta).real if displaced else 0.0
    return HusimiData(
        Q=Q,
        Sigma=Sigma,
        A=A,
        gamma=X @ Qinv @ beta,
        beta=beta,
        Qinv=Qinv,
        prefactor=float(np.exp(-0.5 * quad) / np.sqrt(detQ)),
        displaced=displaced,
    )


def _pattern(pattern, d: int) -> np.ndarray:
    t = np.asarray(pattern, dtype=np.int64)
    if t.shape != (d,):
        raise ValueError(f"pattern must have length {d}, got {t.shape}")
    if np.any(t < 0):
        raise ValueError("pattern entries must be non-negative")
    return t


def _pnr_from_husimi(data: HusimiData, t: np.ndarray, kernels) -> float:
    reps = np.concatenate([t, t])
    if data.displaced:
        val = kernels.loop_hafnian(data.A, data.gamma, reps)
    else:
        if t.sum() == 0:
            return data.prefactor
        val = kernels.hafnian(data.A, reps)
    fact = float(np.prod([math.factorial(int(v)) for v in t]))
    p = float(data.prefactor * val.real / fact)
    return 0.0 if p < 0.0 else p


def pnr_probability(state: GaussianState, pattern, kernels=None) -> float:
    """Probability of the photon-number pattern ``pattern`` (one count per mode)."""
    t = _pattern(pattern, state.d)
    return _pnr_from_husimi(husimi_data(state), t, kernels or _kernels)


def _threshold_from_husimi(data: HusimiData, t: np.ndarray, kernels) -> float:
    if not np.all((t == 0) | (t == 1)):
        raise ValueError("threshold pattern must be binary")
    d = t.size
    clicked = np.flatnonzero(t)
    if clicked.size == 0:
        return data.prefactor
    W = w_matrix(d)
    O = np.eye(2 * d) - data.Qinv
    R = W.conj().T @ O @ W
    idx = _quad_index(clicked, d)
    Rt = R[np.ix_(idx, idx)]
    Rt = 0.5 * (Rt + Rt.conj().T)
    if np.max(np.abs(Rt.imag)) <= 1e-13:
        Rt = Rt.real
    if data.displaced:
        g = (W.T @ (data.Qinv @ data.beta).conj())[idx]
        val = kernels.loop_torontonian(Rt, g)
    else:
        val = kernels.torontonian(Rt)
    p = float(data.prefactor * val)
    return 0.0 if p < 0.0 else p


def threshold_probability(state: GaussianState, pattern, kernels=None) -> float:
    """Probability of the click pattern (1 = at least one photon)."""
    t = _pattern(pattern, state.d)
    return _threshold_from_husimi(husimi_data(state), t, kernels or _kernels)


# -- samplers -----------------------------------------------------------------------


def _chain_rule(
    state: GaussianState,
    shots: int,
    seed: int,
    outcomes: np.ndarray,
    joint,
) -> tuple[np.ndarray, dict]:
    """Mode-by-mode sampling from the joint probabilities of marginal states.

    ``joint(data, pattern)`` evaluates the probability of a prefix pattern on
    the marginal described by ``data``.  Shots sharing a prefix share one set
    of conditionals.
    """
    d = state.d
    u = shot_uniforms(seed, shots, d)
    samples = np.zeros((shots, d), dtype=np.int64)
    previous = {(): 1.0}
    tails = []
    for k in range(d):
        data = husimi_data(state.reduced(range(k + 1)))
        prefixes, group = np.unique(samples[:, :k], axis=0, return_inverse=True)
        group = group.reshape(-1)
        nxt = {}
        for g, prefix in enumerate(prefixes):
            key = tuple(int(v) for v in prefix)
            prev = previous[key]
            if not prev > 0.0:
                raise FloatingPointError(f"marginal probability of prefix {key} vanished; increase the per-mode cap")
            probs = np.array([joint(data, np.array(key + (int(n),))) for n in outcomes])
            if not np.all(np.isfinite(probs)):
                raise FloatingPointError(f"non-finite outcome probability after prefix {key}")
            probs = np.clip(probs, 0.0, None)
            total = probs.sum()
            if not total > 0.0:
                raise FloatingPointError(f"no outcome within the cap after prefix {key}; increase the per-mode cap")
            tails.append(max(0.0, 1.0 - total / prev))
            for n, p in zip(outcomes, probs):
                nxt[key + (int(n),)] = p
            members = np.flatnonzero(group == g)
            samples[members, k] = outcomes[inverse_cdf(probs, u[members, k])]
        previous = nxt
    diag = {"max_discarded_tail": float(max(tails, default=0.0)), "conditionals": len(tails)}
    return samples, diag


def sample_pnr_gbs(
    state: GaussianState,
    shots: int,
    seed: Optional[int] = None,
    per_mode_cap: int = 10,
    kernels=None,
) -> SampleBatch:
    """Photon-number samples, each mode capped at ``per_mode_cap - 1`` photons."""
    if per_mode_cap < 1:
        raise ValueError("per_mode_cap must be at least 1")
    seed = new_seed() if seed is None else check_seed(seed)
    kernels = kernels or _kernels
    samples, diag = _chain_rule(
        state,
        shots,
        seed,
        np.arange(per_mode_cap),
        lambda data, t: _pnr_from_husimi(data, t, kernels),
    )
    return SampleBatch(samples, tuple(range(state.d)), seed, diag)


def sample_threshold(state: GaussianState, shots: int, seed: Optional[int] = None, kernels=None) -> SampleBatch:
    seed = new_seed() if seed is None else check_seed(seed)
    kernels = kernels or _kernels
    samples, diag = _chain_rule(
        state,
        shots,
        seed,
        np.arange(2),
        lambda data, t: _threshold_from_husimi(data, t, kernels),
    )
    diag.pop("max_discarded_tail")
    return SampleBatch(samples, tuple(range(state.d)), seed, diag)


def homodyne_moments(state: GaussianState, phi: float, mode: int) -> tuple[float, float]:
    """Mean and variance of ``cos(phi) x + sin(phi) p`` on ``mode``."""
    d = state.d
    u = np.zeros(2 * d)
    u[mode] = np.cos(phi)
    u[mode + d] = np.sin(phi)
    return float(u @ state.mu), float(u @ state.sigma @ u / 2)


def sample_homodyne(
    state: GaussianState,
    phi: float,
    modes: Sequence[int],
    shots: int,
    seed: Optional[int] = None,
) -> SampleBatch:
    """Rotated-quadrature samples on ``modes`` (joint Gaussian, covariance of the rotated quadratures)."""
    seed = new_seed() if seed is None else check_seed(seed)
    modes = tuple(int(m) for m in modes)
    d = state.d
    U = np.zeros((len(modes), 2 * d))
    for row, m in enumerate(modes):
        if not 0 <= m < d:
            raise IndexError(f"mode {m} out of range for {d} modes")
        U[row, m] = np.cos(phi)
        U[row, m + d] = np.sin(phi)
    mean = U @ state.mu
    cov = U @ state.sigma @ U.T / 2
    z = shot_normals(seed, shots, len(modes))
    samples = mean + z @ _sqrt_psd(cov).T
    return SampleBatch(samples, modes, seed, {"phi": float(phi)})


def sample_heterodyne(state: GaussianState, modes: Sequence[int], shots: int, seed: Optional[int] = None) -> SampleBatch:
    """Complex samples ``alpha`` from the Husimi density of the marginal on ``modes``.

    Real covariance of ``(Re alpha, Im alpha)`` is ``(sigma / (2 hbar) + I/2) / 2``,
    so the vacuum gives ``E|alpha|^2 = 1``.
    """
    seed = new_seed() if seed is None else check_seed(seed)
    modes = tuple(int(m) for m in modes)
    red = state.reduced(modes)
    k = len(modes)
    mean = red.mu / np.sqrt(2 * red.hbar)
    cov = (red.sigma / (2 * red.hbar) + 0.5 * np.eye(2 * k)) / 2
    z = shot_normals(seed, shots, 2 * k)
    real = mean + z @ _sqrt_psd(cov).T
    return SampleBatch(real[:, :k] + 1j * real[:, k:], modes, seed, {})


def _sqrt_psd(cov: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(cov)
    return vecs * np.sqrt(np.clip(vals, 0.0, None))
