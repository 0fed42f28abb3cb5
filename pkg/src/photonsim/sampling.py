"""Boson sampling with Fock-state inputs through (sub)unitary interferometers.

Input mode ``j`` is sent to ``sum_i A[i, j] a_i^dagger``, so output pattern
``t`` from input ``s`` has amplitude ``per(A[t rows, s cols]) / sqrt(s! t!)``.
Lossy (subunitary) matrices are embedded in a ``2d``-mode unitary whose
extra modes collect the lost photons.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from . import kernels as _kernels
from .fockspace import sector_basis
from .rng import check_seed, inverse_cdf, new_seed, shot_uniforms
from .samples import SampleBatch

UNITARY_TOL = 1e-10


def _matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"interferometer must be square, got shape {A.shape}")
    return A


def is_unitary(A, tol: float = UNITARY_TOL) -> bool:
    A = _matrix(A)
    return bool(np.max(np.abs(A @ A.conj().T - np.eye(A.shape[0])), initial=0.0) <= tol)


def check_subunitary(A, tol: float = UNITARY_TOL) -> np.ndarray:
    A = _matrix(A)
    if A.size and np.linalg.norm(A, 2) > 1.0 + tol:
        raise ValueError("interferometer has singular values above 1 (AA† <= I violated)")
    return A


def _occ(v, d: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.int64)
    if v.shape != (d,) or np.any(v < 0):
        raise ValueError(f"{name} must be {d} non-negative counts")
    return v


def _fact(v: np.ndarray) -> float:
    return float(np.prod([math.factorial(int(x)) for x in v]))


def bs_probability(A, s, t, kernels=None) -> float:
    """Probability of output pattern ``t`` for Fock input ``s``.

    For a subunitary ``A`` the probability is the marginal of the dilated
    unitary over all ways of losing ``sum(s) - sum(t)`` photons.
    """
    kernels = kernels or _kernels
    A = check_subunitary(A)
    d = A.shape[0]
    s = _occ(s, d, "input")
    t = _occ(t, d, "output")
    if is_unitary(A):
        if s.sum() != t.sum():
            raise ValueError(f"photon numbers differ ({s.sum()} in, {t.sum()} out) for a unitary interferometer")
        return abs(kernels.permanent(A, t, s)) ** 2 / (_fact(s) * _fact(t))
    lost = int(s.sum() - t.sum())
    if lost < 0:
        return 0.0
    U = dilate_lossy(A)
    s2 = np.concatenate([s, np.zeros(d, dtype=np.int64)])
    total = 0.0
    for anc in sector_basis(d, lost):
        t2 = np.concatenate([t, anc])
        total += abs(kernels.permanent(U, t2, s2)) ** 2 / (_fact(s2) * _fact(t2))
    return float(total)


def output_patterns(d: int, n: int) -> list[tuple[int, ...]]:
    return sector_basis(d, n)


def dilate_lossy(A) -> np.ndarray:
    """Unitary ``[[A, V D'], [D' W, -D]]`` on ``2d`` modes for ``A = V D W`` (SVD).

    ``D`` holds the singular values (transmission amplitudes) and
    ``D' = sqrt(1 - D^2)``.  The top-left block is ``A`` itself.
    """
    A = check_subunitary(A)
    V, sv, Wh = np.linalg.svd(A)
    sv = np.where(np.abs(sv - 1.0) <= UNITARY_TOL, 1.0, np.minimum(sv, 1.0))
    comp = np.sqrt(1.0 - sv**2)
    U = np.block([[A, V * comp], [comp[:, None] * Wh, -np.diag(sv)]])
    return U


def apply_loss(A, etas: Sequence[float]) -> np.ndarray:
    """Scale output row ``i`` of the interferometer by ``sqrt(eta_i)``."""
    A = _matrix(A)
    etas = np.asarray(etas, dtype=float)
    if etas.shape != (A.shape[0],):
        raise ValueError(f"need one transmissivity per mode ({A.shape[0]})")
    if np.any(etas < 0) or np.any(etas > 1):
        raise ValueError("transmissivities must lie in [0, 1]")
    return np.sqrt(etas)[:, None] * A


def sample_bs(A, s, shots: int, seed: Optional[int] = None, kernels=None) -> SampleBatch:
    """Exact boson sampling (Clifford–Clifford, algorithm A) through a unitary.

    Each shot permutes its input photons at random, then places photon
    ``k`` on output mode ``i`` with weight
    ``|per(A[prefix + e_i rows, first k+1 input cols])|^2``.  Shots with the
    same (placed photons, used inputs) multisets share weights.
    """
    kernels = kernels or _kernels
    A = _matrix(A)
    if not is_unitary(A):
        raise ValueError("sample_bs needs a unitary interferometer; dilate lossy matrices first")
    D = A.shape[0]
    s = _occ(s, D, "input")
    seed = new_seed() if seed is None else check_seed(seed)
    n = int(s.sum())
    samples = np.zeros((shots, D), dtype=np.int64)
    if n == 0 or shots == 0:
        return SampleBatch(samples, tuple(range(D)), seed, {"photons": n})

    photons = np.repeat(np.arange(D), s)
    u = shot_uniforms(seed, shots, 2 * n)
    order = photons[np.argsort(u[:, :n], axis=1, kind="stable")]
    used = np.zeros((shots, D), dtype=np.int64)
    cache: dict[bytes, np.ndarray] = {}
    for k in range(n):
        used[np.arange(shots), order[:, k]] += 1
        keys = np.concatenate([used, samples], axis=1)
        uniq, group = np.unique(keys, axis=0, return_inverse=True)
        group = group.reshape(-1)
        for g, key in enumerate(uniq):
            cols, rows = key[:D], key[D:]
            tag = key.tobytes()
            w = cache.get(tag)
            if w is None:
                w = _placement_weights(A, rows, cols, kernels)
                cache[tag] = w
            members = np.flatnonzero(group == g)
            choice = inverse_cdf(w, u[members, n + k])
            samples[members, choice] += 1
    return SampleBatch(samples, tuple(range(D)), seed, {"photons": n})


def _placement_weights(A: np.ndarray, rows: np.ndarray, cols: np.ndarray, kernels) -> np.ndarray:
    D = A.shape[0]
    live = np.flatnonzero(cols)
    w = np.zeros(D)
    for i in range(D):
        if not np.any(A[i, live]):
            continue
        r = rows.copy()
        r[i] += 1
        w[i] = abs(kernels.permanent(A, r, cols)) ** 2
    return w


def sample_lossy(A, s, shots: int, seed: Optional[int] = None, kernels=None) -> SampleBatch:
    """Sample through a subunitary matrix via its dilation; ancilla columns are dropped."""
    A = check_subunitary(A)
    d = A.shape[0]
    s = _occ(s, d, "input")
    U = dilate_lossy(A)
    batch = sample_bs(U, np.concatenate([s, np.zeros(d, dtype=np.int64)]), shots, seed, kernels)
    lost = batch.samples[:, d:].sum(axis=1)
    return SampleBatch(
        np.ascontiguousarray(batch.samples[:, :d]),
        tuple(range(d)),
        batch.seed,
        {"photons": int(s.sum()), "mean_lost": float(lost.mean()) if lost.size else 0.0},
    )


def exact_distribution(A, s, kernels=None) -> dict[tuple, float]:
    """All output patterns with their probabilities (lossy matrices included)."""
    A = check_subunitary(A)
    d = A.shape[0]
    n = int(np.sum(s))
    totals = [n] if is_unitary(A) else range(n + 1)
    return {t: bs_probability(A, s, t, kernels) for m in totals for t in sector_basis(d, m)}
