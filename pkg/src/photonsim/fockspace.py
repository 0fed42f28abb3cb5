"""Pure states on the globally truncated Fock space.

A ``d``-mode state with cutoff ``c`` stores one amplitude per occupation
vector with total photon number below ``c``.  Basis order: sectors by total
photon number ascending; within a sector, occupation tuples in descending
lexicographic order, so for ``d=2, c=2`` the order is ``(0,0), (1,0), (0,1)``.

Gates never renormalise.  Amplitude pushed above the cutoff by an active gate
is dropped and shows up as ``norm2() < 1``.  Passive gates act within photon
number sectors and so keep the norm exactly.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

from . import kernels as _kernels
from .rng import check_seed, inverse_cdf, new_seed, shot_uniforms
from .samples import SampleBatch

UNITARY_TOL = 1e-10
_INT64_MAX = 2**63 - 1


def space_dim(d: int, c: int) -> int:
    """Number of occupation vectors on ``d`` modes with total below ``c``."""
    if d < 1 or c < 1:
        raise ValueError(f"need d >= 1 and c >= 1, got d={d}, c={c}")
    dim = math.comb(d + c - 1, c - 1)
    if dim > _INT64_MAX:
        raise OverflowError(f"dim({d}, {c}) = {dim} exceeds 64-bit indexing")
    return dim


def _compositions(total: int, d: int) -> Iterator[tuple[int, ...]]:
    if d == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, d - 1):
            yield (first,) + rest


def sector_basis(d: int, total: int) -> list[tuple[int, ...]]:
    """Occupation vectors with exactly ``total`` photons, in basis order."""
    return list(_compositions(total, d))


@lru_cache(maxsize=64)
def _basis_array(d: int, c: int) -> np.ndarray:
    space_dim(d, c)
    rows = [occ for n in range(c) for occ in _compositions(n, d)]
    arr = np.array(rows, dtype=np.int64).reshape(len(rows), d)
    arr.setflags(write=False)
    return arr


def enumerate_basis(d: int, c: int) -> list[tuple[int, ...]]:
    return [tuple(int(v) for v in row) for row in _basis_array(d, c)]


@lru_cache(maxsize=16)
def _binomials(size: int) -> np.ndarray:
    table = np.zeros((size + 1, size + 1), dtype=np.int64)
    for a in range(size + 1):
        for b in range(a + 1):
            table[a, b] = math.comb(a, b)
    return table


def _rank(occ: np.ndarray) -> np.ndarray:
    """Vectorised basis index of each row of ``occ``."""
    occ = np.atleast_2d(np.asarray(occ, dtype=np.int64))
    n_rows, d = occ.shape
    remaining = occ.sum(axis=1)
    top = int(remaining.max(initial=0))
    C = _binomials(top + d + 1)
    rank = C[remaining + d - 1, d].copy()
    for i in range(d - 1):
        left = remaining - occ[:, i]
        rank += np.where(left > 0, C[np.maximum(left + d - i - 2, 0), d - i - 1], 0)
        remaining = left
    return rank


def basis_index(n: Sequence[int], c: int) -> int:
    occ = np.asarray(n, dtype=np.int64)
    if occ.ndim != 1 or np.any(occ < 0):
        raise ValueError(f"occupation must be a vector of non-negative integers, got {n}")
    if occ.sum() >= c:
        raise ValueError(f"total photon number {int(occ.sum())} is not below cutoff {c}")
    return int(_rank(occ[None, :])[0])


class FockStateVector:
    """Amplitudes over the truncated basis of ``d`` modes with cutoff ``c``."""

    def __init__(self, d: int, cutoff: int, amplitudes: Optional[np.ndarray] = None):
        self.d = int(d)
        self.cutoff = int(cutoff)
        dim = space_dim(self.d, self.cutoff)
        if amplitudes is None:
            amplitudes = np.zeros(dim, dtype=complex)
            amplitudes[0] = 1.0
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if amplitudes.shape != (dim,):
            raise ValueError(f"expected {dim} amplitudes, got shape {amplitudes.shape}")
        self.amplitudes = amplitudes.copy()

    @classmethod
    def vacuum(cls, d: int, cutoff: int) -> "FockStateVector":
        return cls(d, cutoff)

    @classmethod
    def from_occupations(cls, d: int, cutoff: int, terms: Mapping[tuple, complex]) -> "FockStateVector":
        amps = np.zeros(space_dim(d, cutoff), dtype=complex)
        for occ, coef in terms.items():
            if len(occ) != d:
                raise ValueError(f"occupation {occ} does not have {d} modes")
            amps[basis_index(occ, cutoff)] += coef
        return cls(d, cutoff, amps)

    @property
    def basis(self) -> np.ndarray:
        return _basis_array(self.d, self.cutoff)

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def amplitude(self, occ: Sequence[int]) -> complex:
        return complex(self.amplitudes[basis_index(occ, self.cutoff)])

    def copy(self) -> "FockStateVector":
        return FockStateVector(self.d, self.cutoff, self.amplitudes)

    def __repr__(self) -> str:
        return f"FockStateVector(d={self.d}, cutoff={self.cutoff}, norm2={self.norm2():.6g})"


# -- local operators -----------------------------------------------------------


def build_squeezing_operator(c: int, z: complex) -> np.ndarray:
    """Matrix of ``exp((z* a^2 - z a†^2) / 2)`` on occupations ``0..c-1``.

    Exact matrix elements from the standard two-term recurrence, so column 0
    is the squeezed vacuum expansion.
    """
    r, theta = abs(z), np.angle(z)
    S = np.zeros((c, c), dtype=complex)
    sq = np.sqrt(np.arange(c, dtype=float))
    eth = np.exp(1j * theta) * np.tanh(r)
    sech = 1.0 / np.cosh(r)
    S[0, 0] = np.sqrt(sech)
    for m in range(2, c, 2):
        S[m, 0] = -eth * sq[m - 1] / sq[m] * S[m - 2, 0]
    for m in range(c):
        for n in range(1, c):
            if (m + n) % 2:
                continue
            val = 0j
            if n >= 2:
                val += np.conj(eth) * sq[n - 1] / sq[n] * S[m, n - 2]
            if m >= 1:
                val += sech * sq[m] / sq[n] * S[m - 1, n - 1]
            S[m, n] = val
    return S


def build_displacement_operator(c: int, alpha: complex) -> np.ndarray:
    """Matrix of ``exp(alpha a† - alpha* a)`` on occupations ``0..c-1``."""
    D = np.zeros((c, c), dtype=complex)
    sq = np.sqrt(np.arange(c, dtype=float))
    D[0, 0] = np.exp(-0.5 * abs(alpha) ** 2)
    for m in range(1, c):
        D[m, 0] = alpha / sq[m] * D[m - 1, 0]
    for n in range(1, c):
        D[0, n] = -np.conj(alpha) / sq[n] * D[0, n - 1]
        for m in range(1, c):
            D[m, n] = (-np.conj(alpha) * D[m, n - 1] + sq[m] * D[m - 1, n - 1]) / sq[n]
    return D


def build_phaseshift_operator(c: int, phi: float) -> np.ndarray:
    return np.diag(np.exp(1j * phi * np.arange(c)))


def build_kerr_operator(c: int, kappa: float) -> np.ndarray:
    return np.diag(np.exp(1j * kappa * np.arange(c) ** 2))


# -- gate application ------------------------------------------------------------


@lru_cache(maxsize=256)
def _local_table(d: int, c: int, mode: int) -> np.ndarray:
    """``T[g, k]`` = index of the state with ``k`` photons in ``mode`` and rest-group ``g`` (-1 if above cutoff)."""
    basis = _basis_array(d, c)
    rest = basis.copy()
    rest[:, mode] = 0
    _, group = np.unique(_rank(rest), return_inverse=True)
    table = np.full((group.max() + 1, c), -1, dtype=np.int64)
    table[group, basis[:, mode]] = np.arange(len(basis))
    table.setflags(write=False)
    return table


def _check_modes(modes: Sequence[int], d: int) -> tuple[int, ...]:
    modes = tuple(int(m) for m in modes)
    if len(set(modes)) != len(modes):
        raise ValueError(f"repeated mode indices in {modes}")
    for m in modes:
        if not 0 <= m < d:
            raise IndexError(f"mode {m} out of range for {d} modes")
    return modes


def apply_single_mode(state: FockStateVector, op: np.ndarray, mode: int) -> FockStateVector:
    """Apply a ``c x c`` local operator to one mode, discarding weight above the cutoff."""
    (mode,) = _check_modes([mode], state.d)
    op = np.asarray(op, dtype=complex)
    if op.shape != (state.cutoff, state.cutoff):
        raise ValueError(f"local operator must be {state.cutoff}x{state.cutoff}, got {op.shape}")
    table = _local_table(state.d, state.cutoff, mode)
    valid = table >= 0
    block = np.where(valid, state.amplitudes[np.where(valid, table, 0)], 0)
    out = np.zeros_like(state.amplitudes)
    out[table[valid]] = (block @ op.T)[valid]
    return FockStateVector(state.d, state.cutoff, out)


def apply_diagonal(state: FockStateVector, phases: np.ndarray, mode: int) -> FockStateVector:
    """Multiply each amplitude by ``phases[n_mode]`` (phaseshift, Kerr)."""
    (mode,) = _check_modes([mode], state.d)
    counts = state.basis[:, mode]
    return FockStateVector(state.d, state.cutoff, state.amplitudes * np.asarray(phases)[counts])


def sector_matrix(U: np.ndarray, total: int, kernels=None) -> np.ndarray:
    """Action of the passive unitary ``U`` on the ``total``-photon sector of its modes.

    Entry ``(t, s)`` is ``per(U[t rows, s cols]) / sqrt(prod t! s!)`` in
    :func:`sector_basis` order, with input mode ``j`` sent to
    ``sum_i U[i, j] a_i^dagger``.
    """
    perm = (kernels or _kernels).permanent
    basis = sector_basis(U.shape[0], total)
    fact = np.array([np.prod([math.factorial(v) for v in occ]) for occ in basis], dtype=float)
    M = np.empty((len(basis), len(basis)), dtype=complex)
    for a, t in enumerate(basis):
        for b, s in enumerate(basis):
            M[a, b] = perm(U, t, s)
    return M / np.sqrt(np.outer(fact, fact))


@lru_cache(maxsize=256)
def _sector_tables(d: int, c: int, modes: tuple[int, ...]) -> list[np.ndarray]:
    basis = _basis_array(d, c)
    sub = basis[:, list(modes)]
    k = sub.sum(axis=1)
    rest = basis.copy()
    rest[:, list(modes)] = 0
    rest_rank = _rank(rest)
    tables = []
    for total in range(c):
        sel = np.flatnonzero(k == total)
        if sel.size == 0:
            tables.append(np.zeros((0, 0), dtype=np.int64))
            continue
        inner = _rank(sub[sel]) - math.comb(total + len(modes) - 1, len(modes))
        _, group = np.unique(rest_rank[sel], return_inverse=True)
        table = np.empty((group.max() + 1, math.comb(total + len(modes) - 1, total)), dtype=np.int64)
        table[group, inner] = sel
        tables.append(table)
    return tables


def apply_passive_interferometer(state: FockStateVector, U, modes: Sequence[int], kernels=None) -> FockStateVector:
    """Apply a passive unitary on ``modes`` sector by sector (norm preserving)."""
    modes = _check_modes(modes, state.d)
    U = np.asarray(U, dtype=complex)
    if U.shape != (len(modes), len(modes)):
        raise ValueError(f"unitary must be {len(modes)}x{len(modes)}, got {U.shape}")
    if np.max(np.abs(U @ U.conj().T - np.eye(len(modes)))) > UNITARY_TOL:
        raise ValueError("interferometer matrix is not unitary within 1e-10")
    out = np.zeros_like(state.amplitudes)
    out[0] = state.amplitudes[0]
    for total, table in enumerate(_sector_tables(state.d, state.cutoff, modes)):
        if table.size == 0:
            continue
        if total == 0:
            out[table] = state.amplitudes[table]
            continue
        M = sector_matrix(U, total, kernels)
        out[table] = state.amplitudes[table] @ M.T
    return FockStateVector(state.d, state.cutoff, out)


# -- measurement -----------------------------------------------------------------


def _marginal(state: FockStateVector, modes: Optional[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    """Outcomes (rows) in basis order restricted to ``modes`` and their probabilities."""
    probs = np.abs(state.amplitudes) ** 2
    if modes is None or tuple(modes) == tuple(range(state.d)):
        return state.basis, probs
    modes = _check_modes(modes, state.d)
    sub = state.basis[:, list(modes)]
    ranks = _rank(sub)
    marg = np.bincount(ranks, weights=probs)
    outcomes = _basis_array(len(modes), state.cutoff)[: len(marg)]
    return outcomes, marg


def pnr_probabilities(state: FockStateVector, modes: Optional[Sequence[int]] = None) -> dict[tuple, float]:
    """Photon-number outcome probabilities ``|c_n|^2`` (marginalised onto ``modes`` if given)."""
    if state.norm2() == 0.0:
        raise ValueError("cannot measure a zero-norm state")
    outcomes, probs = _marginal(state, modes)
    return {tuple(int(v) for v in occ): float(p) for occ, p in zip(outcomes, probs)}


def sample_pnr(
    state: FockStateVector,
    shots: int,
    seed: Optional[int] = None,
    modes: Optional[Sequence[int]] = None,
) -> SampleBatch:
    """Inverse-CDF sampling over the basis order; truncation loss is renormalised away and reported."""
    norm2 = state.norm2()
    if norm2 == 0.0:
        raise ValueError("cannot measure a zero-norm state")
    seed = new_seed() if seed is None else check_seed(seed)
    outcomes, probs = _marginal(state, modes)
    u = shot_uniforms(seed, shots, 1)[:, 0]
    idx = inverse_cdf(probs, u) if shots else np.zeros(0, dtype=np.int64)
    chosen = tuple(range(state.d)) if modes is None else tuple(int(m) for m in modes)
    return SampleBatch(
        samples=np.ascontiguousarray(outcomes[idx], dtype=np.int64),
        modes=chosen,
        seed=seed,
        diagnostics={"norm2": norm2, "truncation_loss": max(0.0, 1.0 - norm2)},
    )


def state_distance(a: FockStateVector, b: FockStateVector) -> float:
    if (a.d, a.cutoff) != (b.d, b.cutoff):
        raise ValueError("states live on different truncated spaces")
    return float(np.linalg.norm(a.amplitudes - b.amplitudes))
