"""Matrix functions behind photon-counting probabilities.

Public entry points validate input, reduce repetition vectors to the compact
form the inner loops expect, and dispatch to either the compiled extension
(``_fastcore``) or the numpy fallback (``_pycore``).  The choice is made at
import time and can be forced with ``PHOTONSIM_KERNELS=python``; each function
also accepts ``impl="compiled" | "python"`` for side-by-side benchmarking.

Worker threads for the compiled outer sums are capped by
``PHOTONSIM_NUM_THREADS``.  Chunking and the pairwise reduction order are fixed,
so results are bit-identical for any thread count.
"""

from __future__ import annotations

import os
from types import ModuleType
from typing import Optional

import numpy as np

from . import _pycore
from .oracle import (
    DEFAULT_CAP,
    OracleTooLarge,
    oracle_hafnian,
    oracle_loop_hafnian,
    oracle_loop_torontonian,
    oracle_permanent,
    oracle_torontonian,
)

try:
    from . import _fastcore
except ImportError:  # pragma: no cover - depends on the build
    _fastcore = None

THREADS_ENV = "PHOTONSIM_NUM_THREADS"
IMPL_ENV = "PHOTONSIM_KERNELS"
SYMMETRY_TOL = 1e-12
DET_RESIDUAL_TOL = 1e-10

__all__ = [
    "BACKEND",
    "DEFAULT_CAP",
    "KernelInputError",
    "OracleTooLarge",
    "available_impls",
    "hafnian",
    "loop_hafnian",
    "loop_torontonian",
    "num_threads",
    "oracle_hafnian",
    "oracle_loop_hafnian",
    "oracle_loop_torontonian",
    "oracle_permanent",
    "oracle_torontonian",
    "permanent",
    "torontonian",
]


class KernelInputError(ValueError):
    """Input violates a kernel precondition (shape, symmetry, multiplicities)."""


def _select_default() -> str:
    wanted = os.environ.get(IMPL_ENV, "auto").lower()
    if wanted == "python" or _fastcore is None:
        return "python"
    return "compiled"


BACKEND = _select_default()


def available_impls() -> list[str]:
    return ["compiled", "python"] if _fastcore is not None else ["python"]


def _core(impl: Optional[str]) -> ModuleType:
    impl = impl or BACKEND
    if impl == "compiled":
        if _fastcore is None:
            raise RuntimeError("compiled kernels are not built; reinstall with Cython available")
        return _fastcore
    if impl == "python":
        return _pycore
    raise ValueError(f"unknown kernel implementation {impl!r}")


def num_threads() -> int:
    """Worker-thread cap for compiled kernels (``PHOTONSIM_NUM_THREADS``, default: all cores)."""
    value = os.environ.get(THREADS_ENV)
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


def _square(A, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise KernelInputError(f"{name} must be a square matrix, got shape {A.shape}")
    return A


def _counts(values, n: int, name: str) -> np.ndarray:
    if values is None:
        return np.ones(n, dtype=np.int64)
    arr = np.asarray(values)
    if arr.shape != (n,):
        raise KernelInputError(f"{name} must have length {n}, got shape {arr.shape}")
    if not np.all(arr == np.round(arr)) or np.any(arr < 0):
        raise KernelInputError(f"{name} must contain non-negative integers")
    return arr.astype(np.int64)


def _require_symmetric(A: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if A.size and np.max(np.abs(A - A.T)) > SYMMETRY_TOL * scale:
        raise KernelInputError("matrix must be symmetric")


def _require_hermitian(A: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if A.size and np.max(np.abs(A - A.conj().T)) > SYMMETRY_TOL * scale:
        raise KernelInputError("matrix must be Hermitian (real symmetric for real input)")


# -- permanent ---------------------------------------------------------------


def permanent(A, row_mult=None, col_mult=None, *, impl: Optional[str] = None) -> complex:
    """Permanent of ``A`` with row ``i`` repeated ``row_mult[i]`` times and column ``j`` ``col_mult[j]`` times.

    Uses the Glynn formula with the outer sum ordered by an n-ary reflected
    Gray code whose digit ``i`` counts the sign-flipped copies of row ``i``;
    the repeated matrix is never materialised.
    """
    A = _square(A)
    n = A.shape[0]
    rows = _counts(row_mult, n, "row_mult")
    cols = _counts(col_mult, n, "col_mult")
    if rows.sum() != cols.sum():
        raise KernelInputError(f"row and column multiplicities differ in total ({rows.sum()} != {cols.sum()})")
    if rows.sum() == 0:
        return 1.0 + 0.0j

    ri = np.flatnonzero(rows)
    ci = np.flatnonzero(cols)
    sub = A[np.ix_(ri, ci)]
    r, c = rows[ri], cols[ci]
    if _gray_states(c) < _gray_states(r):
        sub, r, c = sub.T, c, r
    order = np.argsort(r, kind="stable")
    sub, r = sub[order], r[order]
    return _core(impl).permanent_gray(np.ascontiguousarray(sub), np.ascontiguousarray(r), np.ascontiguousarray(c), num_threads())


def _gray_states(mult: np.ndarray) -> float:
    m = np.sort(mult)
    return float(m[0] * np.prod(m[1:] + 1.0))


# -- hafnian family ----------------------------------------------------------


def _pairing(reps: np.ndarray) -> tuple[list[int], list[int], list[int]]:
    """Split the expanded index multiset into pairs ``(first, second, multiplicity)``.

    Block-structured repetitions (``reps[i] == reps[i + n/2]``, the Gaussian
    reduction layout) pair ``i`` with ``i + n/2``; otherwise each index pairs
    with its own copies and odd leftovers pair consecutively.
    """
    n = len(reps)
    h = n // 2
    if n % 2 == 0 and np.array_equal(reps[:h], reps[h:]):
        keep = [i for i in range(h) if reps[i] > 0]
        return keep, [i + h for i in keep], [int(reps[i]) for i in keep]
    first, second, mult = [], [], []
    for i in range(n):
        if reps[i] // 2:
            first.append(i)
            second.append(i)
            mult.append(int(reps[i] // 2))
    odd = [i for i in range(n) if reps[i] % 2]
    for a, b in zip(odd[::2], odd[1::2]):
        first.append(a)
        second.append(b)
        mult.append(1)
    return first, second, mult


def _glynn_input(A: np.ndarray, reps: np.ndarray, diag: Optional[np.ndarray]):
    first, second, mult = _pairing(reps)
    order = np.argsort(mult, kind="stable")
    first = [first[i] for i in order]
    second = [second[i] for i in order]
    idx = np.array(first + second, dtype=np.intp)
    B = np.ascontiguousarray(A[np.ix_(idx, idx)])
    loops = None if diag is None else np.ascontiguousarray(diag[idx])
    return B, np.ascontiguousarray(np.array(mult, dtype=np.int64)[order]), loops


def hafnian(A, repetitions=None, *, impl: Optional[str] = None) -> complex:
    """Hafnian of the symmetric matrix obtained by repeating row/column ``i`` ``repetitions[i]`` times.

    Glynn-type power-trace sum: one term per sign pattern over index pairs
    (halved by the global sign symmetry), each evaluated from the
    characteristic polynomial of a sign-weighted ``2k x 2k`` matrix.
    """
    A = _square(A)
    _require_symmetric(A)
    reps = _counts(repetitions, A.shape[0], "repetitions")
    total = int(reps.sum())
    if total % 2:
        raise KernelInputError("hafnian needs an even expanded dimension")
    if total == 0:
        return 1.0 + 0.0j
    B, mult, _ = _glynn_input(A, reps, None)
    return _core(impl).hafnian_glynn(B, mult, None, num_threads())


def loop_hafnian(A, diag=None, repetitions=None, *, impl: Optional[str] = None) -> complex:
    """Loop hafnian of the repetition-expanded matrix with ``diag`` written onto its diagonal.

    ``diag`` defaults to the diagonal of ``A``.  Off-diagonal entries between
    copies of the same index keep ``A[i, i]``, matching expand-then-fill.
    Odd expanded dimensions are handled by an extra index carrying a unit
    loop and no edges.
    """
    A = _square(A)
    _require_symmetric(A)
    n = A.shape[0]
    d = np.diag(A).copy() if diag is None else np.asarray(diag, dtype=complex)
    if d.shape != (n,):
        raise KernelInputError(f"diag must have length {n}, got shape {d.shape}")
    reps = _counts(repetitions, n, "repetitions")
    total = int(reps.sum())
    if total == 0:
        return 1.0 + 0.0j
    if total % 2:
        A = np.pad(A, ((0, 1), (0, 1)))
        d = np.append(d, 1.0)
        reps = np.append(reps, 1)
    B, mult, loops = _glynn_input(A, reps, d)
    return _core(impl).hafnian_glynn(B, mult, loops, num_threads())


# -- torontonian family ------------------------------------------------------


def _tor_input(A) -> np.ndarray:
    A = _square(A)
    if A.shape[0] % 2:
        raise KernelInputError("torontonian needs an even (2m x 2m) matrix")
    _require_hermitian(A)
    return np.ascontiguousarray(A)


def _torontonian_by_determinants(A: np.ndarray, gamma: Optional[np.ndarray]) -> float:
    import itertools

    m = A.shape[0] // 2
    terms = []
    for size in range(m + 1):
        for z in itertools.combinations(range(m), size):
            idx = list(z) + [i + m for i in z]
            block = np.eye(len(idx)) - A[np.ix_(idx, idx)]
            det = np.linalg.det(block) if idx else 1.0 + 0j
            if det == 0:
                raise KernelInputError(f"I - A_z is singular for z={z}")
            if abs(det.imag) > DET_RESIDUAL_TOL * max(1.0, abs(det)) or det.real < -DET_RESIDUAL_TOL:
                raise KernelInputError(f"det(I - A_z) = {det} is not positive real for z={z}")
            term = (-1) ** (m - size) / np.sqrt(abs(det))
            if gamma is not None and idx:
                g = gamma[idx]
                term *= np.exp(0.5 * (g @ np.linalg.solve(block, g.conj())).real)
            terms.append(term)
    return float(np.sum(np.real(terms)))


def torontonian(A, *, impl: Optional[str] = None) -> float:
    """Torontonian of a Hermitian ``2m x 2m`` matrix; index subset ``z`` keeps rows ``{i, i+m : i in z}``.

    The fast path walks subsets depth first and extends the Cholesky factor of
    ``I - A_z`` by two rows per added index.  Inputs where some ``I - A_z`` is
    not positive definite fall back to per-subset determinants.
    """
    A = _tor_input(A)
    try:
        return float(_core(impl).torontonian_chol(A, None))
    except np.linalg.LinAlgError:
        return _torontonian_by_determinants(A, None)


def loop_torontonian(A, gamma, *, impl: Optional[str] = None) -> float:
    """Loop torontonian: each subset term carries ``exp(gamma_z^T (I - A_z)^{-1} conj(gamma_z) / 2)``."""
    A = _tor_input(A)
    gamma = np.asarray(gamma, dtype=complex)
    if gamma.shape != (A.shape[0],):
        raise KernelInputError(f"gamma must have length {A.shape[0]}, got shape {gamma.shape}")
    try:
        return float(_core(impl).torontonian_chol(A, np.ascontiguousarray(gamma)))
    except np.linalg.LinAlgError:
        return _torontonian_by_determinants(A, gamma)
