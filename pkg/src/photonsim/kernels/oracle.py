"""Definitional (brute-force) matrix functions.

These enumerate the defining sums literally and exist to check the fast
kernels.  They refuse inputs above ``cap`` expanded dimensions because the
enumerations grow factorially.
"""

from __future__ import annotations

import itertools
from typing import Iterator, Optional, Sequence

import numpy as np

DEFAULT_CAP = 12


class OracleTooLarge(ValueError):
    """Raised when an oracle is asked to enumerate an oversized instance."""


def _expand(A: np.ndarray, rows: Optional[Sequence[int]], cols: Optional[Sequence[int]]) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    ri = np.arange(A.shape[0]) if rows is None else np.repeat(np.arange(A.shape[0]), rows)
    ci = np.arange(A.shape[1]) if cols is None else np.repeat(np.arange(A.shape[1]), cols)
    return A[np.ix_(ri, ci)]


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise OracleTooLarge(f"oracle dimension {n} exceeds cap {cap}")


def oracle_permanent(A, row_mult=None, col_mult=None, cap: int = DEFAULT_CAP) -> complex:
    M = _expand(A, row_mult, col_mult)
    n = M.shape[0]
    if M.shape[1] != n:
        raise ValueError("expanded matrix is not square")
    _check_cap(n, cap)
    total = 0j
    for sigma in itertools.permutations(range(n)):
        prod = 1 + 0j
        for i in range(n):
            prod *= M[sigma[i], i]
        total += prod
    return total


def _perfect_matchings(items: tuple) -> Iterator[list]:
    if not items:
        yield []
        return
    first = items[0]
    for k in range(1, len(items)):
        rest = items[1:k] + items[k + 1 :]
        for m in _perfect_matchings(rest):
            yield [(first, items[k])] + m


def _single_pair_matchings(items: tuple) -> Iterator[list]:
    if not items:
        yield []
        return
    first = items[0]
    for m in _single_pair_matchings(items[1:]):
        yield [(first, first)] + m
    for k in range(1, len(items)):
        rest = items[1:k] + items[k + 1 :]
        for m in _single_pair_matchings(rest):
            yield [(first, items[k])] + m


def oracle_hafnian(A, repetitions=None, cap: int = DEFAULT_CAP) -> complex:
    M = _expand(A, repetitions, repetitions)
    n = M.shape[0]
    _check_cap(n, cap)
    if n % 2:
        return 0j
    total = 0j
    for matching in _perfect_matchings(tuple(range(n))):
        prod = 1 + 0j
        for i, j in matching:
            prod *= M[i, j]
        total += prod
    return total


def oracle_loop_hafnian(A, diag=None, repetitions=None, cap: int = DEFAULT_CAP) -> complex:
    M = _expand(A, repetitions, repetitions)
    if diag is not None:
        d = np.asarray(diag, dtype=complex)
        if repetitions is not None:
            d = np.repeat(d, repetitions)
        np.fill_diagonal(M, d)
    n = M.shape[0]
    _check_cap(n, cap)
    total = 0j
    for matching in _single_pair_matchings(tuple(range(n))):
        prod = 1 + 0j
        for i, j in matching:
            prod *= M[i, j]
        total += prod
    return total


def _subset_terms(A, gamma, cap: int):
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if n % 2:
        raise ValueError("torontonian needs an even dimension")
    _check_cap(n, cap)
    m = n // 2
    for size in range(m + 1):
        for z in itertools.combinations(range(m), size):
            idx = list(z) + [i + m for i in z]
            block = np.eye(len(idx)) - A[np.ix_(idx, idx)]
            det = np.linalg.det(block) if idx else 1.0 + 0j
            term = (-1) ** (m - size) / np.sqrt(abs(det))
            if gamma is not None and idx:
                g = np.asarray(gamma, dtype=complex)[idx]
                term *= np.exp(0.5 * g @ np.linalg.solve(block, g.conj()))
            yield term


def oracle_torontonian(A, cap: int = DEFAULT_CAP) -> float:
    return float(np.real(sum(_subset_terms(A, None, cap))))


def oracle_loop_torontonian(A, gamma, cap: int = DEFAULT_CAP) -> float:
    return float(np.real(sum(_subset_terms(A, gamma, cap))))
