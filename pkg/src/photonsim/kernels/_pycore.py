"""Pure-Python (numpy) versions of the compiled inner loops.

Same entry points and contracts as ``_fastcore``; selected at import time when
the extension is unavailable or ``PHOTONSIM_KERNELS=python`` is set.
"""

from __future__ import annotations

import numpy as np
from scipy.special import comb

_BLOCK = 1 << 14


def _gray_digits(start: int, stop: int, radix: np.ndarray) -> np.ndarray:
    """Reflected mixed-radix Gray code words for indices ``start..stop-1``."""
    k = np.arange(start, stop, dtype=np.int64)
    digits = np.empty((stop - start, len(radix)), dtype=np.int64)
    for i, r in enumerate(radix):
        b = k % r
        k = k // r
        digits[:, i] = np.where(k & 1, r - 1 - b, b)
    return digits


def _plain_digits(start: int, stop: int, radix: np.ndarray) -> np.ndarray:
    k = np.arange(start, stop, dtype=np.int64)
    digits = np.empty((stop - start, len(radix)), dtype=np.int64)
    for i, r in enumerate(radix):
        digits[:, i] = k % r
        k = k // r
    return digits


def _signed_binomial_weights(digits: np.ndarray, free: np.ndarray) -> np.ndarray:
    weights = np.prod(comb(free[None, :], digits), axis=1)
    sign = np.where(digits.sum(axis=1) & 1, -1.0, 1.0)
    return sign * weights


def permanent_gray(A: np.ndarray, rows: np.ndarray, cols: np.ndarray, nthreads: int = 1) -> complex:
    k = A.shape[0]
    if k == 0:
        return 1.0 + 0.0j
    total = int(rows.sum())
    radix = rows.copy()
    radix[1:] += 1
    free = rows.copy()
    free[0] -= 1
    states = int(np.prod(radix))

    partial = []
    for lo in range(0, states, _BLOCK):
        hi = min(lo + _BLOCK, states)
        digits = _gray_digits(lo, hi, radix)
        colsums = (rows[None, :] - 2 * digits).astype(float) @ A
        prods = np.prod(colsums ** cols[None, :], axis=1)
        partial.append(np.sum(_signed_binomial_weights(digits, free) * prods))
    return complex(np.sum(np.array(partial)) / 2.0 ** (total - 1))


def hafnian_glynn(B: np.ndarray, mult: np.ndarray, loops=None, nthreads: int = 1) -> complex:
    kp = len(mult)
    if kp == 0:
        return 1.0 + 0.0j
    n = 2 * kp
    order = int(mult.sum())
    radix = mult.copy()
    radix[1:] += 1
    free = mult.copy()
    free[0] -= 1
    states = int(np.prod(radix))
    partner = np.concatenate([np.arange(kp, n), np.arange(kp)])
    XB = B[partner]
    js = np.arange(1, order + 1)

    partial = []
    for lo in range(0, states, _BLOCK):
        hi = min(lo + _BLOCK, states)
        digits = _plain_digits(lo, hi, radix)
        w_pair = (mult[None, :] - 2 * digits).astype(float)
        w = np.concatenate([w_pair, w_pair], axis=1)
        C = XB[None, :, :] * w[:, None, :]
        eig = np.linalg.eigvals(C)
        traces = np.stack([np.sum(eig**j, axis=1) for j in js], axis=1)
        exponent = traces / (2 * js[None, :])
        if loops is not None:
            vec = np.broadcast_to(loops[partner], (hi - lo, n)).astype(complex)
            wd = w * loops[None, :]
            q = np.empty_like(exponent)
            for j in range(order):
                q[:, j] = np.sum(wd * vec, axis=1)
                vec = np.einsum("tab,tb->ta", C, vec)
            exponent = exponent + 0.5 * q
        coeff = _exp_series_top(exponent, order)
        partial.append(np.sum(_signed_binomial_weights(digits, free) * coeff))
    return complex(np.sum(np.array(partial)) / 2.0 ** (order - 1))


def _exp_series_top(exponent: np.ndarray, order: int) -> np.ndarray:
    """Coefficient of ``eta**order`` in ``exp(sum_j exponent[:, j-1] eta**j)``."""
    E = np.zeros((exponent.shape[0], order + 1), dtype=complex)
    E[:, 0] = 1.0
    for t in range(1, order + 1):
        j = np.arange(1, t + 1)
        E[:, t] = np.sum(j * exponent[:, j - 1] * E[:, t - j], axis=1) / t
    return E[:, order]


def torontonian_chol(A: np.ndarray, gamma=None) -> float:
    n = A.shape[0]
    m = n // 2
    L = np.zeros((max(n, 1), max(n, 1)), dtype=complex)
    y = np.zeros(max(n, 1), dtype=complex)
    gidx = np.zeros(max(n, 1), dtype=int)
    terms: list[float] = []

    def chol_row(r: int) -> None:
        gr = gidx[r]
        for c in range(r):
            s = -A[gr, gidx[c]] - np.dot(L[r, :c], L[c, :c].conj())
            L[r, c] = s / L[c, c].real
        d = (1.0 - A[gr, gr] - np.sum(np.abs(L[r, :r]) ** 2)).real
        if not d > 0.0:
            raise np.linalg.LinAlgError("I - A_z is not positive definite for some subset z")
        L[r, r] = np.sqrt(d)
        if gamma is not None:
            y[r] = (np.conj(gamma[gr]) - np.dot(L[r, :r], y[:r])) / L[r, r].real

    def walk(depth: int, first: int, sqrtdet: float, quad: float) -> None:
        term = 1.0 / sqrtdet
        if gamma is not None:
            term *= np.exp(0.5 * quad)
        terms.append(-term if (m - depth) & 1 else term)
        for i in range(first, m):
            r = 2 * depth
            gidx[r], gidx[r + 1] = i, i + m
            chol_row(r)
            chol_row(r + 1)
            extra = abs(y[r]) ** 2 + abs(y[r + 1]) ** 2 if gamma is not None else 0.0
            walk(depth + 1, i + 1, sqrtdet * L[r, r].real * L[r + 1, r + 1].real, quad + extra)

    walk(0, 0, 1.0, 0.0)
    return float(np.sum(np.array(terms)))
