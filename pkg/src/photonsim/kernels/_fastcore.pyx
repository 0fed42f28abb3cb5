# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the matrix-function kernels.

Every routine here expects inputs already validated and reduced by
:mod:`photonsim.kernels` (zero multiplicities removed, contiguous complex128
buffers).  Outer sums are split into fixed-size chunks whose partial sums are
combined pairwise in chunk order, so the result does not depend on the number
of OpenMP threads.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport parallel, prange
from libc.math cimport exp, ldexp, sqrt
from libc.stdlib cimport free, malloc

cnp.import_array()

cdef enum:
    CHUNK = 256
    ACC_DEPTH = 64


cdef struct PairwiseAcc:
    double complex s[ACC_DEPTH]
    long long cnt[ACC_DEPTH]
    int top


cdef inline void acc_init(PairwiseAcc* acc) noexcept nogil:
    acc.top = 0


cdef inline void acc_push(PairwiseAcc* acc, double complex v) noexcept nogil:
    acc.s[acc.top] = v
    acc.cnt[acc.top] = 1
    acc.top += 1
    while acc.top >= 2 and acc.cnt[acc.top - 1] == acc.cnt[acc.top - 2]:
        acc.s[acc.top - 2] = acc.s[acc.top - 2] + acc.s[acc.top - 1]
        acc.cnt[acc.top - 2] *= 2
        acc.top -= 1


cdef inline double complex acc_total(PairwiseAcc* acc) noexcept nogil:
    cdef double complex total = 0
    cdef int i
    if acc.top == 0:
        return total
    total = acc.s[acc.top - 1]
    for i in range(acc.top - 2, -1, -1):
        total = acc.s[i] + total
    return total


cdef double complex pairwise_sum(const double complex* x, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, half
    cdef double complex s = 0
    if n <= 8:
        for i in range(n):
            s = s + x[i]
        return s
    half = n // 2
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half)


cdef inline double cabs2(double complex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


# ---------------------------------------------------------------------------
# Permanent: Glynn formula with an n-ary reflected Gray code over row copies
# ---------------------------------------------------------------------------

cdef double complex _perm_chunk(
    const double complex* A,
    Py_ssize_t k,
    Py_ssize_t n,
    const long long* radix,
    const long long* rmult,
    const long long* cmult,
    const double* binom,
    Py_ssize_t bstride,
    long long start,
    long long stop,
) noexcept nogil:
    cdef long long length = stop - start
    cdef long long* b = <long long*> malloc(k * sizeof(long long))
    cdef long long* refl = <long long*> malloc(k * sizeof(long long))
    cdef long long* g = <long long*> malloc(k * sizeof(long long))
    cdef double complex* colsum = <double complex*> malloc(n * sizeof(double complex))
    cdef double complex* buf = <double complex*> malloc(length * sizeof(double complex))
    cdef long long q, step, delta
    cdef Py_ssize_t i, j, e
    cdef double weight, w
    cdef int parity
    cdef long long free_copies
    cdef double complex prod, z, result

    q = start
    for i in range(k):
        b[i] = q % radix[i]
        q = q // radix[i]
        refl[i] = q & 1
        g[i] = b[i] if refl[i] == 0 else radix[i] - 1 - b[i]

    for j in range(n):
        colsum[j] = 0
    for i in range(k):
        w = <double> (rmult[i] - 2 * g[i])
        for j in range(n):
            colsum[j] = colsum[j] + w * A[i * n + j]

    for step in range(length):
        weight = 1.0
        parity = 0
        for i in range(k):
            free_copies = rmult[i] - 1 if i == 0 else rmult[i]
            weight *= binom[free_copies * bstride + g[i]]
            parity ^= <int> (g[i] & 1)
        if parity:
            weight = -weight
        prod = 1.0
        for j in range(n):
            z = colsum[j]
            for e in range(cmult[j]):
                prod = prod * z
        buf[step] = weight * prod

        if step + 1 < length:
            i = 0
            while b[i] == radix[i] - 1:
                b[i] = 0
                refl[i] ^= 1
                i += 1
            b[i] += 1
            delta = 1 if refl[i] == 0 else -1
            g[i] += delta
            w = -2.0 * delta
            for j in range(n):
                colsum[j] = colsum[j] + w * A[i * n + j]

    result = pairwise_sum(buf, length)
    free(b)
    free(refl)
    free(g)
    free(colsum)
    free(buf)
    return result


def permanent_gray(
    cnp.ndarray[cnp.complex128_t, ndim=2, mode="c"] A,
    cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] rows,
    cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] cols,
    int nthreads=1,
):
    """Permanent of ``A`` with row multiplicities ``rows`` and column multiplicities ``cols``.

    All multiplicities must be positive and sum to the same total.
    """
    cdef Py_ssize_t k = A.shape[0]
    cdef Py_ssize_t n = A.shape[1]
    cdef long long total = 0
    cdef Py_ssize_t i, j
    if k == 0:
        return 1.0 + 0.0j
    for i in range(k):
        total += rows[i]

    radix_arr = np.empty(k, dtype=np.int64)
    cdef long long[::1] radix = radix_arr
    cdef long long states = 1
    for i in range(k):
        radix[i] = rows[i] if i == 0 else rows[i] + 1
        states *= radix[i]

    cdef long long maxr = 0
    for i in range(k):
        if rows[i] > maxr:
            maxr = rows[i]
    binom_arr = _binomial_table(maxr)
    cdef double[:, ::1] binom = binom_arr

    cdef long long nchunks = (states + CHUNK - 1) // CHUNK
    sums_arr = np.zeros(nchunks, dtype=np.complex128)
    cdef double complex[::1] sums = sums_arr
    cdef long long ci, lo, hi
    cdef const double complex* Ap = <const double complex*> A.data
    cdef const long long* rp = <const long long*> rows.data
    cdef const long long* cp = <const long long*> cols.data

    with nogil, parallel(num_threads=nthreads):
        for ci in prange(nchunks, schedule="static"):
            lo = ci * CHUNK
            hi = lo + CHUNK
            if hi > states:
                hi = states
            sums[ci] = _perm_chunk(Ap, k, n, &radix[0], rp, cp, &binom[0, 0], binom.shape[1], lo, hi)

    cdef double complex result = pairwise_sum(&sums[0], nchunks)
    return complex(ldexp(result.real, -(total - 1)), ldexp(result.imag, -(total - 1)))


def _binomial_table(long long maxn):
    table = np.zeros((maxn + 1, maxn + 1), dtype=np.float64)
    for a in range(maxn + 1):
        table[a, 0] = 1.0
        for b in range(1, a + 1):
            table[a, b] = table[a - 1, b - 1] + (table[a - 1, b] if b <= a - 1 else 0.0)
    return table


# ---------------------------------------------------------------------------
# Hafnian / loop hafnian: Glynn-type power-trace sum over pair sign weights
# ---------------------------------------------------------------------------

cdef void _hessenberg(double complex* H, Py_ssize_t n, double complex* v) noexcept nogil:
    cdef Py_ssize_t j, i, c, r, len_
    cdef double xnorm, x0abs, vnorm2
    cdef double complex phase, s
    for j in range(n - 2):
        len_ = n - j - 1
        xnorm = 0.0
        for i in range(len_):
            xnorm += cabs2(H[(j + 1 + i) * n + j])
        xnorm = sqrt(xnorm)
        if xnorm == 0.0:
            continue
        x0abs = sqrt(cabs2(H[(j + 1) * n + j]))
        if x0abs == 0.0:
            phase = 1.0
        else:
            phase = H[(j + 1) * n + j] / x0abs
        for i in range(len_):
            v[i] = H[(j + 1 + i) * n + j]
        v[0] = v[0] + phase * xnorm
        vnorm2 = 0.0
        for i in range(len_):
            vnorm2 += cabs2(v[i])
        if vnorm2 == 0.0:
            continue
        # left: H[j+1:, c] -= 2/|v|^2 * v * (v^H H[j+1:, c])
        for c in range(j, n):
            s = 0.0
            for i in range(len_):
                s = s + v[i].conjugate() * H[(j + 1 + i) * n + c]
            s = s * (2.0 / vnorm2)
            for i in range(len_):
                H[(j + 1 + i) * n + c] = H[(j + 1 + i) * n + c] - v[i] * s
        # right: H[r, j+1:] -= 2/|v|^2 * (H[r, j+1:] v) v^H
        for r in range(n):
            s = 0.0
            for i in range(len_):
                s = s + H[r * n + j + 1 + i] * v[i]
            s = s * (2.0 / vnorm2)
            for i in range(len_):
                H[r * n + j + 1 + i] = H[r * n + j + 1 + i] - s * v[i].conjugate()
        H[(j + 1) * n + j] = -phase * xnorm
        for i in range(1, len_):
            H[(j + 1 + i) * n + j] = 0.0


cdef void _reversed_charpoly(
    const double complex* H, Py_ssize_t n, Py_ssize_t order, double complex* R, double complex* out
) noexcept nogil:
    # La Budde recurrence for det(I - eta*H_k) on the leading blocks of a Hessenberg H,
    # truncated at eta**order.  R is an (n + 1) x (order + 1) scratch table.
    cdef Py_ssize_t stride = order + 1
    cdef Py_ssize_t kk, t, i
    cdef double complex h, P, coef
    for t in range(stride):
        R[t] = 0.0
    R[0] = 1.0
    for kk in range(1, n + 1):
        h = H[(kk - 1) * n + kk - 1]
        R[kk * stride] = R[(kk - 1) * stride]
        for t in range(1, stride):
            R[kk * stride + t] = R[(kk - 1) * stride + t] - h * R[(kk - 1) * stride + t - 1]
        P = 1.0
        for i in range(1, kk):
            P = P * H[(kk - i) * n + kk - i - 1]
            coef = H[(kk - 1 - i) * n + kk - 1] * P
            for t in range(i + 1, stride):
                R[kk * stride + t] = R[kk * stride + t] - coef * R[(kk - 1 - i) * stride + t - i - 1]
    for t in range(stride):
        out[t] = R[n * stride + t]


cdef double complex _glynn_hafnian_term(
    const double complex* B,
    Py_ssize_t kp,
    const long long* mult,
    const long long* g,
    Py_ssize_t order,
    const double complex* loops,
    const double* binom,
    Py_ssize_t bstride,
    double complex* C,
    double complex* R,
    double complex* poly,
    double complex* series,
    double complex* expo,
    double complex* q,
    double complex* vec,
    double complex* tmp,
    double* w,
) noexcept nogil:
    cdef Py_ssize_t n = 2 * kp
    cdef Py_ssize_t a, bb, p, j, t
    cdef double weight = 1.0
    cdef int parity = 0
    cdef long long free_copies
    cdef double complex s, coeff

    for p in range(kp):
        free_copies = mult[p] - 1 if p == 0 else mult[p]
        weight *= binom[free_copies * bstride + g[p]]
        parity ^= <int> (g[p] & 1)
        w[p] = <double> (mult[p] - 2 * g[p])
        w[p + kp] = w[p]
    if parity:
        weight = -weight

    # C = X B W ; row a of C is row partner(a) of B, columns scaled by w
    for a in range(n):
        p = a + kp if a < kp else a - kp
        for bb in range(n):
            C[a * n + bb] = B[p * n + bb] * w[bb]

    if loops != NULL:
        for a in range(n):
            p = a + kp if a < kp else a - kp
            vec[a] = loops[p]
        for j in range(1, order + 1):
            s = 0.0
            for a in range(n):
                s = s + w[a] * loops[a] * vec[a]
            q[j] = 0.5 * s
            if j < order:
                for a in range(n):
                    s = 0.0
                    for bb in range(n):
                        s = s + C[a * n + bb] * vec[bb]
                    tmp[a] = s
                for a in range(n):
                    vec[a] = tmp[a]

    _hessenberg(C, n, tmp)
    _reversed_charpoly(C, n, order, R, poly)

    # det(I - eta C)^(-1/2) as a power series
    series[0] = 1.0
    for t in range(1, order + 1):
        s = 0.0
        for j in range(1, t + 1):
            if j > n:
                break
            s = s + poly[j] * series[t - j] * ((t - j) + 0.5 * j)
        series[t] = -s / t

    if loops == NULL:
        coeff = series[order]
    else:
        expo[0] = 1.0
        for t in range(1, order + 1):
            s = 0.0
            for j in range(1, t + 1):
                s = s + j * q[j] * expo[t - j]
            expo[t] = s / t
        coeff = 0.0
        for t in range(order + 1):
            coeff = coeff + series[t] * expo[order - t]
    return weight * coeff


cdef double complex _hafnian_chunk(
    const double complex* B,
    Py_ssize_t kp,
    const long long* mult,
    const long long* radix,
    Py_ssize_t order,
    const double complex* loops,
    const double* binom,
    Py_ssize_t bstride,
    long long start,
    long long stop,
) noexcept nogil:
    cdef Py_ssize_t n = 2 * kp
    cdef long long length = stop - start
    cdef double complex* C = <double complex*> malloc(n * n * sizeof(double complex))
    cdef double complex* R = <double complex*> malloc((n + 1) * (order + 1) * sizeof(double complex))
    cdef double complex* poly = <double complex*> malloc((order + 1) * sizeof(double complex))
    cdef double complex* series = <double complex*> malloc((order + 1) * sizeof(double complex))
    cdef double complex* expo = <double complex*> malloc((order + 1) * sizeof(double complex))
    cdef double complex* q = <double complex*> malloc((order + 1) * sizeof(double complex))
    cdef double complex* vec = <double complex*> malloc(n * sizeof(double complex))
    cdef double complex* tmp = <double complex*> malloc(n * sizeof(double complex))
    cdef double* w = <double*> malloc(n * sizeof(double))
    cdef long long* g = <long long*> malloc(kp * sizeof(long long))
    cdef double complex* buf = <double complex*> malloc(length * sizeof(double complex))
    cdef long long step, idx
    cdef Py_ssize_t p
    cdef double complex result

    for step in range(length):
        idx = start + step
        for p in range(kp):
            g[p] = idx % radix[p]
            idx = idx // radix[p]
        buf[step] = _glynn_hafnian_term(
            B, kp, mult, g, order, loops, binom, bstride, C, R, poly, series, expo, q, vec, tmp, w
        )
    result = pairwise_sum(buf, length)
    free(C)
    free(R)
    free(poly)
    free(series)
    free(expo)
    free(q)
    free(vec)
    free(tmp)
    free(w)
    free(g)
    free(buf)
    return result


def hafnian_glynn(
    cnp.ndarray[cnp.complex128_t, ndim=2, mode="c"] B,
    cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] mult,
    loops=None,
    int nthreads=1,
):
    """Hafnian (or loop hafnian) of a pair-structured matrix with pair repetitions.

    ``B`` is ``2k x 2k`` with index ``p`` paired to ``p + k``; pair ``p`` is
    repeated ``mult[p] > 0`` times in the expanded matrix.  ``loops`` holds the
    diagonal of the expanded matrix per reduced index, or ``None``.
    """
    cdef Py_ssize_t kp = mult.shape[0]
    cdef Py_ssize_t i
    cdef long long order = 0
    if kp == 0:
        return 1.0 + 0.0j
    for i in range(kp):
        order += mult[i]

    radix_arr = np.empty(kp, dtype=np.int64)
    cdef long long[::1] radix = radix_arr
    cdef long long states = 1
    cdef long long maxm = 0
    for i in range(kp):
        radix[i] = mult[i] if i == 0 else mult[i] + 1
        states *= radix[i]
        if mult[i] > maxm:
            maxm = mult[i]
    binom_arr = _binomial_table(maxm)
    cdef double[:, ::1] binom = binom_arr

    cdef cnp.ndarray[cnp.complex128_t, ndim=1, mode="c"] loop_arr
    cdef const double complex* lp = NULL
    if loops is not None:
        loop_arr = np.ascontiguousarray(loops, dtype=np.complex128)
        lp = <const double complex*> loop_arr.data

    cdef long long nchunks = (states + CHUNK - 1) // CHUNK
    sums_arr = np.zeros(nchunks, dtype=np.complex128)
    cdef double complex[::1] sums = sums_arr
    cdef long long ci, lo, hi
    cdef const double complex* Bp = <const double complex*> B.data
    cdef const long long* mp = <const long long*> mult.data

    with nogil, parallel(num_threads=nthreads):
        for ci in prange(nchunks, schedule="static"):
            lo = ci * CHUNK
            hi = lo + CHUNK
            if hi > states:
                hi = states
            sums[ci] = _hafnian_chunk(
                Bp, kp, mp, &radix[0], order, lp, &binom[0, 0], binom.shape[1], lo, hi
            )

    cdef double complex result = pairwise_sum(&sums[0], nchunks)
    return complex(ldexp(result.real, -(order - 1)), ldexp(result.imag, -(order - 1)))


# ---------------------------------------------------------------------------
# Torontonian / loop torontonian: depth-first subset walk reusing Cholesky rows
# ---------------------------------------------------------------------------

cdef struct TorCtx:
    const double complex* A
    const double complex* gamma
    Py_ssize_t m
    Py_ssize_t n
    double complex* L
    double complex* y
    Py_ssize_t* gidx
    PairwiseAcc acc
    int failed


cdef int _chol_row(TorCtx* ctx, Py_ssize_t r) noexcept nogil:
    cdef Py_ssize_t n = ctx.n
    cdef Py_ssize_t c, q
    cdef double complex s
    cdef double complex* L = ctx.L
    cdef Py_ssize_t gr = ctx.gidx[r]
    cdef double d
    for c in range(r):
        s = -ctx.A[gr * n + ctx.gidx[c]]
        for q in range(c):
            s = s - L[r * n + q] * L[c * n + q].conjugate()
        L[r * n + c] = s / L[c * n + c].real
    s = 1.0 - ctx.A[gr * n + gr]
    for q in range(r):
        s = s - cabs2(L[r * n + q])
    d = s.real
    if not (d > 0.0):
        return 1
    L[r * n + r] = sqrt(d)
    if ctx.gamma != NULL:
        s = ctx.gamma[gr].conjugate()
        for q in range(r):
            s = s - L[r * n + q] * ctx.y[q]
        ctx.y[r] = s / sqrt(d)
    return 0


cdef void _tor_walk(TorCtx* ctx, Py_ssize_t depth, Py_ssize_t first, double sqrtdet, double quad) noexcept nogil:
    cdef double term = 1.0 / sqrtdet
    cdef Py_ssize_t i, r
    cdef double newquad
    if ctx.gamma != NULL:
        term = term * exp(0.5 * quad)
    if (ctx.m - depth) & 1:
        term = -term
    acc_push(&ctx.acc, term)
    for i in range(first, ctx.m):
        r = 2 * depth
        ctx.gidx[r] = i
        ctx.gidx[r + 1] = i + ctx.m
        if _chol_row(ctx, r) or _chol_row(ctx, r + 1):
            ctx.failed = 1
            return
        newquad = quad
        if ctx.gamma != NULL:
            newquad = quad + cabs2(ctx.y[r]) + cabs2(ctx.y[r + 1])
        _tor_walk(
            ctx,
            depth + 1,
            i + 1,
            sqrtdet * ctx.L[r * ctx.n + r].real * ctx.L[(r + 1) * ctx.n + r + 1].real,
            newquad,
        )
        if ctx.failed:
            return


def torontonian_chol(
    cnp.ndarray[cnp.complex128_t, ndim=2, mode="c"] A,
    gamma=None,
):
    """Torontonian (loop torontonian when ``gamma`` is given) of a Hermitian ``2m x 2m`` matrix.

    Requires every ``I - A_z`` to be positive definite; raises
    ``numpy.linalg.LinAlgError`` otherwise so the caller can fall back to
    determinant-based evaluation.
    """
    cdef TorCtx ctx
    cdef Py_ssize_t n = A.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1, mode="c"] gam
    ctx.A = <const double complex*> A.data
    ctx.n = n
    ctx.m = n // 2
    ctx.gamma = NULL
    if gamma is not None:
        gam = np.ascontiguousarray(gamma, dtype=np.complex128)
        ctx.gamma = <const double complex*> gam.data
    L_arr = np.zeros((max(n, 1), max(n, 1)), dtype=np.complex128)
    y_arr = np.zeros(max(n, 1), dtype=np.complex128)
    g_arr = np.zeros(max(n, 1), dtype=np.intp)
    cdef double complex[:, ::1] Lv = L_arr
    cdef double complex[::1] yv = y_arr
    cdef Py_ssize_t[::1] gv = g_arr
    ctx.L = &Lv[0, 0]
    ctx.y = &yv[0]
    ctx.gidx = &gv[0]
    ctx.failed = 0
    acc_init(&ctx.acc)
    with nogil:
        _tor_walk(&ctx, 0, 0, 1.0, 0.0)
    if ctx.failed:
        raise np.linalg.LinAlgError("I - A_z is not positive definite for some subset z")
    return acc_total(&ctx.acc).real
