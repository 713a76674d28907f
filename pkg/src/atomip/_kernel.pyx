# cython: language_level=3
"""Compiled trajectory kernels.

Same three entry points and semantics as `_kernel_py` (the reference
implementation). This version talks to LAPACK/BLAS directly (zheevd for
the per-segment eigendecomposition, one zgemm per segment for the sampled
states) and runs the decode/evaluate passes as tight C loops; the
optimizer hits these on every objective call.
"""

import numpy as np

cimport cython
cimport numpy as cnp
from libc.math cimport cos, floor, sin
from scipy.linalg.cython_blas cimport zgemm
from scipy.linalg.cython_lapack cimport zheevd

cnp.import_array()

DEF GRID_EPS = 1e-9
DEF TIE_TOL = 1e-12
# Phase factors advance by recurrence, re-anchored with exact sin/cos this
# often to keep roundoff far below the 1e-9 norm budget.
DEF PHASE_REFRESH = 128


cdef int _eigh_inplace(double complex[:, ::1] a, double[::1] w,
                       double complex[::1] work, double[::1] rwork,
                       int[::1] iwork) except -1:
    # Row-major Hermitian `a` reads as conj(a) to LAPACK; the eigenvalues
    # agree, and on return row j of `a` holds conj(eigvec_j) of the input.
    cdef int n = a.shape[0]
    cdef int lwork = work.shape[0]
    cdef int lrwork = rwork.shape[0]
    cdef int liwork = iwork.shape[0]
    cdef int info = 0
    cdef char jobz = b'V'
    cdef char uplo = b'L'
    zheevd(&jobz, &uplo, &n, &a[0, 0], &n, &w[0], &work[0], &lwork,
           &rwork[0], &lrwork, &iwork[0], &liwork, &info)
    if info != 0:
        raise ValueError(f"zheevd failed with info={info}")
    return 0


@cython.boundscheck(False)
@cython.wraparound(False)
def evolve_segments(hams, taus, double dt, psi0):
    """See _kernel_py.evolve_segments."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=3, mode="c"] H = \
        np.ascontiguousarray(hams, dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1, mode="c"] T = \
        np.ascontiguousarray(taus, dtype=np.float64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1, mode="c"] psi_arr = \
        np.array(psi0, dtype=np.complex128, copy=True)
    if not np.all(np.isfinite(H)):
        raise ValueError("non-finite Hamiltonian entries")

    cdef Py_ssize_t n_seg = H.shape[0]
    cdef Py_ssize_t dim = psi_arr.shape[0]
    cdef double total = 0.0
    cdef Py_ssize_t s, i, j, k
    for s in range(n_seg):
        total += T[s]
    cdef Py_ssize_t n_steps = <Py_ssize_t>floor(total / dt + GRID_EPS)

    cdef cnp.ndarray[double, ndim=2, mode="c"] pops = \
        np.empty((n_steps + 1, dim), dtype=np.float64)
    cdef double complex[::1] psi = psi_arr
    for i in range(dim):
        pops[0, i] = psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
    if n_seg == 0:
        return pops, psi_arr

    cdef int nd = <int>dim
    cdef int lwork = max(1, 2 * nd + nd * nd)
    cdef int lrwork = max(1, 1 + 5 * nd + 2 * nd * nd)
    cdef int liwork = max(1, 3 + 5 * nd)
    A_arr = np.empty((dim, dim), dtype=np.complex128)
    w_arr = np.empty(dim, dtype=np.float64)
    work = np.empty(lwork, dtype=np.complex128)
    rwork = np.empty(lrwork, dtype=np.float64)
    iwork = np.empty(liwork, dtype=np.intc)
    c0_arr = np.empty(dim, dtype=np.complex128)
    rot_arr = np.empty(dim, dtype=np.complex128)
    # Per-segment sample buffers, sized for the worst case (all samples in
    # one segment). ph rows hold e^{+i w t} conj(c0); G = conj(V) @ ph^T is
    # computed by one zgemm, giving conj(psi(t)) per sampled time.
    ph_arr = np.empty((n_steps + 1, dim), dtype=np.complex128)
    G_arr = np.empty((n_steps + 1, dim), dtype=np.complex128)

    cdef double complex[:, ::1] Av = A_arr
    cdef double[::1] w = w_arr
    cdef double complex[::1] zwork = work
    cdef double[::1] dwork = rwork
    cdef int[::1] imem = iwork
    cdef double complex[::1] c0 = c0_arr
    cdef double complex[::1] rot = rot_arr
    cdef double complex[:, ::1] ph = ph_arr
    cdef double complex[:, ::1] G = G_arr

    cdef double complex acc, z
    cdef double complex one = 1.0, zero = 0.0
    cdef double start = 0.0, end = 0.0, t_local, angle
    cdef Py_ssize_t next_k = 1, count, r
    cdef int mrows, ncols, kcols
    cdef char opN = b'N'

    for s in range(n_seg):
        end = end + T[s]
        A_arr[:, :] = H[s]
        _eigh_inplace(Av, w, zwork, dwork, imem)
        # Row j of Av is conj(v_j); c0[j] = <v_j | psi>.
        for j in range(dim):
            acc = 0
            for i in range(dim):
                acc += Av[j, i] * psi[i]
            c0[j] = acc
        count = 0
        while (next_k + count) <= n_steps and \
                ((next_k + count) * dt <= end or s == n_seg - 1):
            t_local = (next_k + count) * dt - start
            if t_local < 0.0:
                t_local = 0.0
            if count % PHASE_REFRESH == 0:
                for j in range(dim):
                    angle = w[j] * t_local
                    z = cos(angle) + 1j * sin(angle)
                    ph[count, j] = z * c0[j].conjugate()
                if count == 0:
                    for j in range(dim):
                        angle = w[j] * dt
                        rot[j] = cos(angle) + 1j * sin(angle)
            else:
                for j in range(dim):
                    ph[count, j] = ph[count - 1, j] * rot[j]
            count += 1
        if count > 0:
            # G (count x dim, C order) viewed by BLAS column-major is
            # (dim x count) = conj(V) @ ph^T.
            mrows = nd
            ncols = <int>count
            kcols = nd
            zgemm(&opN, &opN, &mrows, &ncols, &kcols, &one,
                  &Av[0, 0], &mrows, &ph[0, 0], &kcols, &zero,
                  &G[0, 0], &mrows)
            for r in range(count):
                for i in range(dim):
                    z = G[r, i]
                    pops[next_k + r, i] = z.real * z.real + z.imag * z.imag
            next_k += count
        for j in range(dim):
            angle = w[j] * T[s]
            z = cos(angle) - 1j * sin(angle)
            c0[j] = z * c0[j]
        for i in range(dim):
            acc = 0
            for j in range(dim):
                acc += Av[j, i].conjugate() * c0[j]
            psi[i] = acc
        start = end
    return pops, psi_arr


@cython.boundscheck(False)
@cython.wraparound(False)
def decode_populations(pops, offsets, lows, double tie_tol=TIE_TOL):
    """See _kernel_py.decode_populations."""
    cdef cnp.ndarray[double, ndim=2, mode="c"] P = \
        np.ascontiguousarray(pops, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] offs = \
        np.ascontiguousarray(offsets, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] lo = \
        np.ascontiguousarray(lows, dtype=np.int64)
    cdef Py_ssize_t n = P.shape[0]
    cdef Py_ssize_t m = offs.shape[0] - 1
    cdef cnp.ndarray[cnp.int64_t, ndim=2, mode="c"] out = \
        np.empty((n, m), dtype=np.int64)
    cdef Py_ssize_t k, j, a, b, i, pick
    cdef double top
    for k in range(n):
        for j in range(m):
            a = offs[j]
            b = offs[j + 1]
            top = P[k, a]
            for i in range(a + 1, b):
                if P[k, i] > top:
                    top = P[k, i]
            pick = a
            for i in range(a, b):
                if P[k, i] >= top - tie_tol:
                    pick = i
                    break
            out[k, j] = lo[j] + (pick - a)
    return out


@cython.boundscheck(False)
@cython.wraparound(False)
def evaluate_assignments(assign, cost_coeffs, cost_offs, cost_vars,
                         cons_poly_offs, cons_coeffs, cons_offs, cons_vars,
                         cons_rhs, cons_sense):
    """See _kernel_py.evaluate_assignments."""
    cdef cnp.ndarray[cnp.int64_t, ndim=2, mode="c"] X = \
        np.ascontiguousarray(assign, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] cc = \
        np.ascontiguousarray(cost_coeffs, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] co = \
        np.ascontiguousarray(cost_offs, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] cv = \
        np.ascontiguousarray(cost_vars, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] po = \
        np.ascontiguousarray(cons_poly_offs, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] kc = \
        np.ascontiguousarray(cons_coeffs, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] ko = \
        np.ascontiguousarray(cons_offs, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] kv = \
        np.ascontiguousarray(cons_vars, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] rhs = \
        np.ascontiguousarray(cons_rhs, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] sense = \
        np.ascontiguousarray(cons_sense, dtype=np.int64)

    cdef Py_ssize_t n = X.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] cost = \
        np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, mode="c"] feas = \
        np.ones(n, dtype=np.uint8)
    cdef Py_ssize_t k, t, f, ci
    cdef cnp.int64_t acc, prod, lhs
    cdef Py_ssize_t n_cost = cc.shape[0]
    cdef Py_ssize_t n_cons = rhs.shape[0]
    cdef bint ok
    for k in range(n):
        acc = 0
        for t in range(n_cost):
            prod = cc[t]
            for f in range(co[t], co[t + 1]):
                prod *= X[k, cv[f]]
            acc += prod
        cost[k] = acc
        for ci in range(n_cons):
            lhs = 0
            for t in range(po[ci], po[ci + 1]):
                prod = kc[t]
                for f in range(ko[t], ko[t + 1]):
                    prod *= X[k, kv[f]]
                lhs += prod
            ok = (lhs <= rhs[ci]) if sense[ci] == 0 else (lhs >= rhs[ci])
            if not ok:
                feas[k] = 0
                break
    return cost, feas
