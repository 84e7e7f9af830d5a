# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the pure-numpy kernels in ``_pykernels``.

Same contracts; see that module's docstring.  The B-spline evaluator runs
the banded de Boor recursion per point, the propagator runs the RK4 loop
in C with complex scalars.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sin

cnp.import_array()

DEF MAX_ORDER = 32


cdef int _find_span(double[::1] t, int n_knots, int k, double x, bint side_left) nogil:
    cdef int lo = 0
    cdef int hi = n_knots
    cdef int mid, span
    # first index where t[idx] > x (right limit) or t[idx] >= x (left limit)
    while lo < hi:
        mid = (lo + hi) // 2
        if (t[mid] < x) if side_left else (t[mid] <= x):
            lo = mid + 1
        else:
            hi = mid
    span = lo - 1
    if span < k - 1:
        span = k - 1
    if span > n_knots - k - 1:
        span = n_knots - k - 1
    while span > k - 1 and t[span] == t[span + 1]:
        span -= 1
    return span


cdef void _basis_row(double[::1] t, int k, double x, int span, double* N) nogil:
    """Nonzero order-k values: N[j] = B_{span-k+1+j}(x), j = 0..k-1."""
    cdef double left[MAX_ORDER]
    cdef double right[MAX_ORDER]
    cdef int d, r
    cdef double saved, tmp
    N[0] = 1.0
    for d in range(1, k):
        left[d] = x - t[span + 1 - d]
        right[d] = t[span + d] - x
        saved = 0.0
        for r in range(d):
            tmp = N[r] / (right[r + 1] + left[d - r])
            N[r] = saved + right[r + 1] * tmp
            saved = left[d - r] * tmp
        N[d] = saved


def design_matrix(knots, k, x, deriv=0, side_left=False):
    cdef double[::1] t = np.ascontiguousarray(knots, dtype=np.float64)
    cdef double[::1] xs = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=np.float64)))
    cdef int kk = int(k)
    cdef int nu = int(deriv)
    cdef bint left_side = bool(side_left)
    cdef int n_knots = t.shape[0]
    cdef int n_splines = n_knots - kk
    cdef int npts = xs.shape[0]
    if kk >= MAX_ORDER:
        raise ValueError("spline order too large for the compiled kernel")
    if nu < 0 or nu > 2:
        raise ValueError("deriv must be 0, 1, or 2")
    out_arr = np.zeros((npts, n_splines), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    if nu >= kk:
        return out_arr

    cdef double vals[MAX_ORDER]
    cdef double dtmp[MAX_ORDER]
    cdef int p, span, j, i, col
    cdef double xv, den, c1, c2

    with nogil:
        for p in range(npts):
            xv = xs[p]
            span = _find_span(t, n_knots, kk, xv, left_side)
            if nu == 0:
                _basis_row(t, kk, xv, span, vals)
                for j in range(kk):
                    col = span - kk + 1 + j
                    if 0 <= col < n_splines:
                        out[p, col] = vals[j]
            elif nu == 1:
                # nonzero order k-1 values: vals[m] = B^{k-1}_{span-k+2+m}
                _basis_row(t, kk - 1, xv, span, vals)
                for j in range(kk):
                    i = span - kk + 1 + j
                    c1 = 0.0
                    c2 = 0.0
                    if j >= 1:
                        den = t[i + kk - 1] - t[i]
                        if den > 0.0:
                            c1 = vals[j - 1] / den
                    if j <= kk - 2:
                        den = t[i + kk] - t[i + 1]
                        if den > 0.0:
                            c2 = vals[j] / den
                    col = i
                    if 0 <= col < n_splines:
                        out[p, col] = (kk - 1) * (c1 - c2)
            else:
                # nonzero order k-2 values: vals[m] = B^{k-2}_{span-k+3+m}
                _basis_row(t, kk - 2, xv, span, vals)
                # first derivatives of the order k-1 splines B^{k-1}_{span-k+2+j}
                for j in range(kk - 1):
                    i = span - kk + 2 + j
                    c1 = 0.0
                    c2 = 0.0
                    if j >= 1:
                        den = t[i + kk - 2] - t[i]
                        if den > 0.0:
                            c1 = vals[j - 1] / den
                    if j <= kk - 3:
                        den = t[i + kk - 1] - t[i + 1]
                        if den > 0.0:
                            c2 = vals[j] / den
                    dtmp[j] = (kk - 2) * (c1 - c2)
                for j in range(kk):
                    i = span - kk + 1 + j
                    c1 = 0.0
                    c2 = 0.0
                    if j >= 1:
                        den = t[i + kk - 1] - t[i]
                        if den > 0.0:
                            c1 = dtmp[j - 1] / den
                    if j <= kk - 2:
                        den = t[i + kk] - t[i + 1]
                        if den > 0.0:
                            c2 = dtmp[j] / den
                    col = i
                    if 0 <= col < n_splines:
                        out[p, col] = (kk - 1) * (c1 - c2)
    return out_arr


cdef void _rhs(double[::1] dg, double[::1] cp, double E0, double om,
               double complex coef, double t, double complex[::1] u,
               double complex[::1] du) nogil:
    cdef int d = dg.shape[0]
    cdef int i
    cdef double field = E0 * sin(om * t)
    cdef double complex s = 0.0
    for i in range(1, d):
        s = s + cp[i - 1] * u[i]
    du[0] = coef * (dg[0] * u[0] - field * s)
    for i in range(1, d):
        du[i] = coef * (dg[i] * u[i] - field * cp[i - 1] * u[0])


def rk4_drive(diag, coupling, e0, omega, dt, n_steps, stride, hbar):
    cdef double[::1] dg = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double[::1] cp = np.ascontiguousarray(coupling, dtype=np.float64)
    cdef int d = dg.shape[0]
    cdef int nst = int(n_steps)
    cdef int st = int(stride)
    cdef double E0 = float(e0)
    cdef double om = float(omega)
    cdef double h = float(dt)
    cdef double hb = float(hbar)

    out_arr = np.empty((nst // st + 1, d), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    U_arr = np.zeros(d, dtype=np.complex128)
    cdef double complex[::1] U = U_arr
    work = np.zeros((5, d), dtype=np.complex128)
    cdef double complex[:, ::1] W = work

    cdef int n, i, row
    cdef double t, half, sixth
    cdef double complex coef

    U[0] = 1.0
    for i in range(d):
        out[0, i] = U[i]
    coef = -1j / hb
    half = 0.5 * h
    sixth = h / 6.0
    row = 1

    with nogil:
        for n in range(nst):
            t = n * h
            _rhs(dg, cp, E0, om, coef, t, U, W[0])
            for i in range(d):
                W[4, i] = U[i] + half * W[0, i]
            _rhs(dg, cp, E0, om, coef, t + half, W[4], W[1])
            for i in range(d):
                W[4, i] = U[i] + half * W[1, i]
            _rhs(dg, cp, E0, om, coef, t + half, W[4], W[2])
            for i in range(d):
                W[4, i] = U[i] + h * W[2, i]
            _rhs(dg, cp, E0, om, coef, t + h, W[4], W[3])
            for i in range(d):
                U[i] = U[i] + sixth * (W[0, i] + 2.0 * (W[1, i] + W[2, i]) + W[3, i])
            if (n + 1) % st == 0:
                for i in range(d):
                    out[row, i] = U[i]
                row += 1
    return out_arr
