# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""

from libc.math cimport sqrt, fabs, pow, cos, sin, isfinite
from libc.stdlib cimport malloc, free

import numpy as np

from ._kernels_py import InverseError, RootFindingError

cdef int ABERTH_MAXITER = 500
cdef int NEWTON_MAXITER = 50
cdef int LINESEARCH_HALVINGS = 20


def charpoly(A):
    """Coefficients of ``det(sI - A)``, highest degree first (Faddeev-LeVerrier)."""
    cdef double[:, :] a = np.ascontiguousarray(A, dtype=float)
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, l, k
    cdef double scale = 0.0, acc, tr, c
    out = np.zeros(n + 1)
    cdef double[:] co = out
    co[0] = 1.0
    for i in range(n):
        for j in range(n):
            scale += a[i, j] * a[i, j]
    scale = sqrt(scale)
    if n == 0 or scale == 0.0:
        return out
    cdef double[:, :] B = np.empty((n, n))
    cdef double[:, :] M = np.zeros((n, n))
    cdef double[:, :] W = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            B[i, j] = a[i, j] / scale
    c = 1.0
    for k in range(1, n + 1):
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    acc += B[i, l] * M[l, j]
                W[i, j] = acc
            W[i, i] += c
        M[:, :] = W
        tr = 0.0
        for i in range(n):
            for l in range(n):
                tr += B[i, l] * M[l, i]
        c = -tr / k
        co[k] = c * pow(scale, <double>k)
    return out


cdef inline void horner(double complex* co, int m, double complex z,
                        double complex* p, double complex* dp) noexcept nogil:
    cdef double complex pp = 0, dd = 0
    cdef int k
    for k in range(m + 1):
        dd = dd * z + pp
        pp = pp * z + co[k]
    p[0] = pp
    dp[0] = dd


cdef bint backward_ok(double complex* co, int m, double complex z) noexcept nogil:
    cdef double complex p, dp
    cdef double az = abs(z), mag = 0.0
    cdef int k
    horner(co, m, z, &p, &dp)
    for k in range(m + 1):
        mag = mag * az + abs(co[k])
    return abs(p) <= 1e-11 * mag


def aberth(coeffs, double tol=1e-14):
    """All complex roots of a monic polynomial (Aberth-Ehrlich iteration)."""
    cdef double complex[:] co = np.asarray(coeffs, dtype=complex)
    cdef int n = co.shape[0] - 1
    cdef int k, i, j, it, zeros, m
    cdef double bound = 0.0, rad = 0.0, worst
    cdef double complex p, dp, ratio, s, d, den, w
    if n <= 0:
        return np.zeros(0, dtype=complex)
    for k in range(1, n + 1):
        bound = max(bound, pow(abs(co[k]), 1.0 / k))
    zeros = 0
    while zeros < n and abs(co[n - zeros]) <= 1e-14 * pow(max(bound, 1e-300), <double>(n - zeros)):
        zeros += 1
    m = n - zeros
    out = np.zeros(n, dtype=complex)
    if m == 0:
        return out
    cdef double complex* z = <double complex*> malloc(m * sizeof(double complex))
    cdef double complex* wk = <double complex*> malloc((m + 1) * sizeof(double complex))
    try:
        for k in range(m + 1):
            wk[k] = co[k]
        for k in range(1, m + 1):
            rad = max(rad, pow(abs(wk[k]), 1.0 / k))
        rad = max(rad, 1e-300)
        for k in range(m):
            ang = 2.0 * 3.141592653589793 * k / m + 0.4
            z[k] = rad * (cos(ang) + 1j * sin(ang))
        converged = False
        for it in range(ABERTH_MAXITER):
            worst = 0.0
            for i in range(m):
                horner(wk, m, z[i], &p, &dp)
                if p == 0:
                    continue
                ratio = p / dp if dp != 0 else p
                s = 0
                for j in range(m):
                    if j != i:
                        d = z[i] - z[j]
                        if d != 0:
                            s += 1.0 / d
                den = 1.0 - ratio * s
                w = ratio / den if den != 0 else ratio
                z[i] -= w
                worst = max(worst, abs(w) / (rad + abs(z[i])))
            if worst < tol:
                converged = True
                break
        if not converged:
            for i in range(m):
                if not backward_ok(wk, m, z[i]):
                    raise RootFindingError("Aberth iteration did not converge")
        for i in range(m):
            out[zeros + i] = z[i]
    finally:
        free(z)
        free(wk)
    return out


cdef inline void hstereo(double x, double y, double z, double* v, double* D) noexcept nogil:
    D[0] = x * x + y * y + z * z + 1.0
    v[0] = (x * x - y * y - z * z + 1.0) / D[0]
    v[1] = (2.0 * x * y + 2.0 * z) / D[0]
    v[2] = (2.0 * x * z - 2.0 * y) / D[0]


cdef inline double det3(double m[3][3]) noexcept nogil:
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


cdef inline double resid(double* p, double r, double* q, double* g) noexcept nogil:
    cdef double v[3]
    cdef double D
    hstereo(p[0], p[1], p[2], v, &D)
    g[0] = p[0] - r * v[0] - q[0]
    g[1] = p[1] - r * v[1] - q[1]
    g[2] = p[2] - r * v[2] - q[2]
    return sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2])


cdef int inverse(double* q, double r, double tol, double* p, double* res) noexcept nogil:
    """Newton for ``p - r v(p) = q``; 0 on success."""
    cdef double v[3]
    cdef double g[3]
    cdef double gc[3]
    cdef double c[3]
    cdef double st[3]
    cdef double jac[3][3]
    cdef double tmp[3][3]
    cdef double dn[3][3]
    cdef double D, det, lam, rc, scale, grad[3]
    cdef int it, i, j, col, h
    cdef bint improved
    hstereo(q[0], q[1], q[2], v, &D)
    for i in range(3):
        p[i] = q[i] + r * v[i]
    res[0] = resid(p, r, q, g)
    scale = 1.0 + sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2])
    for it in range(NEWTON_MAXITER):
        if res[0] <= tol * scale:
            return 0
        hstereo(p[0], p[1], p[2], v, &D)
        dn[0][0] = 2 * p[0]; dn[0][1] = -2 * p[1]; dn[0][2] = -2 * p[2]
        dn[1][0] = 2 * p[1]; dn[1][1] = 2 * p[0]; dn[1][2] = 2.0
        dn[2][0] = 2 * p[2]; dn[2][1] = -2.0; dn[2][2] = 2 * p[0]
        for j in range(3):
            grad[j] = 2 * p[j]
        for i in range(3):
            for j in range(3):
                jac[i][j] = (1.0 if i == j else 0.0) - r * (dn[i][j] / D - v[i] * D * grad[j] / (D * D))
        det = det3(jac)
        if det == 0.0 or not isfinite(det):
            for i in range(3):
                st[i] = -g[i]
        else:
            for col in range(3):
                for i in range(3):
                    for j in range(3):
                        tmp[i][j] = jac[i][j]
                    tmp[i][col] = -g[i]
                st[col] = det3(tmp) / det
        lam = 1.0
        improved = False
        for h in range(LINESEARCH_HALVINGS + 1):
            for i in range(3):
                c[i] = p[i] + lam * st[i]
            rc = resid(c, r, q, gc)
            if rc < res[0]:
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
        for i in range(3):
            p[i] = c[i]
            g[i] = gc[i]
        res[0] = rc
    if res[0] <= 1e-12 * scale:
        return 0
    return 1


def hopf_stereo_inverse(q, double r, double tol=1e-13):
    """Solve ``p - r v(p) = q`` for the stereographic Hopf field."""
    cdef double qq[3]
    cdef double p[3]
    cdef double res
    qq[0] = q[0]; qq[1] = q[1]; qq[2] = q[2]
    if inverse(qq, r, tol, p, &res):
        raise InverseError("Newton inversion of id - r v did not converge", res)
    return (p[0], p[1], p[2]), res


def hopf_stereo_orbit(q0, double r, int m):
    """``m`` steps of ``q -> q + 2 r v((id - r v)^{-1} q)``; returns points and feet."""
    pts_arr = np.empty((m + 1, 3))
    feet_arr = np.empty((m, 3))
    cdef double[:, :] pts = pts_arr
    cdef double[:, :] feet = feet_arr
    cdef double q[3]
    cdef double p[3]
    cdef double v[3]
    cdef double D, res
    cdef int k, i
    for i in range(3):
        q[i] = q0[i]
        pts[0, i] = q[i]
    for k in range(m):
        if inverse(q, r, 1e-13, p, &res):
            raise InverseError("Newton inversion of id - r v did not converge", res)
        hstereo(p[0], p[1], p[2], v, &D)
        for i in range(3):
            feet[k, i] = p[i]
            q[i] = q[i] + 2.0 * r * v[i]
            pts[k + 1, i] = q[i]
    return pts_arr, feet_arr
