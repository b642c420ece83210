# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled leapfrog and stress kernels; same contracts as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"

SYM_INDEX = ((0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3))
ANTI_INDEX = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


cdef void _zero_boundary(double[:, :, :, ::1] a) noexcept nogil:
    cdef Py_ssize_t c, i, j, k
    cdef Py_ssize_t nc = a.shape[0], nx = a.shape[1], ny = a.shape[2], nz = a.shape[3]
    for c in range(nc):
        for j in range(ny):
            for k in range(nz):
                a[c, 0, j, k] = 0.0
                a[c, nx - 1, j, k] = 0.0
        for i in range(nx):
            for k in range(nz):
                a[c, i, 0, k] = 0.0
                a[c, i, ny - 1, k] = 0.0
            for j in range(ny):
                a[c, i, j, 0] = 0.0
                a[c, i, j, nz - 1] = 0.0


def leapfrog_step(u_prev, u_cur, f, out, double cx, double cy, double cz, double dt2):
    cdef double[:, :, :, ::1] up = u_prev
    cdef double[:, :, :, ::1] uc = u_cur
    cdef double[:, :, :, ::1] uo = out
    cdef double[:, :, :, ::1] ff
    cdef bint has_f = f is not None
    if has_f:
        ff = f
    cdef Py_ssize_t c, i, j, k
    cdef Py_ssize_t nc = uc.shape[0], nx = uc.shape[1], ny = uc.shape[2], nz = uc.shape[3]
    cdef double diag = 2.0 - 2.0 * (cx + cy + cz)
    cdef double v
    with nogil:
        for c in range(nc):
            for i in range(1, nx - 1):
                for j in range(1, ny - 1):
                    for k in range(1, nz - 1):
                        v = (cx * (uc[c, i + 1, j, k] + uc[c, i - 1, j, k])
                             + cy * (uc[c, i, j + 1, k] + uc[c, i, j - 1, k])
                             + cz * (uc[c, i, j, k + 1] + uc[c, i, j, k - 1])
                             + diag * uc[c, i, j, k] - up[c, i, j, k])
                        if has_f:
                            v = v + dt2 * ff[c, i, j, k]
                        uo[c, i, j, k] = v
        _zero_boundary(uo)
    return out


def em_stress(phi_prev, phi_cur, phi_next, double inv2dt, inv2h, out=None):
    cdef double[:, :, :, ::1] pp = phi_prev
    cdef double[:, :, :, ::1] pc = phi_cur
    cdef double[:, :, :, ::1] pn = phi_next
    cdef Py_ssize_t nx = pc.shape[1], ny = pc.shape[2], nz = pc.shape[3]
    if out is None:
        out = np.zeros((10, nx, ny, nz))
    cdef double[:, :, :, ::1] o = out
    cdef double ix = inv2h[0], iy = inv2h[1], iz = inv2h[2]
    cdef Py_ssize_t i, j, k, a, b, c, n
    cdef double d[4][4]
    cdef double F[4][4]
    cdef double sgn[4]
    cdef double tr, acc
    sgn[0] = -1.0
    sgn[1] = 1.0
    sgn[2] = 1.0
    sgn[3] = 1.0
    cdef int sa[10]
    cdef int sb[10]
    n = 0
    for a in range(4):
        for b in range(a, 4):
            sa[n] = a
            sb[n] = b
            n += 1
    with nogil:
        for i in range(1, nx - 1):
            for j in range(1, ny - 1):
                for k in range(1, nz - 1):
                    for b in range(4):
                        d[0][b] = (pn[b, i, j, k] - pp[b, i, j, k]) * inv2dt
                        d[1][b] = (pc[b, i + 1, j, k] - pc[b, i - 1, j, k]) * ix
                        d[2][b] = (pc[b, i, j + 1, k] - pc[b, i, j - 1, k]) * iy
                        d[3][b] = (pc[b, i, j, k + 1] - pc[b, i, j, k - 1]) * iz
                    tr = 0.0
                    for a in range(4):
                        F[a][a] = 0.0
                        for b in range(a + 1, 4):
                            F[a][b] = d[a][b] - d[b][a]
                            F[b][a] = -F[a][b]
                            if a == 0:
                                tr = tr - 2.0 * F[a][b] * F[a][b]
                            else:
                                tr = tr + 2.0 * F[a][b] * F[a][b]
                    for n in range(10):
                        a = sa[n]
                        b = sb[n]
                        acc = 0.0
                        for c in range(4):
                            if c != a and c != b:
                                acc = acc + sgn[c] * F[a][c] * F[b][c]
                        if a == b:
                            acc = acc - 0.25 * sgn[a] * tr
                        o[n, i, j, k] = -2.0 * acc
        _zero_boundary(o)
    return out
