# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pointwise kernels. Same contract as ``_pykernels``."""
import numpy as np
from libc.math cimport sqrt, atan

NAME = "cython"


def calm(int code, double eps, const double[:, ::1] u):
    cdef Py_ssize_t m = u.shape[1], j
    cdef double x, y, z, r, d, t, q, s
    cdef double inv1 = 1.0 / eps, inv2 = 2.0 / eps, sat = 1.5 / eps
    out_arr = np.empty((3, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    if code < 1 or code > 4:
        raise ValueError(f"unknown calming code {code}")
    with nogil:
        for j in range(m):
            x = u[0, j]
            y = u[1, j]
            z = u[2, j]
            if code == 1:
                r = sqrt(x * x + y * y + z * z)
                d = 1.0 + eps * r
                out[0, j] = x / d
                out[1, j] = y / d
                out[2, j] = z / d
            elif code == 2:
                d = 1.0 + eps * eps * (x * x + y * y + z * z)
                out[0, j] = x / d
                out[1, j] = y / d
                out[2, j] = z / d
            elif code == 3:
                out[0, j] = atan(eps * x) / eps
                out[1, j] = atan(eps * y) / eps
                out[2, j] = atan(eps * z) / eps
            else:
                r = sqrt(x * x + y * y + z * z)
                if r < inv1:
                    out[0, j] = x
                    out[1, j] = y
                    out[2, j] = z
                else:
                    if r < inv2:
                        t = r - inv2
                        q = -0.5 * eps * t * t + sat
                    else:
                        q = sat
                    s = q / r
                    out[0, j] = x * s
                    out[1, j] = y * s
                    out[2, j] = z * s
    return out_arr


def lamb(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t m = a.shape[1], j
    out_arr = np.empty((3, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for j in range(m):
            out[0, j] = a[1, j] * b[2, j] - a[2, j] * b[1, j]
            out[1, j] = a[2, j] * b[0, j] - a[0, j] * b[2, j]
            out[2, j] = a[0, j] * b[1, j] - a[1, j] * b[0, j]
    return out_arr


def advect(const double[:, ::1] w, const double[:, :, ::1] grad):
    cdef Py_ssize_t m = w.shape[1], i, j
    out_arr = np.empty((3, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for j in range(m):
            for i in range(3):
                out[i, j] = (w[0, j] * grad[i, 0, j] + w[1, j] * grad[i, 1, j]
                             + w[2, j] * grad[i, 2, j])
    return out_arr


def max_norm(const double[:, ::1] w):
    cdef Py_ssize_t m = w.shape[1], j
    cdef double best = 0.0, s
    with nogil:
        for j in range(m):
            s = w[0, j] * w[0, j] + w[1, j] * w[1, j] + w[2, j] * w[2, j]
            if s > best:
                best = s
    return sqrt(best)


# Complex arrays arrive as float64 views with re/im interleaved on the last axis.

def project_masked(const double[:, :, :, ::1] c, const double[::1] kx,
                   const double[::1] ky, const double[::1] kz,
                   const unsigned char[:, :, ::1] mask):
    cdef Py_ssize_t nx = c.shape[1], ny = c.shape[2], nz = c.shape[3] // 2, i, j, l, p
    cdef double k2, inv, dr, di
    out_arr = np.empty((3, nx, ny, 2 * nz), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    with nogil:
        for i in range(nx):
            for j in range(ny):
                for l in range(nz):
                    p = 2 * l
                    k2 = kx[i] * kx[i] + ky[j] * ky[j] + kz[l] * kz[l]
                    if k2 == 0.0 or not mask[i, j, l]:
                        out[0, i, j, p] = 0.0
                        out[0, i, j, p + 1] = 0.0
                        out[1, i, j, p] = 0.0
                        out[1, i, j, p + 1] = 0.0
                        out[2, i, j, p] = 0.0
                        out[2, i, j, p + 1] = 0.0
                        continue
                    inv = 1.0 / k2
                    dr = (kx[i] * c[0, i, j, p] + ky[j] * c[1, i, j, p] + kz[l] * c[2, i, j, p]) * inv
                    di = (kx[i] * c[0, i, j, p + 1] + ky[j] * c[1, i, j, p + 1] + kz[l] * c[2, i, j, p + 1]) * inv
                    out[0, i, j, p] = c[0, i, j, p] - kx[i] * dr
                    out[0, i, j, p + 1] = c[0, i, j, p + 1] - kx[i] * di
                    out[1, i, j, p] = c[1, i, j, p] - ky[j] * dr
                    out[1, i, j, p + 1] = c[1, i, j, p + 1] - ky[j] * di
                    out[2, i, j, p] = c[2, i, j, p] - kz[l] * dr
                    out[2, i, j, p + 1] = c[2, i, j, p + 1] - kz[l] * di
    return out_arr


def curl(const double[:, :, :, ::1] c, const double[::1] kx,
         const double[::1] ky, const double[::1] kz):
    """i k x c, using i (a + ib) = -b + ia."""
    cdef Py_ssize_t nx = c.shape[1], ny = c.shape[2], nz = c.shape[3] // 2, i, j, l, p
    out_arr = np.empty((3, nx, ny, 2 * nz), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    with nogil:
        for i in range(nx):
            for j in range(ny):
                for l in range(nz):
                    p = 2 * l
                    out[0, i, j, p] = -(ky[j] * c[2, i, j, p + 1] - kz[l] * c[1, i, j, p + 1])
                    out[0, i, j, p + 1] = ky[j] * c[2, i, j, p] - kz[l] * c[1, i, j, p]
                    out[1, i, j, p] = -(kz[l] * c[0, i, j, p + 1] - kx[i] * c[2, i, j, p + 1])
                    out[1, i, j, p + 1] = kz[l] * c[0, i, j, p] - kx[i] * c[2, i, j, p]
                    out[2, i, j, p] = -(kx[i] * c[1, i, j, p + 1] - ky[j] * c[0, i, j, p + 1])
                    out[2, i, j, p + 1] = kx[i] * c[1, i, j, p] - ky[j] * c[0, i, j, p]
    return out_arr


def gradient(const double[:, :, :, ::1] c, const double[::1] kx,
             const double[::1] ky, const double[::1] kz):
    cdef Py_ssize_t nx = c.shape[1], ny = c.shape[2], nz = c.shape[3] // 2, i, j, l, a, p
    out_arr = np.empty((3, 3, nx, ny, 2 * nz), dtype=np.float64)
    cdef double[:, :, :, :, ::1] out = out_arr
    with nogil:
        for a in range(3):
            for i in range(nx):
                for j in range(ny):
                    for l in range(nz):
                        p = 2 * l
                        out[a, 0, i, j, p] = -(kx[i] * c[a, i, j, p + 1])
                        out[a, 0, i, j, p + 1] = kx[i] * c[a, i, j, p]
                        out[a, 1, i, j, p] = -(ky[j] * c[a, i, j, p + 1])
                        out[a, 1, i, j, p + 1] = ky[j] * c[a, i, j, p]
                        out[a, 2, i, j, p] = -(kz[l] * c[a, i, j, p + 1])
                        out[a, 2, i, j, p + 1] = kz[l] * c[a, i, j, p]
    return out_arr
