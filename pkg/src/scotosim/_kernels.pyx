# cython: language_level=3
# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled raster kernels: bilinear gather and fixed-point field inversion.

Arithmetic matches ``_kernels_np``: same clamp/floor/lerp order, compiled
with -ffp-contract=off, so both backends return bit-identical arrays.
"""

from libc.math cimport floor, sqrt

import numpy as np

NAME = "compiled"


cdef inline double _clampd(double x, double hi) nogil:
    if x < 0.0:
        return 0.0
    if x > hi:
        return hi
    return x


def gather_bilinear(double[:, :, ::1] src, double[:, :] xs, double[:, :] ys):
    """Bilinear gather from src (H, W, C) at continuous pixel coords.

    Border-clamped; returns an (h, w, C) float64 array.
    """
    cdef Py_ssize_t H = src.shape[0]
    cdef Py_ssize_t W = src.shape[1]
    cdef Py_ssize_t C = src.shape[2]
    cdef Py_ssize_t h = xs.shape[0]
    cdef Py_ssize_t w = xs.shape[1]
    out_arr = np.empty((h, w, C))
    cdef double[:, :, ::1] out = out_arr
    cdef double xmax = <double> (W - 1)
    cdef double ymax = <double> (H - 1)
    cdef Py_ssize_t i, j, c, x0, y0, x1, y1
    cdef double x, y, fx, fy, top, bot
    with nogil:
        for i in range(h):
            for j in range(w):
                x = _clampd(xs[i, j], xmax)
                y = _clampd(ys[i, j], ymax)
                fx = x - floor(x)
                fy = y - floor(y)
                x0 = <Py_ssize_t> floor(x)
                y0 = <Py_ssize_t> floor(y)
                x1 = x0 + 1
                if x1 > W - 1:
                    x1 = W - 1
                y1 = y0 + 1
                if y1 > H - 1:
                    y1 = H - 1
                for c in range(C):
                    top = src[y0, x0, c] * (1.0 - fx) + src[y0, x1, c] * fx
                    bot = src[y1, x0, c] * (1.0 - fx) + src[y1, x1, c] * fx
                    out[i, j, c] = top * (1.0 - fy) + bot * fy
    return out_arr


def invert_fixed_point(double[:, ::1] du, double[:, ::1] dv, double tol, int max_iter):
    """Invert a displacement field by Jacobi fixed-point iteration.

    Same contract as the numpy fallback: returns
    (eu, ev, iterations, converged, history).
    """
    cdef Py_ssize_t H = du.shape[0]
    cdef Py_ssize_t W = du.shape[1]
    cdef double wf = <double> W
    cdef double hf = <double> H
    cdef double xmax = <double> (W - 1)
    cdef double ymax = <double> (H - 1)

    eu_arr = np.zeros((H, W))
    ev_arr = np.zeros((H, W))
    nu_arr = np.empty((H, W))
    nv_arr = np.empty((H, W))
    cdef double[:, ::1] eu = eu_arr
    cdef double[:, ::1] ev = ev_arr
    cdef double[:, ::1] nu = nu_arr
    cdef double[:, ::1] nv = nv_arr

    history = []
    cdef bint converged = False
    cdef int iterations = 0, it
    cdef Py_ssize_t i, j, x0, y0, x1, y1
    cdef double x, y, fx, fy, top, bot, su, sv, ddu, ddv, step_sq, max_sq, residual

    for it in range(1, max_iter + 1):
        iterations = it
        max_sq = 0.0
        if it == 1:
            # E0 = 0 lands on exact lattice points where the bilinear
            # gather returns the field values themselves
            with nogil:
                for i in range(H):
                    for j in range(W):
                        nu[i, j] = -du[i, j]
                        nv[i, j] = -dv[i, j]
                        ddu = nu[i, j] - eu[i, j]
                        ddv = nv[i, j] - ev[i, j]
                        step_sq = ddu * ddu + ddv * ddv
                        if step_sq > max_sq:
                            max_sq = step_sq
                for i in range(H):
                    for j in range(W):
                        eu[i, j] = nu[i, j]
                        ev[i, j] = nv[i, j]
            residual = sqrt(max_sq)
            history.append(residual)
            if residual < tol:
                converged = True
                break
            continue
        with nogil:
            for i in range(H):
                for j in range(W):
                    x = _clampd((<double> j) + eu[i, j] * wf, xmax)
                    y = _clampd((<double> i) + ev[i, j] * hf, ymax)
                    fx = x - floor(x)
                    fy = y - floor(y)
                    x0 = <Py_ssize_t> floor(x)
                    y0 = <Py_ssize_t> floor(y)
                    x1 = x0 + 1
                    if x1 > W - 1:
                        x1 = W - 1
                    y1 = y0 + 1
                    if y1 > H - 1:
                        y1 = H - 1
                    top = du[y0, x0] * (1.0 - fx) + du[y0, x1] * fx
                    bot = du[y1, x0] * (1.0 - fx) + du[y1, x1] * fx
                    su = top * (1.0 - fy) + bot * fy
                    top = dv[y0, x0] * (1.0 - fx) + dv[y0, x1] * fx
                    bot = dv[y1, x0] * (1.0 - fx) + dv[y1, x1] * fx
                    sv = top * (1.0 - fy) + bot * fy
                    nu[i, j] = -su
                    nv[i, j] = -sv
                    ddu = nu[i, j] - eu[i, j]
                    ddv = nv[i, j] - ev[i, j]
                    step_sq = ddu * ddu + ddv * ddv
                    if step_sq > max_sq:
                        max_sq = step_sq
            for i in range(H):
                for j in range(W):
                    eu[i, j] = nu[i, j]
                    ev[i, j] = nv[i, j]
        residual = sqrt(max_sq)
        history.append(residual)
        if residual < tol:
            converged = True
            break
    return eu_arr, ev_arr, iterations, converged, history
