# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled backend for the on-demand correlation lookup.

Per frame-1 pixel and pyramid level: compute the integer-grid window of
feature dot products covering every bilinear corner of the (2r+1)^2 sub-pixel
lookup positions, then interpolate within that window.  Out-of-range window
cells are zero, matching the shared zero-padding convention.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def lookup_level(double[:, :, ::1] f1, double[:, :, ::1] f2l,
                 double[:, ::1] cx, double[:, ::1] cy,
                 int radius, double inv_sqrt_c,
                 double[:, :, ::1] out, Py_ssize_t base):
    """Fill out[:, :, base:base+(2r+1)**2] with one pyramid level's costs."""
    cdef Py_ssize_t c = f1.shape[0]
    cdef Py_ssize_t h1 = f1.shape[1]
    cdef Py_ssize_t w1 = f1.shape[2]
    cdef Py_ssize_t hl = f2l.shape[1]
    cdef Py_ssize_t wl = f2l.shape[2]
    cdef Py_ssize_t k = 2 * radius + 1
    cdef Py_ssize_t win = k + 1

    cdef double[:, ::1] w = np.empty((win, win), dtype=np.float64)
    cdef Py_ssize_t iy, ix, wy, wx, gy, gx, ch, dy, dx, idx
    cdef double ctr_x, ctr_y, fx, fy, s, v0, v1

    for iy in range(h1):
        for ix in range(w1):
            ctr_x = cx[iy, ix]
            ctr_y = cy[iy, ix]
            fx = ctr_x - floor(ctr_x)
            fy = ctr_y - floor(ctr_y)
            for wy in range(win):
                gy = <Py_ssize_t>floor(ctr_y) - radius + wy
                if gy < 0 or gy >= hl:
                    for wx in range(win):
                        w[wy, wx] = 0.0
                    continue
                for wx in range(win):
                    gx = <Py_ssize_t>floor(ctr_x) - radius + wx
                    if gx < 0 or gx >= wl:
                        w[wy, wx] = 0.0
                    else:
                        s = 0.0
                        for ch in range(c):
                            s += f1[ch, iy, ix] * f2l[ch, gy, gx]
                        w[wy, wx] = s * inv_sqrt_c
            idx = base
            for dy in range(k):
                for dx in range(k):
                    v0 = (1.0 - fx) * w[dy, dx] + fx * w[dy, dx + 1]
                    v1 = (1.0 - fx) * w[dy + 1, dx] + fx * w[dy + 1, dx + 1]
                    out[iy, ix, idx] = (1.0 - fy) * v0 + fy * v1
                    idx += 1
