# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""
Compiled kernels for the free-space quadrature; mirrors _quadcore_np.

Each evaluation point walks the cell list with an explicit stack,
splitting cells that are too close relative to their size; see the
NumPy twin for the quadrature rules and the principal-value handling of
the Hessian kernels.
"""

from libc.math cimport atan, log, sqrt, M_PI
from libc.stdlib cimport free, malloc

import numpy as np

BACKEND_NAME = "cython"

cdef int MAX_STACK = 1 << 16


cdef struct Cell:
    double cx
    double cy
    double half
    double frac


cdef inline void _rect_hessian(double a1, double b1, double a2, double b2,
                               double* pv11, double* pv12) nogil:
    cdef double i_right = atan(b2 / b1) - atan(a2 / b1)
    cdef double i_left = -(atan(b2 / a1) - atan(a2 / a1))
    cdef double p11 = i_right + i_left
    if a1 < 0.0 and 0.0 < b1 and a2 < 0.0 and 0.0 < b2:
        p11 -= M_PI
    cdef double l_right = 0.5 * log((b1 * b1 + b2 * b2) / (b1 * b1 + a2 * a2))
    cdef double l_left = -0.5 * log((a1 * a1 + b2 * b2) / (a1 * a1 + a2 * a2))
    pv11[0] = p11
    pv12[0] = l_right + l_left


cdef int _eval_point(double px, double py,
                     double[::1] cx, double[::1] cy,
                     double[::1] half, double[::1] frac,
                     double s_min, double split_factor,
                     int mode, double* out0, double* out1,
                     Cell* stack) nogil:
    """mode 0: potential, 1: velocity, 2: hessian.  Returns 0, or -1 on stack overflow."""
    cdef double acc0 = 0.0
    cdef double acc1 = 0.0
    cdef Py_ssize_t n = cx.shape[0]
    cdef Py_ssize_t i
    cdef int top = 0
    cdef Cell c
    cdef double dx, dy, d2, area, a_eq, h2, ox, oy
    cdef double pv11, pv12
    cdef bint inside

    for i in range(n):
        stack[top].cx = cx[i]
        stack[top].cy = cy[i]
        stack[top].half = half[i]
        stack[top].frac = frac[i]
        top += 1
        while top > 0:
            top -= 1
            c = stack[top]
            dx = px - c.cx
            dy = py - c.cy
            d2 = dx * dx + dy * dy
            if d2 < (split_factor * c.half) * (split_factor * c.half) and c.half > s_min:
                if top + 4 > MAX_STACK:
                    return -1
                h2 = c.half / 2.0
                stack[top].cx = c.cx - h2; stack[top].cy = c.cy - h2
                stack[top].half = h2; stack[top].frac = c.frac; top += 1
                stack[top].cx = c.cx + h2; stack[top].cy = c.cy - h2
                stack[top].half = h2; stack[top].frac = c.frac; top += 1
                stack[top].cx = c.cx - h2; stack[top].cy = c.cy + h2
                stack[top].half = h2; stack[top].frac = c.frac; top += 1
                stack[top].cx = c.cx + h2; stack[top].cy = c.cy + h2
                stack[top].half = h2; stack[top].frac = c.frac; top += 1
                continue
            area = c.frac * (2.0 * c.half) * (2.0 * c.half)
            inside = (dx < c.half) and (dx > -c.half) and (dy < c.half) and (dy > -c.half)
            if mode == 0:
                if inside:
                    a_eq = 2.0 * c.half / sqrt(M_PI)
                    acc0 += M_PI * a_eq * a_eq * (0.5 - log(a_eq)) * c.frac
                else:
                    acc0 += -0.5 * area * log(d2)
            elif mode == 1:
                if not inside:
                    acc0 += area * (-dy) / d2
                    acc1 += area * dx / d2
            else:
                if d2 < (split_factor * c.half) * (split_factor * c.half):
                    # terminal near cell: exact rectangle integral
                    ox = dx; oy = dy
                    if ox >= c.half - 1e-12 * c.half and ox <= c.half + 1e-12 * c.half:
                        ox += 1e-9 * c.half
                    if ox <= -c.half + 1e-12 * c.half and ox >= -c.half - 1e-12 * c.half:
                        ox += 1e-9 * c.half
                    if oy >= c.half - 1e-12 * c.half and oy <= c.half + 1e-12 * c.half:
                        oy += 1e-9 * c.half
                    if oy <= -c.half + 1e-12 * c.half and oy >= -c.half - 1e-12 * c.half:
                        oy += 1e-9 * c.half
                    _rect_hessian(-ox - c.half, -ox + c.half,
                                  -oy - c.half, -oy + c.half, &pv11, &pv12)
                    acc0 += c.frac * pv11
                    acc1 += c.frac * pv12
                else:
                    acc0 += area * (dy * dy - dx * dx) / (d2 * d2)
                    acc1 += area * (-2.0 * dx * dy) / (d2 * d2)
    out0[0] = acc0
    out1[0] = acc1
    return 0


def _run(mode, px, py, cx, cy, half, frac, double s_min, double split_factor):
    cdef double[::1] pxv = np.ascontiguousarray(px, dtype=np.float64)
    cdef double[::1] pyv = np.ascontiguousarray(py, dtype=np.float64)
    cdef double[::1] cxv = np.ascontiguousarray(cx, dtype=np.float64)
    cdef double[::1] cyv = np.ascontiguousarray(cy, dtype=np.float64)
    cdef double[::1] hv = np.ascontiguousarray(half, dtype=np.float64)
    cdef double[::1] fv = np.ascontiguousarray(frac, dtype=np.float64)
    cdef Py_ssize_t m = pxv.shape[0]
    out0 = np.empty(m)
    out1 = np.empty(m)
    cdef double[::1] o0 = out0
    cdef double[::1] o1 = out1
    cdef Py_ssize_t i
    cdef int imode = mode
    cdef int rc = 0
    cdef Cell* stack = <Cell*> malloc(MAX_STACK * sizeof(Cell))
    if stack == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(m):
                if _eval_point(pxv[i], pyv[i], cxv, cyv, hv, fv,
                               s_min, split_factor, imode, &o0[i], &o1[i], stack) != 0:
                    rc = -1
                    break
    finally:
        free(stack)
    if rc != 0:
        raise RuntimeError("cell subdivision stack overflow (depth cap exceeded)")
    return out0, out1


def potential_points(px, py, cx, cy, half, frac, s_min=1e-4, split_factor=6.0):
    out0, _ = _run(0, px, py, cx, cy, half, frac, s_min, split_factor)
    return out0


def velocity_points(px, py, cx, cy, half, frac, s_min=1e-4, split_factor=6.0):
    return _run(1, px, py, cx, cy, half, frac, s_min, split_factor)


def hessian_points(px, py, cx, cy, half, frac, s_min=1e-4, split_factor=6.0):
    return _run(2, px, py, cx, cy, half, frac, s_min, split_factor)
