# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Same contract as ``_kernels_py``."""

from libc.math cimport cos, sin, tan, sqrt, fabs


cdef inline double _height(double x, double half, double x_b, double tan3,
                           double arc_off, double r) nogil:
    cdef double ax = fabs(x)
    cdef double inside
    if ax >= x_b:
        return tan3 * (half - ax)
    inside = r * r - x * x
    if inside < 0.0:
        inside = 0.0
    return arc_off + sqrt(inside)


def bellow_f3d(double l_base, double h2, double ob, double alpha, double d_wall,
               double e, double nu, double th3_0, double lw_0, double r_0,
               double th3_1, double lw_1, double r_1, long n):
    if n < 2 or n % 2:
        raise ValueError(f"Simpson subdivision count must be even and >= 2, got {n}")
    cdef double half = 0.5 * l_base
    cdef double xb0 = half - lw_0 * cos(th3_0)
    cdef double xb1 = half - lw_1 * cos(th3_1)
    cdef double t0 = tan(th3_0), t1 = tan(th3_1)
    cdef double off0 = sin(th3_0) * lw_0 - r_0 * cos(th3_0)
    cdef double off1 = sin(th3_1) * lw_1 - r_1 * cos(th3_1)
    cdef double s = sin(0.5 * alpha)
    cdef double omc = 2.0 * s * s
    cdef double ca = cos(alpha)
    cdef double step = l_base / n
    cdef double total = 0.0
    cdef double x, ho, hn, oa, oan, lo, ln, den, dl, w
    cdef long i
    with nogil:
        for i in range(n + 1):
            if i == n:
                x = half
            else:
                x = -half + i * step
            ho = _height(x, half, xb0, t0, off0, r_0)
            hn = _height(x, half, xb1, t1, off1, r_1)
            oa = h2 + ho
            oan = h2 + hn
            lo = sqrt((oa - ob) * (oa - ob) + 2.0 * oa * ob * omc)
            ln = sqrt((oan - ob) * (oan - ob) + 2.0 * oan * ob * omc)
            den = ln + lo
            if den > 0.0:
                dl = (hn - ho) * (oan + oa - 2.0 * ca * ob) / den
            else:
                dl = 0.0
            if i == 0 or i == n:
                w = 1.0
            elif i % 2:
                w = 4.0
            else:
                w = 2.0
            total += w * (d_wall + dl / nu) * dl * e
    return total * step / 3.0
