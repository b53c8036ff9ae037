"""Reference (numpy) implementation of the hot kernels.

Must stay numerically equivalent to ``_kernels.pyx``; the test suite runs
both against each other.
"""

from __future__ import annotations

import math

import numpy as np


def _height(x, half_base, theta3, l_wall, r):
    """Chamber contour height on the symmetric wall/arc/wall partition."""
    ax = np.abs(x)
    x_b = half_base - l_wall * math.cos(theta3)
    wall = math.tan(theta3) * (half_base - ax)
    inside = np.clip(r * r - x * x, 0.0, None)
    arc = math.sin(theta3) * l_wall - r * math.cos(theta3) + np.sqrt(inside)
    return np.where(ax >= x_b, wall, arc)


def bellow_f3d(l_base, h2, ob, alpha, d_wall, e, nu,
               th3_0, lw_0, r_0, th3_1, lw_1, r_1, n):
    """Composite Simpson integral of the lateral compression force over the base.

    Index 0 is the rest contour, index 1 the inflated one.
    """
    if n < 2 or n % 2:
        raise ValueError(f"Simpson subdivision count must be even and >= 2, got {n}")
    half = 0.5 * l_base
    x = np.linspace(-half, half, n + 1)
    h_old = _height(x, half, th3_0, lw_0, r_0)
    h_new = _height(x, half, th3_1, lw_1, r_1)
    oa = h2 + h_old
    oa_new = h2 + h_new
    one_minus_cos = 2.0 * math.sin(0.5 * alpha) ** 2
    l_old = np.sqrt((oa - ob) ** 2 + 2.0 * oa * ob * one_minus_cos)
    l_new = np.sqrt((oa_new - ob) ** 2 + 2.0 * oa_new * ob * one_minus_cos)
    # l_new^2 - l_old^2 factored to keep the small difference accurate
    num = (h_new - h_old) * (oa_new + oa - 2.0 * math.cos(alpha) * ob)
    den = l_new + l_old
    dl = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    f2d = (d_wall + dl / nu) * dl * e
    w = np.full(n + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return float(np.dot(w, f2d)) * (l_base / n) / 3.0
