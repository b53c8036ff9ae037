"""Small numerical kernels shared by the actuator models.

Everything here works on plain Python floats and callables. The functions are
pure, so they are safe to call from parallel sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

ScalarFn = Callable[[float], float]


class RootFindingError(ArithmeticError):
    """Base class for bracketed root-finding failures."""


class NoSignChangeError(RootFindingError):
    def __init__(self, lo: float, hi: float, f_lo: float, f_hi: float):
        self.lo, self.hi, self.f_lo, self.f_hi = lo, hi, f_lo, f_hi
        super().__init__(
            f"no sign change on [{lo!r}, {hi!r}]: f(lo)={f_lo!r}, f(hi)={f_hi!r}"
        )


class MaxIterationsError(RootFindingError):
    def __init__(self, lo: float, hi: float, iterations: int):
        self.lo, self.hi, self.iterations = lo, hi, iterations
        super().__init__(
            f"root not converged after {iterations} iterations; "
            f"last bracket [{lo!r}, {hi!r}]"
        )


class DegenerateDesignError(ValueError):
    """The normal equations of a least-squares fit are singular."""


@dataclass(frozen=True)
class RootConfig:
    abs_tol: float = 1e-12
    x_tol: float = 1e-14
    max_iter: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.x_tol > 0):
            raise ValueError("root tolerances must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def find_root_bracketed(f: ScalarFn, lo: float, hi: float, cfg: RootConfig = RootConfig()) -> float:
    """Find a root of ``f`` inside ``[lo, hi]``.

    Brent's method: inverse quadratic / secant steps, falling back to
    bisection whenever the interpolated step is not safely inside the bracket.

    Stops when ``|f(x)| <= cfg.abs_tol`` or the bracket is narrower than
    ``cfg.x_tol``. The returned point always lies in ``[lo, hi]``.

    Raises:
        NoSignChangeError: ``f(lo)`` and ``f(hi)`` have the same sign and
            neither is within ``abs_tol`` of zero.
        MaxIterationsError: ``cfg.max_iter`` exhausted.
    """
    if lo > hi:
        lo, hi = hi, lo
    a, b = float(lo), float(hi)
    fa, fb = f(a), f(b)
    if not (math.isfinite(fa) and math.isfinite(fb)):
        raise RootFindingError(f"non-finite residual at bracket ends: {fa!r}, {fb!r}")
    if abs(fa) <= cfg.abs_tol:
        return a
    if abs(fb) <= cfg.abs_tol:
        return b
    if (fa > 0) == (fb > 0):
        raise NoSignChangeError(a, b, fa, fb)

    # b: best estimate, a: previous b, c: contrapoint (f(b), f(c) opposite sign)
    c, fc = a, fa
    d = e = b - a
    for _ in range(cfg.max_iter):
        if (fb > 0) == (fc > 0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol = 2.0 * 2.220446049250313e-16 * abs(b) + 0.5 * cfg.x_tol
        m = 0.5 * (c - b)
        if abs(fb) <= cfg.abs_tol or abs(m) <= tol:
            return min(max(b, lo), hi)
        if abs(e) >= tol and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            else:
                p = -p
            if 2.0 * p < min(3.0 * m * q - abs(tol * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = m
        else:
            d = e = m
        a, fa = b, fb
        b += d if abs(d) > tol else math.copysign(tol, m)
        fb = f(b)
        if not math.isfinite(fb):
            raise RootFindingError(f"non-finite residual at x={b!r}")
    raise MaxIterationsError(min(b, c), max(b, c), cfg.max_iter)


def simpson_weights(n: int) -> list[float]:
    """Composite Simpson weights (1, 4, 2, ..., 4, 1), without the h/3 factor."""
    if n < 2 or n % 2:
        raise ValueError(f"Simpson subdivision count must be even and >= 2, got {n}")
    w = [2.0 if i % 2 == 0 else 4.0 for i in range(n + 1)]
    w[0] = w[-1] = 1.0
    return w


def integrate(f: ScalarFn, a: float, b: float, n: int = 256) -> float:
    """Composite Simpson estimate of the integral of ``f`` over ``[a, b]``."""
    if a > b:
        raise ValueError(f"integration bounds must satisfy a <= b, got a={a}, b={b}")
    w = simpson_weights(n)
    h = (b - a) / n
    total = math.fsum(wi * f(a + i * h) for i, wi in enumerate(w))
    return total * h / 3.0


def central_diff(f: ScalarFn, x: float, h: float = 1e-6) -> float:
    if h <= 0:
        raise ValueError("step h must be > 0")
    return (f(x + h) - f(x - h)) / (2.0 * h)


def fit_quadratic(points: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Least-squares quadratic ``y ~ a2 x^2 + a1 x + a0``.

    Solves the 3x3 normal equations by Gaussian elimination with partial
    pivoting. Points are sorted first so the result does not depend on
    input order.

    Returns:
        ``(a2, a1, a0)``.
    """
    pts = sorted((float(x), float(y)) for x, y in points)
    if len(pts) < 3:
        raise DegenerateDesignError(f"need at least 3 points, got {len(pts)}")
    if pts[0][0] == pts[-1][0]:
        raise DegenerateDesignError("all x values are identical")

    # center and scale x so the normal matrix stays well conditioned
    xs = [x for x, _ in pts]
    shift = 0.5 * (xs[0] + xs[-1])
    scale = 0.5 * (xs[-1] - xs[0])
    u = [(x - shift) / scale for x in xs]
    y = [yy for _, yy in pts]

    s = [math.fsum(ui**k for ui in u) for k in range(5)]
    t = [math.fsum(ui**k * yi for ui, yi in zip(u, y)) for k in range(3)]
    # unknowns ordered (c0, c1, c2) for y = c0 + c1 u + c2 u^2
    A = [[s[i + j] for j in range(3)] + [t[i]] for i in range(3)]
    for col in range(3):
        piv = max(range(col, 3), key=lambda r: abs(A[r][col]))
        if abs(A[piv][col]) <= 1e-12 * max(1.0, abs(s[0])):
            break
        A[col], A[piv] = A[piv], A[col]
        for r in range(col + 1, 3):
            k = A[r][col] / A[col][col]
            for j in range(col, 4):
                A[r][j] -= k * A[col][j]
    else:
        c = [0.0, 0.0, 0.0]
        for i in (2, 1, 0):
            c[i] = (A[i][3] - sum(A[i][j] * c[j] for j in range(i + 1, 3))) / A[i][i]
        return _unscale(c, shift, scale)

    # singular in the quadratic term: all points share two x values at most,
    # or lie on a line with exact collinearity in the design
    if len(set(xs)) == 2:
        raise DegenerateDesignError("only two distinct x values; quadratic undetermined")
    raise DegenerateDesignError("normal equations are singular")


def _unscale(c: list[float], shift: float, scale: float) -> tuple[float, float, float]:
    c0, c1, c2 = c
    # y = c0 + c1 (x - s)/k + c2 ((x - s)/k)^2
    a2 = c2 / scale**2
    a1 = c1 / scale - 2.0 * c2 * shift / scale**2
    a0 = c0 - c1 * shift / scale + c2 * shift**2 / scale**2
    return a2, a1, a0
