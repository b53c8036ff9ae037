"""Quasi-static model of the LISPER bellow-type elbow actuator.

Pipeline for a chamber pressure ``p`` (Pa) and bending angle ``theta`` (rad):

1. inflated arc and wall lengths of one bellow fold,
2. inflated fold geometry from the three closure relations (one scalar root),
3. chamber contour height ``h(x)`` on the symmetric wall/arc/wall partition,
4. lateral compression force per unit base length from the law of cosines,
   integrated over the base,
5. bellow, feet and arc-restoring force components and their moment balance.

The strain term ``l_thick * p / (E * nu)`` is used exactly as written even though
it is not dimensionless; calibrated defaults absorb the scale.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

from . import kernels
from .domain import KPA, LisperGeometry, MaterialParams
from .numerics import RootConfig, RootFindingError, find_root_bracketed

THETA2_BRACKET = (1e-6, math.pi)
INVERSE_P_MAX = 150.0 * KPA


class PoleError(ValueError):
    """Pressure at or beyond the singularity of the arc-length relation."""


class InfeasibleGeometryError(ValueError):
    """No inflated fold geometry exists for these inputs."""


class NoFreeAngleError(RootFindingError):
    pass


class UnreachableForceError(ValueError):
    def __init__(self, f_desired: float, f_lo: float, f_hi: float, theta: float):
        self.f_desired, self.f_lo, self.f_hi = f_desired, f_lo, f_hi
        super().__init__(
            f"force {f_desired:.6g} N unreachable at {math.degrees(theta):.4g} deg; "
            f"achievable range over [0, {INVERSE_P_MAX / KPA:g}] kPa is "
            f"[{f_lo:.6g}, {f_hi:.6g}] N"
        )


@dataclass(frozen=True)
class BellowSolution:
    s_new: float
    l_wall_new: float
    theta2: float
    theta3: float
    r_new: float


@dataclass(frozen=True)
class ForceBreakdown:
    f_total1: float
    f_total2: float
    f_total3: float
    f_output: float


def strain_ratio(g: LisperGeometry, m: MaterialParams, p: float) -> float:
    return g.l_thick * p / (m.e_silicone * m.poisson)


def pole_pressure(g: LisperGeometry, m: MaterialParams) -> float:
    return m.e_silicone * m.poisson / g.l_thick


def arc_length_inflated(g: LisperGeometry, m: MaterialParams, p: float) -> float:
    k = strain_ratio(g, m, p)
    if k >= 1.0:
        raise PoleError(
            f"pressure {p:.6g} Pa at or above the arc-length pole "
            f"{pole_pressure(g, m):.6g} Pa"
        )
    return 2.0 * g.beta * g.r_mid / (1.0 - k)


def wall_length_inflated(g: LisperGeometry, m: MaterialParams, p: float) -> float:
    return g.l_wall_initial * (1.0 + strain_ratio(g, m, p))


def _closure(theta2: float, s_new: float, l_wall: float, l_base: float) -> float:
    # third closure relation with theta3 = theta2/2 and r = s/theta2, multiplied
    # through by cos(theta3); strictly increasing in theta2 on (0, pi)
    half = 0.5 * theta2
    return 0.5 * l_base - l_wall * math.cos(half) - s_new * math.sin(half) / theta2


@functools.lru_cache(maxsize=4096)
def solve_bellow_geometry(
    g: LisperGeometry, m: MaterialParams, p: float, cfg: RootConfig = RootConfig()
) -> BellowSolution:
    """Inflated fold geometry at pressure ``p``.

    Substituting ``theta3 = theta2/2`` and ``r_new = s_new/theta2`` leaves a
    single equation in ``theta2``, bracketed on ``(1e-6, pi)``.
    """
    s_new = arc_length_inflated(g, m, p)
    l_wall = wall_length_inflated(g, m, p)
    lo, hi = THETA2_BRACKET
    f = functools.partial(_closure, s_new=s_new, l_wall=l_wall, l_base=g.l_base)
    f_lo, f_hi = f(lo), f(hi)
    if f_lo > 0 or f_hi < 0:
        raise InfeasibleGeometryError(
            f"no fold geometry at p={p:.6g} Pa: closure residual {f_lo:.3g} at "
            f"theta2={lo:g}, {f_hi:.3g} at theta2=pi (l_base too short or too long)"
        )
    theta2 = find_root_bracketed(f, lo, hi, cfg)
    return BellowSolution(
        s_new=s_new, l_wall_new=l_wall, theta2=theta2, theta3=0.5 * theta2,
        r_new=s_new / theta2,
    )


def bellow_residuals(sol: BellowSolution, g: LisperGeometry) -> tuple[float, float, float]:
    """Residuals of the three closure relations (rad, rad, m)."""
    return (
        sol.theta2 / 2.0 - sol.theta3,
        sol.theta2 - sol.s_new / sol.r_new,
        g.l_base / (2.0 * math.cos(sol.theta3))
        - sol.l_wall_new - sol.r_new * math.tan(sol.theta2 / 2.0),
    )


def wall_arc_boundary(sol: BellowSolution, g: LisperGeometry) -> float:
    """``x_b``: the contour is a straight wall for ``|x| >= x_b`` and an arc inside."""
    return 0.5 * g.l_base - sol.l_wall_new * math.cos(sol.theta3)


def _wall_height(sol, g, x):
    return math.tan(sol.theta3) * (0.5 * g.l_base - abs(x))


def _arc_height(sol, x):
    r = sol.r_new
    return (math.sin(sol.theta3) * sol.l_wall_new - r * math.cos(sol.theta2 / 2.0)
            + math.sqrt(max(r * r - x * x, 0.0)))


def chamber_height(sol: BellowSolution, g: LisperGeometry, x: float) -> float:
    half = 0.5 * g.l_base
    if not -half * (1 + 1e-12) <= x <= half * (1 + 1e-12):
        raise ValueError(f"x={x!r} outside the base [-{half:g}, {half:g}] m")
    if abs(x) >= wall_arc_boundary(sol, g):
        return _wall_height(sol, g, x)
    return _arc_height(sol, x)


def rest_geometry(g: LisperGeometry, m: MaterialParams, cfg: RootConfig = RootConfig()) -> BellowSolution:
    return solve_bellow_geometry(g, m, 0.0, cfg)


def bending_half_angle(g: LisperGeometry, theta_bend: float) -> float:
    """Angle between the two side lines of one fold meeting at the joint axis."""
    return theta_bend / (2.0 * g.n_bellows)


def compression_length(oa: float, oa_new: float, ob: float, alpha: float) -> float:
    """``l_new - l_old`` from the law of cosines, cancellation-free."""
    omc = 2.0 * math.sin(0.5 * alpha) ** 2
    l_old = math.sqrt((oa - ob) ** 2 + 2.0 * oa * ob * omc)
    l_new = math.sqrt((oa_new - ob) ** 2 + 2.0 * oa_new * ob * omc)
    den = l_new + l_old
    if den == 0.0:
        return 0.0
    return (oa_new - oa) * (oa_new + oa - 2.0 * math.cos(alpha) * ob) / den


def compression_force_2d(
    sol: BellowSolution, g: LisperGeometry, m: MaterialParams, theta_bend: float, x: float,
    rest: BellowSolution | None = None,
) -> float:
    """Lateral compression force of the fold section at ``x``.

    ``OA`` uses the rest contour, ``OA'`` the inflated one, ``OB = h2`` (the
    base plane). Negative ``dl`` (extension) is returned signed.
    """
    rest = rest if rest is not None else rest_geometry(g, m)
    oa = g.h2 + chamber_height(rest, g, x)
    oa_new = g.h2 + chamber_height(sol, g, x)
    dl = compression_length(oa, oa_new, g.h2, bending_half_angle(g, theta_bend))
    area = g.d_bellow_wall + dl / m.poisson
    return area * dl * m.e_silicone


def bellow_arms(g: LisperGeometry) -> list[float]:
    """Moment arm of each fold about the joint axis.

    Folds are wedges around the axis, so every fold tip sits at the same
    distance ``h2 + h_base``.
    """
    return [g.h2 + g.h_base] * g.n_bellows


def compression_force_3d(
    sol: BellowSolution, g: LisperGeometry, m: MaterialParams, theta_bend: float,
    rest: BellowSolution, n: int = 256, rtol: float = 1e-8, n_max: int = 8192,
) -> float:
    """Integral of :func:`compression_force_2d` over the base.

    Composite Simpson, doubling ``n`` until two successive estimates agree to
    ``rtol`` (relative) or ``n_max`` is reached.
    """
    alpha = bending_half_angle(g, theta_bend)
    args = (g.l_base, g.h2, g.h2, alpha, g.d_bellow_wall, m.e_silicone, m.poisson,
            rest.theta3, rest.l_wall_new, rest.r_new, sol.theta3, sol.l_wall_new, sol.r_new)
    prev = kernels.bellow_f3d(*args, n)
    while n < n_max:
        n *= 2
        cur = kernels.bellow_f3d(*args, n)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    return prev


def bellow_force_from_f3d(f3d: float, g: LisperGeometry) -> float:
    torque = sum(arm * f3d * math.cos(math.pi / 2 - g.gamma) * 2.0 for arm in bellow_arms(g))
    return torque / g.l_equiv


def bellow_force(
    sol: BellowSolution, g: LisperGeometry, m: MaterialParams, theta_bend: float,
    rest: BellowSolution | None = None, **quad,
) -> float:
    rest = rest if rest is not None else rest_geometry(g, m)
    f3d = compression_force_3d(sol, g, m, theta_bend, rest, **quad)
    return bellow_force_from_f3d(f3d, g)


def feet_force(g: LisperGeometry, p: float) -> float:
    return g.a_feet * p


def arc_restoring_force(g: LisperGeometry, m: MaterialParams, theta_bend: float) -> float:
    # named a force but carries N*m; the moment balance applies arm R to it
    return (theta_bend - g.theta_initial) * g.a_base * m.e_silicone * g.r_base


def output_force(
    g: LisperGeometry, m: MaterialParams, p: float, theta_bend: float,
    cfg: RootConfig = RootConfig(), **quad,
) -> ForceBreakdown:
    """Net tip force from the moment balance of the three components."""
    if p < 0:
        raise ValueError(f"pressure must be >= 0, got {p}")
    rest = rest_geometry(g, m, cfg)
    sol = solve_bellow_geometry(g, m, p, cfg)
    f1 = bellow_force(sol, g, m, theta_bend, rest, **quad)
    f2 = feet_force(g, p)
    f3 = arc_restoring_force(g, m, theta_bend)
    f_out = (g.l_equiv * (f1 + f2) - g.r_base * f3) / g.l_equiv
    return ForceBreakdown(f_total1=f1, f_total2=f2, f_total3=f3, f_output=f_out)


def output_torque(g, m, p, theta_bend, cfg=RootConfig(), **quad) -> float:
    return output_force(g, m, p, theta_bend, cfg, **quad).f_output * g.l_equiv


def bellow_contribution(
    g: LisperGeometry, m: MaterialParams, p: float, theta_bend: float,
    cfg: RootConfig = RootConfig(), **quad,
) -> float:
    """Bellow share of the output force, percent."""
    fb = output_force(g, m, p, theta_bend, cfg, **quad)
    return contribution_percent(fb)


def contribution_percent(fb: ForceBreakdown) -> float:
    if fb.f_output == 0.0:
        raise ZeroDivisionError("output force is zero (equilibrium); contribution undefined")
    return fb.f_total1 / fb.f_output * 100.0


def free_bending_angle(
    g: LisperGeometry, m: MaterialParams, p: float, cfg: RootConfig = RootConfig(), **quad,
) -> float:
    """Unloaded bending angle: root of ``f_output(p, theta) = 0`` on ``(theta_initial, pi]``."""
    if p < 0:
        raise ValueError(f"pressure must be >= 0, got {p}")
    lo, hi = g.theta_initial, math.pi
    if p == 0.0:
        return lo

    def f(theta):
        return output_force(g, m, p, theta, cfg, **quad).f_output

    f_hi = f(hi)
    if f_hi > 0:
        raise NoFreeAngleError(
            f"output force stays positive on [{math.degrees(lo):.4g}, "
            f"{math.degrees(hi):.4g}] deg at p={p:.6g} Pa (f={f_hi:.6g} N at the upper end)"
        )
    return find_root_bracketed(f, lo, hi, cfg)


def inverse_pressure(
    g: LisperGeometry, m: MaterialParams, theta: float, f_desired: float,
    cfg: RootConfig = RootConfig(), p_max: float = INVERSE_P_MAX, **quad,
) -> float:
    """Pressure giving tip force ``f_desired`` at bending angle ``theta``."""

    def f(p):
        return output_force(g, m, p, theta, cfg, **quad).f_output - f_desired

    f_lo, f_hi = f(0.0), f(p_max)
    if (f_lo > cfg.abs_tol and f_hi > cfg.abs_tol) or (f_lo < -cfg.abs_tol and f_hi < -cfg.abs_tol):
        raise UnreachableForceError(f_desired, f_lo + f_desired, f_hi + f_desired, theta)
    return find_root_bracketed(f, 0.0, p_max, cfg)
