"""Quasi-static model of the SCASPER stacked-airbag shoulder actuator.

Bag torque follows from the work balance and does not depend on the angle;
the bent PU pipes resist with a moment linear in the real extension angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .domain import MaterialParams, ScasperGeometry


class NegativePressureError(ValueError):
    pass


@dataclass(frozen=True)
class TorqueBreakdown:
    tau_bag: float
    m_pipe: float
    m_total: float


def extension_angle(g: ScasperGeometry, p: float) -> float:
    """Free extension angle in degrees from the FEA regression.

    ``p`` is passed through unconverted: the regression's pressure unit was
    never stated, so callers decide what number to feed it.
    """
    if p < 0:
        raise ValueError(f"pressure must be >= 0, got {p}")
    a2, a1, a0 = g.poly
    return (a2 * p + a1) * p + a0


def bag_torque(g: ScasperGeometry, p: float) -> float:
    if p < 0:
        raise ValueError(f"pressure must be >= 0, got {p}")
    return g.bag_width * g.bag_length * g.r1 * p / 2.0


def pipe_area_moment(g: ScasperGeometry) -> float:
    return math.pi * (g.d2**4 - g.d1**4) / 32.0


def pipe_stiffness(g: ScasperGeometry, m: MaterialParams) -> float:
    """Resisting moment per radian: ``E I (N/2)(N/2 + 1) / (N l_pipe)``."""
    half = g.n_bags // 2
    return m.e_pipe * pipe_area_moment(g) * half * (half + 1) / (g.n_bags * g.l_pipe)


def pipe_moment(g: ScasperGeometry, m: MaterialParams, theta_real: float) -> float:
    return pipe_stiffness(g, m) * theta_real


def total_torque(g: ScasperGeometry, m: MaterialParams, p: float, theta_real: float) -> TorqueBreakdown:
    tau = bag_torque(g, p)
    mp = pipe_moment(g, m, theta_real)
    return TorqueBreakdown(tau_bag=tau, m_pipe=mp, m_total=tau - mp)


def inverse_pressure_scasper(
    g: ScasperGeometry, m: MaterialParams, theta_real: float, m_desired: float
) -> float:
    """Closed-form pressure (Pa) producing net torque ``m_desired`` at ``theta_real``."""
    mp = pipe_moment(g, m, theta_real)
    if m_desired < -mp:
        raise NegativePressureError(
            f"torque {m_desired:.6g} N*m needs negative pressure at "
            f"{math.degrees(theta_real):.4g} deg (pipe moment {mp:.6g} N*m)"
        )
    return 2.0 * (m_desired + mp) / (g.bag_width * g.bag_length * g.r1)
