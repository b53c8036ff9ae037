"""One-shot calibration of the unpublished LISPER dimensions.

Fold shape and envelope dimensions are fixed by hand (they must fit the
132 x 55 x 92 mm body). Three scale parameters are then solved for so the
model hits three published figures:

* bellow share of the output force of 35 % at 50 kPa, 45 deg,
* free bending angle of 112.2 deg at 100 kPa,
* blocked output force of 12.5 N at 100 kPa, 0 deg.

The bellow force is linear in ``d_bellow_wall`` up to the tiny ``dl/nu``
correction, the feet force is linear in ``a_feet`` and the arc term in
``a_base``, so the targets give a 3x3 linear system. A few fixed-point passes
absorb the nonlinearity.

Run ``python -m pneumodel.calibrate`` to print the values recorded as defaults
in :mod:`pneumodel.domain`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import lisper
from .domain import DEG, KPA, LisperGeometry, MaterialParams


@dataclass(frozen=True)
class Targets:
    share_pct: float = 35.0
    share_p: float = 50.0 * KPA
    share_theta: float = 45.0 * DEG
    free_angle: float = 112.2 * DEG
    free_p: float = 100.0 * KPA
    blocked_force: float = 12.5
    blocked_p: float = 100.0 * KPA


def calibrate(g: LisperGeometry, m: MaterialParams, t: Targets = Targets(),
              passes: int = 4) -> LisperGeometry:
    arc_gain = g.r_base**2 * m.e_silicone / g.l_equiv  # arc-term force per unit a_base per rad
    d = g.d_bellow_wall
    for _ in range(passes):
        unit = replace(g, d_bellow_wall=d)

        def f1_per_d(p, theta):
            sol = lisper.solve_bellow_geometry(unit, m, p)
            return lisper.bellow_force(sol, unit, m, theta) / d

        phi_share = f1_per_d(t.share_p, t.share_theta)
        phi_free = f1_per_d(t.free_p, t.free_angle)
        phi_block = f1_per_d(t.blocked_p, g.theta_initial)
        frac = t.share_pct / 100.0
        dphi_share = t.share_theta - g.theta_initial
        dphi_free = t.free_angle - g.theta_initial
        A = np.array([
            [(1 - frac) * phi_share, -frac * t.share_p, frac * arc_gain * dphi_share],
            [phi_free, t.free_p, -arc_gain * dphi_free],
            [phi_block, t.blocked_p, 0.0],
        ])
        b = np.array([0.0, 0.0, t.blocked_force])
        d, a_feet, a_base = np.linalg.solve(A, b)
    return replace(g, d_bellow_wall=float(d), a_feet=float(a_feet), a_base=float(a_base))


def report(g: LisperGeometry, m: MaterialParams, t: Targets = Targets()) -> dict[str, float]:
    fb = lisper.output_force(g, m, t.share_p, t.share_theta)
    return {
        "share_pct": lisper.contribution_percent(fb),
        "free_angle_deg": lisper.free_bending_angle(g, m, t.free_p) / DEG,
        "blocked_force_n": lisper.output_force(g, m, t.blocked_p, g.theta_initial).f_output,
    }


def main() -> None:
    m = MaterialParams()
    g = calibrate(LisperGeometry(), m)
    print(f"d_bellow_wall = {g.d_bellow_wall!r}")
    print(f"a_feet = {g.a_feet!r}")
    print(f"a_base = {g.a_base!r}")
    for k, v in report(g, m).items():
        print(f"# {k}: {v:.6g}")


if __name__ == "__main__":
    main()
