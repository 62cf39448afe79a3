"""Line-of-sight guidance seeding for the shooting solver.

The reduced problem admits an approximate closed-form feedback law of
proportional-navigation type.  Its ingredients:

* LOS geometry: range R and the elevation / azimuth Euler angles of the
  unit vector from the vehicle to the target, expressed in the local
  north-east-down triad (so a target above the horizon has positive
  elevation, matching the sign convention of the path angle gamma).
* Range-dependent gains k1, k2, k3 built from b = sqrt(c_m d / (2 eta)),
  the natural inverse length of the lift/drag boundary-value problem.
  As b R -> 0 they reduce to plain proportional navigation (k1 = 2,
  k2 = 4, k3 = 0).
* The feedback laws for the in-plane and out-of-plane lift commands, and
  the assembly of a full shooting guess: horizon = initial range, angle
  costates from the extremal-control relations, position costates from a
  3x3 linear solve enforcing a vanishing Hamiltonian and consistency of
  the costate rates with the differentiated laws.

Aerodynamic coefficients and cos(gamma) are frozen at the initial state
throughout, which is what makes the law integrable in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularGuess, ZeroRange
from .integrator import rk2_step
from .simplified import _simplified_rates
from .vehicle import VehicleParams, drag_coef, max_curvature

# below this, the 0/0 gain expressions switch to their series form
GAIN_SERIES_CUTOFF = 1e-2
MIN_RANGE = 1.0  # [m]


def ecef(r: float, L: float, l: float) -> np.ndarray:
    """Cartesian position from radius, latitude, longitude."""
    cl = math.cos(L)
    return np.array([r * cl * math.cos(l), r * cl * math.sin(l), r * math.sin(L)])


def ned_basis(L: float, l: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """North, east, down unit vectors at latitude L, longitude l."""
    sL, cL = math.sin(L), math.cos(L)
    sl, cl = math.sin(l), math.cos(l)
    north = np.array([-sL * cl, -sL * sl, cL])
    east = np.array([-sl, cl, 0.0])
    down = np.array([-cL * cl, -cL * sl, -sL])
    return north, east, down


@dataclass(frozen=True)
class LosGeometry:
    """Range and LOS Euler angles toward the target.

    range_m >= MIN_RANGE; elevation/azimuth follow the velocity-angle
    convention: the LOS unit vector is
    cos(el)cos(az) e_N + cos(el)sin(az) e_E - sin(el) e_D.
    """

    range_m: float
    elevation: float
    azimuth: float


def los_from(xi, xi_f, ref_azimuth: float | None = None) -> LosGeometry:
    """LOS geometry from Cartesian position xi toward target xi_f.

    The local triad is taken at xi.  The azimuth is the principal
    two-argument arctangent, optionally unwrapped by whole turns to land
    within pi of ref_azimuth (keeps the feedback terms small when the
    heading sits near the +-pi seam).
    """
    xi = np.asarray(xi, dtype=float)
    xi_f = np.asarray(xi_f, dtype=float)
    dvec = xi_f - xi
    rng = float(np.linalg.norm(dvec))
    if rng < MIN_RANGE:
        raise ZeroRange(f"range {rng:.3g} m below {MIN_RANGE} m")
    n = dvec / rng
    rho = math.hypot(xi[0], xi[1])
    L = math.atan2(xi[2], rho)
    l = math.atan2(xi[1], xi[0])
    north, east, down = ned_basis(L, l)
    elevation = math.asin(max(-1.0, min(1.0, -float(n @ down))))
    azimuth = math.atan2(float(n @ east), float(n @ north))
    if ref_azimuth is not None:
        azimuth += 2.0 * math.pi * round((ref_azimuth - azimuth) / (2.0 * math.pi))
    return LosGeometry(range_m=rng, elevation=elevation, azimuth=azimuth)


def los_rates(geom: LosGeometry, v: float, gamma: float, chi: float) -> tuple[float, float]:
    """Rotation rates of the LOS angles for a vehicle flying at speed v."""
    if geom.range_m < MIN_RANGE:
        raise ZeroRange(f"range {geom.range_m:.3g} m below {MIN_RANGE} m")
    vr = v / geom.range_m
    return (-vr * math.sin(gamma - geom.elevation),
            -vr * math.sin(chi - geom.azimuth))


@dataclass(frozen=True)
class GuidanceGains:
    """Dimensionless range-dependent gains; k3 = 2 + k1 - k2 identically."""

    k1: float
    k2: float
    k3: float


def gains(b_r: float) -> GuidanceGains:
    """Gains as functions of the dimensionless range x = b R.

    The closed forms are 0/0 at x = 0; below GAIN_SERIES_CUTOFF a fourth
    order series is used to dodge the catastrophic cancellation.
    """
    x = float(b_r)
    if x < GAIN_SERIES_CUTOFF:
        x2 = x * x
        k1 = 2.0 - x2 / 30.0 + 13.0 * x2 * x2 / 12600.0
        k2 = 4.0 + 2.0 * x2 / 15.0 - 11.0 * x2 * x2 / 6300.0
    else:
        ep, em = math.exp(x), math.exp(-x)
        den = 4.0 + ep * (x - 2.0) - em * (x + 2.0)
        k1 = x * (ep - em - 2.0 * x) / den
        k2 = x * (ep * (x - 1.0) + em * (x + 1.0)) / den
    return GuidanceGains(k1=k1, k2=k2, k3=2.0 + k1 - k2)


def gain_slopes(b_r: float) -> tuple[float, float, float]:
    """d k_i / d(bR), needed when differentiating the laws along the LOS."""
    x = float(b_r)
    if x < GAIN_SERIES_CUTOFF:
        x2 = x * x
        dk1 = -x / 15.0 + 13.0 * x2 * x / 3150.0
        dk2 = 4.0 * x / 15.0 - 11.0 * x2 * x / 1575.0
    else:
        ep, em = math.exp(x), math.exp(-x)
        den = 4.0 + ep * (x - 2.0) - em * (x + 2.0)
        dden = ep * (x - 1.0) + em * (x + 1.0)
        n1 = ep - em - 2.0 * x
        dn1 = ep + em - 2.0
        n2 = ep * (x - 1.0) + em * (x + 1.0)
        dn2 = x * (ep - em)
        dk1 = (n1 + x * dn1) / den - x * n1 * dden / (den * den)
        dk2 = (n2 + x * dn2) / den - x * n2 * dden / (den * den)
    return dk1, dk2, dk1 - dk2


@dataclass(frozen=True)
class FrozenAero:
    """Aero coefficients held constant while the law is integrated."""

    cm: float
    d: float
    cos_gamma: float
    b: float

    @classmethod
    def at(cls, r: float, gamma: float, p: VehicleParams) -> "FrozenAero":
        cm = max_curvature(r, p)
        d = drag_coef(r, p)
        return cls(cm=cm, d=d, cos_gamma=math.cos(gamma),
                   b=math.sqrt(cm * d / (2.0 * p.eta)))


def guidance_u1(geom: LosGeometry, gamma: float, gamma_f: float,
                p: VehicleParams, frozen: FrozenAero) -> float:
    """In-plane lift command steering toward the target path angle."""
    if geom.range_m < MIN_RANGE:
        raise ZeroRange(f"range {geom.range_m:.3g} m below {MIN_RANGE} m")
    k = gains(frozen.b * geom.range_m)
    rc = geom.range_m * frozen.cm
    return (-k.k1 * (gamma_f - geom.elevation) / rc
            - k.k2 * math.sin(gamma - geom.elevation) / rc
            - k.k3 * math.cos(gamma) / (2.0 * p.hr * frozen.cm))


def guidance_u2(geom: LosGeometry, gamma: float, chi: float, chi_f: float,
                p: VehicleParams, frozen: FrozenAero) -> float:
    """Out-of-plane lift command steering toward the target azimuth."""
    if geom.range_m < MIN_RANGE:
        raise ZeroRange(f"range {geom.range_m:.3g} m below {MIN_RANGE} m")
    k = gains(frozen.b * geom.range_m)
    rc = geom.range_m * frozen.cm
    return -math.cos(gamma) * (k.k1 * (chi_f - geom.azimuth) / rc
                               + k.k2 * math.sin(chi - geom.azimuth) / rc)


@dataclass(frozen=True)
class InitialGuess:
    """Shooting seed: abscissa horizon and initial costate (5,)."""

    s_f: float
    costate0: np.ndarray
    diagnostics: dict

    def __post_init__(self):
        if self.s_f <= 0.0:
            raise ValueError("s_f must be positive")


def assemble_guess(y0, v0: float, target, p: VehicleParams) -> InitialGuess:
    """Build the full shooting seed for the reduced problem.

    y0 and target are 5-vectors (r, L, l, gamma, chi).  The horizon guess
    is the initial range; the angle costates invert the extremal-control
    relations at the initial guidance commands; the position costates
    solve the 3x3 system {H = 0, p_gamma' = 2 eta u1', p_chi' =
    2 eta (cos(gamma) u2)'} whose matrix has determinant
    -cos(gamma0) / (r0^2 cos(L0)).
    """
    r0, L0, l0, g0, c0 = (float(v) for v in y0)
    rf, Lf, lf, gf, cf = (float(v) for v in target)
    geom = los_from(ecef(r0, L0, l0), ecef(rf, Lf, lf), ref_azimuth=c0)
    frozen = FrozenAero.at(r0, g0, p)
    R = geom.range_m
    cm, d, eta = frozen.cm, frozen.d, p.eta

    u1_0 = guidance_u1(geom, g0, gf, p, frozen)
    u2_0 = guidance_u2(geom, g0, c0, cf, p, frozen)
    cg0, sg0 = math.cos(g0), math.sin(g0)
    pg0 = 2.0 * eta * u1_0
    pc0 = 2.0 * eta * cg0 * u2_0

    # differentiate the laws along the LOS: dR/dt = -v, LOS rates from the
    # collinear-flight kinematics, gamma/chi rates from the dynamics
    lam1dot, lam2dot = los_rates(geom, v0, g0, c0)
    k = gains(frozen.b * R)
    dk1, dk2, dk3 = gain_slopes(frozen.b * R)
    R_dot = -v0
    gamma_dot = v0 * cm * u1_0
    chi_dot = v0 * cm * u2_0 / cg0

    e1 = gf - geom.elevation
    s1 = math.sin(g0 - geom.elevation)
    e1_dot = -lam1dot
    s1_dot = math.cos(g0 - geom.elevation) * (gamma_dot - lam1dot)
    num1 = k.k1 * e1 + k.k2 * s1
    num1_dot = (dk1 * frozen.b * R_dot * e1 + k.k1 * e1_dot
                + dk2 * frozen.b * R_dot * s1 + k.k2 * s1_dot)
    du1_dt = (-(num1_dot * R - num1 * R_dot) / (R * R * cm)
              - dk3 * frozen.b * R_dot * cg0 / (2.0 * p.hr * cm))

    e2 = cf - geom.azimuth
    s2 = math.sin(c0 - geom.azimuth)
    e2_dot = -lam2dot
    s2_dot = math.cos(c0 - geom.azimuth) * (chi_dot - lam2dot)
    num2 = k.k1 * e2 + k.k2 * s2
    num2_dot = (dk1 * frozen.b * R_dot * e2 + k.k1 * e2_dot
                + dk2 * frozen.b * R_dot * s2 + k.k2 * s2_dot)
    du2_dt = -cg0 * (num2_dot * R - num2 * R_dot) / (R * R * cm)

    u1_p = du1_dt / v0  # abscissa derivatives: d/ds = (1/v) d/dt
    u2_p = du2_dt / v0

    # rows: H = 0, p_gamma' matching, p_chi' matching
    cl0 = math.cos(L0)
    sc0, cc0 = math.sin(c0), math.cos(c0)
    M = np.array([
        [sg0, cg0 * cc0 / r0, cg0 * sc0 / (r0 * cl0)],
        [-cg0, sg0 * cc0 / r0, sg0 * sc0 / (r0 * cl0)],
        [0.0, cg0 * sc0 / r0, -cg0 * cc0 / (r0 * cl0)],
    ])
    rhs = np.array([
        -pg0 * cm * u1_0 - pc0 * cm * u2_0 / cg0
        + d + eta * cm * (u1_0 * u1_0 + u2_0 * u2_0),
        2.0 * eta * u1_p + pc0 * cm * u2_0 * sg0 / (cg0 * cg0),
        2.0 * eta * (cg0 * u2_p - sg0 * cm * u1_0 * u2_0),
    ])
    det = float(np.linalg.det(M))
    det_scale = 1.0 / (r0 * r0 * abs(cl0))
    if abs(det) < 1e-18 * det_scale:
        raise SingularGuess(f"guess system determinant {det:.3e} below scale")
    pr0, pL0, pl0 = np.linalg.solve(M, rhs)

    costate0 = np.array([pr0, pL0, pl0, pg0, pc0])
    diagnostics = {
        "range0_m": R,
        "elevation0": geom.elevation,
        "azimuth0": geom.azimuth,
        "u1_0": u1_0,
        "u2_0": u2_0,
        "det": det,
        "gains": (k.k1, k.k2, k.k3),
    }
    return InitialGuess(s_f=R, costate0=costate0, diagnostics=diagnostics)


def closed_loop_trace(y0, v0: float, target, p: VehicleParams,
                      n: int = 4000, stop_range_frac: float = 0.005,
                      max_arc_factor: float = 1.6) -> dict:
    """Fly the reduced dynamics under the feedback law toward target.

    Integrates in arc length with the commands recomputed from the current
    state each step; stops at closest approach (range rising again), below
    stop_range_frac of the initial range, or after max_arc_factor times
    the initial range.  Returns the sampled trace plus a terminal summary
    used to judge guess quality.
    """
    rf, Lf, lf, gf, cf = (float(v) for v in target)
    xi_f = ecef(rf, Lf, lf)
    y = [float(v) for v in y0]
    frozen = FrozenAero.at(y[0], y[3], p)
    geom0 = los_from(ecef(y[0], y[1], y[2]), xi_f, ref_azimuth=y[4])
    R0 = geom0.range_m
    h = max_arc_factor * R0 / n
    prev_az = geom0.azimuth

    s_vals = [0.0]
    states = [list(y)]
    u1s, u2s, ranges = [], [], []
    best = (R0, 0)
    for i in range(n):
        geom = los_from(ecef(y[0], y[1], y[2]), xi_f, ref_azimuth=prev_az)
        prev_az = geom.azimuth
        u1 = guidance_u1(geom, y[3], gf, p, frozen)
        u2 = guidance_u2(geom, y[3], y[4], cf, p, frozen)
        u1s.append(u1)
        u2s.append(u2)
        ranges.append(geom.range_m)
        if geom.range_m < best[0]:
            best = (geom.range_m, i)
        if geom.range_m < stop_range_frac * R0:
            break
        if i > 2 and geom.range_m > ranges[-2] and geom.range_m > ranges[-3]:
            break  # passed closest approach

        def law_rates(s, yy, _u1=u1, _u2=u2):
            return _simplified_rates(yy[0], yy[1], yy[2], yy[3], yy[4], _u1, _u2, p)

        y = rk2_step(law_rates, s_vals[-1], y, h)
        s_vals.append(s_vals[-1] + h)
        states.append(list(y))

    states = np.array(states)
    terminal = states[-1]
    geom_end = los_from(ecef(terminal[0], terminal[1], terminal[2]), xi_f,
                        ref_azimuth=prev_az) if np.linalg.norm(
        ecef(terminal[0], terminal[1], terminal[2]) - xi_f) >= MIN_RANGE else None
    final_range = geom_end.range_m if geom_end is not None else 0.0
    return {
        "s": np.array(s_vals),
        "states": states,
        "u1": np.array(u1s),
        "u2": np.array(u2s),
        "range": np.array(ranges),
        "initial_range": R0,
        "final_range": final_range,
        "range_fraction": final_range / R0,
        "gamma_error": abs(terminal[3] - gf),
        "chi_error": abs(terminal[4] - cf),
    }
