"""Point-mass vehicle model for powered endo-atmospheric flight.

Aerodynamic coefficients follow an exponential-atmosphere altitude scaling,
gravity is inverse-square, and the motor is a constant mass-flow booster
that cuts off at a fixed time.  Time-domain state convention:

    x = (r, L, l, w, gamma, chi)

    r      geocentric radius [m]
    L      latitude [rad]
    l      longitude [rad]
    w      log-speed ln(v / 1 m/s)
    gamma  flight-path angle, positive climbing [rad]
    chi    azimuth from north toward east [rad]

Controls are the normalized lift coefficient u (angle of attack
alpha = alpha_max * u) and the bank angle beta.  The local frame is
north-east-down, so the velocity direction is
cos(gamma)cos(chi) e_N + cos(gamma)sin(chi) e_E - sin(gamma) e_D.

The dynamics carry a morphing parameter lam1 in [0, 1]: at lam1 = 0 only
drag acts on the speed and the path is driven by lift alone (the reduced
problem used to seed the solver); at lam1 = 1 thrust, gravity and the
curvature coupling are fully switched on.  All units SI, angles radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MassDepleted, SingularChart

# Below this, cos(gamma) / cos(L) are treated as a chart breakdown.
CHART_TOL = 1e-9


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of the vehicle and environment.

    cm0        lift-curvature coefficient at reference altitude [1/m]
    d0         drag coefficient at reference altitude [1/m]
    eta        aerodynamic efficiency factor [-]
    hr         atmosphere scale height [m]
    alpha_max  maximal angle of attack [rad]
    q0         mass flow before cutoff [kg/s]
    t_sw       motor cutoff time [s]
    ve         fuel injection velocity [m/s]
    m0         initial mass [kg]
    rT         planet radius [m]
    g0         surface gravity [m/s^2]
    """

    cm0: float = 0.00075
    d0: float = 0.00005
    eta: float = 0.442
    hr: float = 7500.0
    alpha_max: float = math.pi / 6
    q0: float = 10.0
    t_sw: float = 20.0
    ve: float = 1500.0
    m0: float = 1000.0
    rT: float = 6378137.0
    g0: float = 9.80665

    def __post_init__(self):
        for name in ("cm0", "d0", "eta", "hr", "m0", "rT", "g0"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.alpha_max < math.pi / 2:
            raise ValueError("alpha_max must lie in (0, pi/2)")
        if self.q0 < 0.0 or self.t_sw < 0.0 or self.ve < 0.0:
            raise ValueError("q0, t_sw, ve must be non-negative")


DEFAULT_PARAMS = VehicleParams()


def air_density_factor(r: float, p: VehicleParams) -> float:
    """Dimensionless exponential atmosphere factor exp(-(r - rT)/hr)."""
    return math.exp(-(r - p.rT) / p.hr)


def max_curvature(r: float, p: VehicleParams) -> float:
    """Lift-curvature coefficient c_m(r) [1/m]; max turn rate per meter is
    c_m * u at unit speed."""
    return p.cm0 * air_density_factor(r, p)


def drag_coef(r: float, p: VehicleParams) -> float:
    """Zero-lift drag coefficient d(r) [1/m]."""
    return p.d0 * air_density_factor(r, p)


def gravity(r: float, p: VehicleParams) -> float:
    """Inverse-square gravity g(r) [m/s^2]."""
    return p.g0 * (p.rT / r) ** 2


def mass_flow(t: float, p: VehicleParams) -> float:
    """Propellant mass flow q(t) [kg/s]: q0 up to cutoff, zero after."""
    return p.q0 if t <= p.t_sw else 0.0


def thrust(t: float, p: VehicleParams) -> float:
    """Thrust modulus f_T(t) = ve * q(t) [N]."""
    return p.ve * mass_flow(t, p)


def mass(t: float, lam1: float, p: VehicleParams) -> float:
    """Vehicle mass m(t) [kg] with consumption scaled by lam1.

    Raises MassDepleted if the propellant burned exceeds the initial mass,
    which signals a misconfigured m0.
    """
    m = p.m0 - lam1 * p.q0 * min(t, p.t_sw)
    if m <= 0.0:
        raise MassDepleted(f"mass {m:.3f} kg <= 0 at t={t:g} s (m0={p.m0:g})")
    return m


def _full_rates(t, r, L, l, w, gamma, chi, u, beta, lam1, p, exact_alpha):
    """Scalar core of the morphing dynamics; returns a 6-tuple of rates.

    exact_alpha=False applies the small-angle closure cos(alpha) -> 1,
    sin(alpha) -> alpha used consistently by the Hamiltonian machinery;
    True keeps the exact trigonometry (diagnostics only).
    """
    cg = math.cos(gamma)
    cl = math.cos(L)
    if abs(cg) < CHART_TOL or abs(cl) < CHART_TOL:
        raise SingularChart(f"cos(gamma)={cg:.2e}, cos(L)={cl:.2e}")

    v = math.exp(w)
    sg = math.sin(gamma)
    sc, cc = math.sin(chi), math.cos(chi)
    factor = math.exp(-(r - p.rT) / p.hr)
    cm = p.cm0 * factor
    d = p.d0 * factor

    r_dot = v * sg
    L_dot = (v / r) * cg * cc
    l_dot = (v / r) * cg * sc / cl

    drag = (d + p.eta * cm * u * u) * v
    if lam1 != 0.0:
        f_t = p.ve * (p.q0 if t <= p.t_sw else 0.0)
        m = p.m0 - lam1 * p.q0 * min(t, p.t_sw)
        if m <= 0.0:
            raise MassDepleted(f"mass {m:.3f} kg <= 0 at t={t:g} s")
        fv = f_t / (m * v)
        gv = p.g0 * (p.rT / r) ** 2 / v
        if exact_alpha:
            alpha = p.alpha_max * u
            ca, sa = math.cos(alpha), math.sin(alpha)
        else:
            ca, sa = 1.0, p.alpha_max * u
        w_dot = lam1 * (fv * ca - gv * sg) - drag
        gamma_dot = v * cm * u * math.cos(beta) + lam1 * (
            (v / r) * cg + fv * sa * math.cos(beta) - gv * cg
        )
        chi_dot = (v * cm / cg) * u * math.sin(beta) + lam1 * (
            (v / r) * cg * sc * math.tan(L) + fv * sa * math.sin(beta) / cg
        )
    else:
        w_dot = -drag
        gamma_dot = v * cm * u * math.cos(beta)
        chi_dot = (v * cm / cg) * u * math.sin(beta)

    return (r_dot, L_dot, l_dot, w_dot, gamma_dot, chi_dot)


def full_dynamics(t, x, control, lam1, p: VehicleParams, exact_alpha: bool = False) -> np.ndarray:
    """Time derivative of the 6-state (r, L, l, w, gamma, chi).

    control is (u, beta).  Raises SingularChart near cos(gamma) = 0 or
    cos(L) = 0 and MassDepleted when lam1-scaled consumption empties the
    vehicle.
    """
    u, beta = control
    return np.array(_full_rates(t, x[0], x[1], x[2], x[3], x[4], x[5],
                                u, beta, lam1, p, exact_alpha))
