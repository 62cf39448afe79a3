"""Hamiltonian machinery of the morphing time-domain problem.

The running cost is the negative of the log-speed rate, so minimizing it
maximizes the terminal speed; with the cost multiplier normalized to -1
the Hamiltonian is

    H = <p, f> + dw/dt

i.e. the w-costate enters only through (p_w + 1).  Final speed is free,
giving the terminal condition p_w(t_f) = 0; the free final time gives
H(t_f) = 0.

Control extraction uses the small-angle closure cos(alpha) -> 1,
sin(alpha) -> alpha, consistently with the dynamics used by the solver:
the bank angle makes the lift-weighted costate projection positive and
the lift modulus is the stationary point of the resulting concave
quadratic, valid while p_w + 1 > 0.  The adjoint equations below are the
analytic -dH/dx of that same Hamiltonian; a finite-difference oracle in
the test suite is the arbiter of every sign.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConcavityLost, MassDepleted, SingularChart
from .vehicle import CHART_TOL, VehicleParams, _full_rates

CONCAVITY_FLOOR = 1e-6


def full_hamiltonian(t, x, costate, control, lam1, p: VehicleParams) -> float:
    """H = <p, f> + (w-rate); zero along extremals at the free final time."""
    rates = _full_rates(t, x[0], x[1], x[2], x[3], x[4], x[5],
                        control[0], control[1], lam1, p, False)
    h = rates[3]  # cost multiplier -1 against f0 = -(w-rate)
    for i in range(6):
        h += float(costate[i]) * rates[i]
    return h


def extract_controls(x, costate, lam1, t, p: VehicleParams) -> tuple[float, float]:
    """Hamiltonian-maximizing (u, beta) in closed form.

    beta rotates the lift so the costate projection
    K = p_gamma cos(beta) + p_chi sin(beta)/cos(gamma) is maximal (and
    >= 0); u is then the stationary point of the concave quadratic.
    Raises ConcavityLost if p_w + 1 falls below the floor, which means
    the stationary point is no longer a maximum.
    """
    gamma = float(x[4])
    cg = math.cos(gamma)
    if abs(cg) < CHART_TOL:
        raise SingularChart(f"cos(gamma)={cg:.2e}")
    pw1 = float(costate[3]) + 1.0
    if pw1 <= CONCAVITY_FLOOR:
        raise ConcavityLost(f"p_w + 1 = {pw1:.3e} <= {CONCAVITY_FLOOR}")
    pg = float(costate[4])
    pc_over_cg = float(costate[5]) / cg
    beta = math.atan2(pc_over_cg, pg)
    K = pg * math.cos(beta) + pc_over_cg * math.sin(beta)

    v = math.exp(float(x[3]))
    cm = p.cm0 * math.exp(-(float(x[0]) - p.rT) / p.hr)
    lever = v * cm
    if lam1 != 0.0:
        f_t = p.ve * (p.q0 if t <= p.t_sw else 0.0)
        m = p.m0 - lam1 * p.q0 * min(t, p.t_sw)
        if m <= 0.0:
            raise MassDepleted(f"mass {m:.3f} kg <= 0 at t={t:g} s")
        lever += lam1 * p.alpha_max * f_t / (m * v)
    u = lever * K / (2.0 * p.eta * cm * v * pw1)
    return u, beta


def _full_adjoint_rates(t, r, L, l, w, gamma, chi,
                        pr, pL, pl, pw, pg, pc, u, beta, lam1, p):
    """Scalar core of -dH/dx; all six costate rates."""
    cg = math.cos(gamma)
    cl = math.cos(L)
    if abs(cg) < CHART_TOL or abs(cl) < CHART_TOL:
        raise SingularChart(f"cos(gamma)={cg:.2e}, cos(L)={cl:.2e}")
    v = math.exp(w)
    sg = math.sin(gamma)
    sc, cc = math.sin(chi), math.cos(chi)
    tl = math.tan(L)
    cb, sb = math.cos(beta), math.sin(beta)
    factor = math.exp(-(r - p.rT) / p.hr)
    cm = p.cm0 * factor
    d = p.d0 * factor
    u1c = u * cb
    u2c = u * sb
    uu = u * u
    P = pw + 1.0

    if lam1 != 0.0:
        f_t = p.ve * (p.q0 if t <= p.t_sw else 0.0)
        m = p.m0 - lam1 * p.q0 * min(t, p.t_sw)
        if m <= 0.0:
            raise MassDepleted(f"mass {m:.3f} kg <= 0 at t={t:g} s")
        fv = f_t / (m * v)
        G = p.g0 * (p.rT / r) ** 2
        gv = G / v
        A = p.alpha_max * u
    else:
        fv = gv = G = A = 0.0

    # dH/dr: 1/r wake terms, inverse-square gravity, 1/hr aero scaling
    dH_dr = (-pL * v * cg * cc / (r * r)
             - pl * v * cg * sc / (r * r * cl)
             + pg * (-v * cm * u1c / p.hr
                     + lam1 * (-(v / (r * r)) * cg + 2.0 * gv * cg / r))
             + pc * (-v * cm * u2c / (p.hr * cg)
                     - lam1 * (v / (r * r)) * cg * sc * tl)
             + P * (lam1 * 2.0 * gv * sg / r
                    + (d + p.eta * cm * uu) * v / p.hr))

    dH_dL = (pl * v * cg * sc * tl / (r * cl)
             + pc * lam1 * (v / r) * cg * sc / (cl * cl))

    # dH/dw: v-proportional terms keep sign, 1/v terms flip it
    dH_dw = (pr * v * sg
             + pL * (v / r) * cg * cc
             + pl * (v / r) * cg * sc / cl
             + pg * (v * cm * u1c
                     + lam1 * ((v / r) * cg - fv * A * cb + gv * cg))
             + pc * ((v * cm / cg) * u2c
                     + lam1 * ((v / r) * cg * sc * tl - fv * A * sb / cg))
             + P * (lam1 * (-fv + gv * sg) - (d + p.eta * cm * uu) * v))

    dH_dgamma = (pr * v * cg
                 - pL * (v / r) * sg * cc
                 - pl * (v / r) * sg * sc / cl
                 + pg * lam1 * (-(v / r) * sg + gv * sg)
                 + pc * ((v * cm * u2c) * sg / (cg * cg)
                         + lam1 * (-(v / r) * sg * sc * tl
                                   + fv * A * sb * sg / (cg * cg)))
                 - P * lam1 * gv * cg)

    dH_dchi = (-pL * (v / r) * cg * sc
               + pl * (v / r) * cg * cc / cl
               + pc * lam1 * (v / r) * cg * cc * tl)

    return (-dH_dr, -dH_dL, 0.0, -dH_dw, -dH_dgamma, -dH_dchi)


def full_adjoint(t, x, costate, control, lam1, p: VehicleParams) -> np.ndarray:
    """d/dt of (p_r, p_L, p_l, p_w, p_gamma, p_chi) = -dH/dx."""
    return np.array(_full_adjoint_rates(
        t, x[0], x[1], x[2], x[3], x[4], x[5],
        costate[0], costate[1], costate[2], costate[3], costate[4], costate[5],
        control[0], control[1], lam1, p))
