"""Reduced arc-length problem: lift-only steering through still air.

Dropping gravity, thrust and the planet-curvature speed coupling and
re-parameterizing by the curvilinear abscissa s leaves a 5-state system

    y = (r, L, l, gamma, chi)

    r' = sin(gamma)                  L' = cos(gamma) cos(chi) / r
    l' = cos(gamma) sin(chi) / (r cos(L))
    gamma' = c_m(r) u1               chi' = c_m(r) u2 / cos(gamma)

with in-plane / out-of-plane lift commands z = (u1, u2) and running cost
d + eta c_m (u1^2 + u2^2) (drag plus induced drag).  The maximized
Hamiltonian is concave quadratic in z, so the extremal control is
explicit, and the cost multiplier can be normalized to -1 whenever
cos(gamma) stays away from zero (no abnormal extremals).  This module
also provides a pointwise linearized-controllability determinant for the
zero-control reference flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularChart
from .vehicle import CHART_TOL, VehicleParams


def _chart(gamma: float, L: float) -> tuple[float, float]:
    cg = math.cos(gamma)
    cl = math.cos(L)
    if abs(cg) < CHART_TOL or abs(cl) < CHART_TOL:
        raise SingularChart(f"cos(gamma)={cg:.2e}, cos(L)={cl:.2e}")
    return cg, cl


def _simplified_rates(r, L, l, gamma, chi, u1, u2, p):
    """Scalar core of the reduced dynamics; returns a 5-tuple of rates."""
    cg, cl = _chart(gamma, L)
    sg = math.sin(gamma)
    sc, cc = math.sin(chi), math.cos(chi)
    cm = p.cm0 * math.exp(-(r - p.rT) / p.hr)
    return (sg, cg * cc / r, cg * sc / (r * cl), cm * u1, cm * u2 / cg)


def simplified_dynamics(y, z, p: VehicleParams) -> np.ndarray:
    """d/ds of (r, L, l, gamma, chi) under lift commands z = (u1, u2)."""
    return np.array(_simplified_rates(y[0], y[1], y[2], y[3], y[4], z[0], z[1], p))


def simplified_hamiltonian(y, costate, z, p: VehicleParams) -> float:
    """Maximized-form Hamiltonian with the cost multiplier fixed to -1."""
    r, L, _, gamma, chi = (float(v) for v in y)
    pr, pL, pl, pg, pc = (float(v) for v in costate)
    u1, u2 = float(z[0]), float(z[1])
    cg, cl = _chart(gamma, L)
    factor = math.exp(-(r - p.rT) / p.hr)
    cm = p.cm0 * factor
    d = p.d0 * factor
    return (pr * math.sin(gamma)
            + pL * cg * math.cos(chi) / r
            + pl * cg * math.sin(chi) / (r * cl)
            + pg * cm * u1
            + pc * cm * u2 / cg
            - (d + p.eta * cm * (u1 * u1 + u2 * u2)))


def extremal_control(costate, gamma: float, p: VehicleParams) -> tuple[float, float]:
    """Lift commands maximizing the Hamiltonian: the quadratic cost makes
    them linear in the angle costates."""
    cg = math.cos(gamma)
    if abs(cg) < CHART_TOL:
        raise SingularChart(f"cos(gamma)={cg:.2e}")
    return float(costate[3]) / (2.0 * p.eta), float(costate[4]) / (2.0 * p.eta * cg)


def _simplified_adjoint_rates(r, L, l, gamma, chi, pr, pL, pl, pg, pc, u1, u2, p):
    """Scalar core of -dH/dy for arbitrary (not necessarily extremal) z."""
    cg, cl = _chart(gamma, L)
    sg = math.sin(gamma)
    sc, cc = math.sin(chi), math.cos(chi)
    tl = math.tan(L)
    factor = math.exp(-(r - p.rT) / p.hr)
    cm = p.cm0 * factor
    d = p.d0 * factor
    # the 1/hr block collects every altitude-scaled aero term of H
    pr_dot = (pL * cg * cc / (r * r)
              + pl * cg * sc / (r * r * cl)
              + (pg * cm * u1 + pc * cm * u2 / cg
                 - (d + p.eta * cm * (u1 * u1 + u2 * u2))) / p.hr)
    pL_dot = -pl * cg * sc * tl / (r * cl)
    pl_dot = 0.0
    pg_dot = (-pr * cg
              + pL * sg * cc / r
              + pl * sg * sc / (r * cl)
              - pc * cm * u2 * sg / (cg * cg))
    pc_dot = pL * cg * sc / r - pl * cg * cc / (r * cl)
    return (pr_dot, pL_dot, pl_dot, pg_dot, pc_dot)


def simplified_adjoint(y, costate, z, p: VehicleParams) -> np.ndarray:
    """d/ds of the costate (p_r, p_L, p_l, p_gamma, p_chi) = -dH/dy."""
    return np.array(_simplified_adjoint_rates(
        y[0], y[1], y[2], y[3], y[4],
        costate[0], costate[1], costate[2], costate[3], costate[4],
        z[0], z[1], p))


@dataclass(frozen=True)
class NormalityReport:
    """Outcome of the cos(gamma) != 0 check licensing the p0 = -1 scaling."""

    ok: bool
    witness: float      # min |cos(gamma)| over the grid
    fraction: float     # fraction of nodes with |cos(gamma)| > tol


def normality_certificate(traj, tol: float = 1e-6, full_measure: float = 0.99) -> NormalityReport:
    """Check |cos(gamma)| > tol on (almost) every node of a trajectory.

    Accepts a Trajectory or a plain array of gamma samples.  Isolated
    crossings are tolerated up to the full_measure fraction.
    """
    gamma = np.asarray(getattr(traj, "gamma", traj), dtype=float)
    cg = np.abs(np.cos(gamma))
    frac = float(np.mean(cg > tol))
    return NormalityReport(ok=frac >= full_measure, witness=float(cg.min()), fraction=frac)


def _linearized_A(r, L, gamma, chi):
    """State matrix of the reduced dynamics linearized at zero control."""
    cg, cl = math.cos(gamma), math.cos(L)
    sg = math.sin(gamma)
    sc, cc = math.sin(chi), math.cos(chi)
    tl = math.tan(L)
    A = np.zeros((5, 5))
    A[0, 3] = cg
    A[1, 0] = -cg * cc / r ** 2
    A[1, 3] = -sg * cc / r
    A[1, 4] = -cg * sc / r
    A[2, 0] = -cg * sc / (r ** 2 * cl)
    A[2, 1] = cg * sc * tl / (r * cl)
    A[2, 3] = -sg * sc / (r * cl)
    A[2, 4] = cg * cc / (r * cl)
    return A


def controllability_certificate(y, p: VehicleParams) -> float:
    """Determinant certifying linearized controllability at a point.

    Along the zero-control reference flow (gamma, chi constant,
    r' = sin gamma, L' = cos gamma cos chi / r) the input-matrix sequence
    B0 = B, B_{i+1} = A B_i - B_i' spans the state space; the determinant
    of (B0 w1, B0 w2, B1 w1, B1 w2, B2 w1) is returned.  It equals
    c_m(r)^5 / (r^3 cos L), nonzero on the whole chart.
    """
    r, L, _, gamma, chi = (float(v) for v in y)
    cg, cl = _chart(gamma, L)
    sg = math.sin(gamma)
    sc, cc = math.sin(chi), math.cos(chi)
    tl = math.tan(L)
    cm = p.cm0 * math.exp(-(r - p.rT) / p.hr)
    # s-derivatives of c_m along the reference flow (only r varies in c_m)
    cm_p = -cm * sg / p.hr
    cm_pp = cm * sg * sg / (p.hr * p.hr)

    def b_matrix(c):
        B = np.zeros((5, 2))
        B[3, 0] = c
        B[4, 1] = c / cg
        return B

    A = _linearized_A(r, L, gamma, chi)
    B0 = b_matrix(cm)
    B0p = b_matrix(cm_p)
    B0pp = b_matrix(cm_pp)

    # directional derivative of A along the reference flow; only the
    # gamma / chi columns matter because B0 is supported there
    dA = np.zeros((5, 5))
    dA[1, 3] = sg * sg * cc / r ** 2
    dA[2, 3] = sg * sg * sc / (r ** 2 * cl) - sg * cg * cc * sc * tl / (r ** 2 * cl)
    dA[1, 4] = sg * cg * sc / r ** 2
    dA[2, 4] = -sg * cg * cc / (r ** 2 * cl) + cg * cg * cc * cc * tl / (r ** 2 * cl)

    B1 = A @ B0 - B0p
    B1p = dA @ B0 + A @ B0p - B0pp
    B2 = A @ B1 - B1p

    M = np.column_stack([B0[:, 0], B0[:, 1], B1[:, 0], B1[:, 1], B2[:, 0]])
    return float(np.linalg.det(M))
