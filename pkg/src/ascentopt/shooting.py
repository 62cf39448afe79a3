"""Shooting functions and a damped Newton solver with FD Jacobian.

Both boundary-value problems are reduced to root finding on the map from
unknown initial costates (plus the free horizon) to scaled terminal
residuals:

* reduced problem, unknowns (p_r, p_L, p_l, p_gamma, p_chi, s_f),
  residuals (terminal-state mismatch, H(0)) -- the system is autonomous,
  so the free-horizon condition H = 0 is imposed at s = 0 where it is
  cheapest;
* morphing problem, unknowns (6 costates, t_f), residuals
  (terminal-state mismatch, p_w(t_f), H(t_f)).

Residual scaling: lengths by the planet radius, angles by one, the
Hamiltonian by a magnitude estimate of the running cost at the initial
state, p_w by one.  Raw SI units mix meters and radians badly enough to
stall Newton otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConcavityLost, InvalidHorizon, JacobianSingular,
                     LineSearchStalled, MassDepleted, MaxIterations,
                     ModelError, SingularChart)
from .full_ocp import CONCAVITY_FLOOR, extract_controls, full_hamiltonian
from .integrator import GridSpec, integrate
from .simplified import extremal_control, simplified_hamiltonian
from .trajectory import Trajectory
from .vehicle import CHART_TOL, VehicleParams, drag_coef, gravity, max_curvature


# ---------------------------------------------------------------------------
# Newton solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NewtonOpts:
    tol: float = 1e-8            # convergence on the max-norm of the residual
    max_iter: int = 50
    max_halvings: int = 8
    fd_rel: float = 1e-6         # per-component FD step: max(fd_min, fd_rel*|x|)
    fd_min: float = 1e-6
    central: bool = False        # central-difference Jacobian (diagnostics)
    watchdog: int = 2            # non-monotone full steps allowed on stall


@dataclass
class NewtonResult:
    x: np.ndarray
    residual: np.ndarray
    norm: float                  # max-norm at the solution
    iterations: int
    history: list = field(default_factory=list)

    def history_json(self) -> list:
        return [dict(h) for h in self.history]


def _fd_jacobian(fn, x, r0, opts: NewtonOpts) -> np.ndarray:
    n = x.size
    J = np.empty((r0.size, n))
    for j in range(n):
        h = max(opts.fd_min, opts.fd_rel * abs(float(x[j])))
        # a perturbed flow may blow up where the base point is fine;
        # shrink the step a few times before giving up on the column
        for attempt in range(4):
            xp = x.copy()
            xp[j] += h
            try:
                if opts.central:
                    xm = x.copy()
                    xm[j] -= h
                    J[:, j] = (fn(xp) - fn(xm)) / (2.0 * h)
                else:
                    J[:, j] = (fn(xp) - r0) / h
                break
            except ModelError:
                if attempt == 3:
                    raise JacobianSingular(
                        f"column {j} not differentiable (step {h:.1e})",
                        iterate=x)
                h /= 16.0
    return J


def horizon_step_limit(frac: float = 0.5):
    """Direction-preserving trust cap on the last unknown (the horizon).

    A full Newton step from a rough seed can collapse the free horizon to
    a fraction of itself and strand the iteration in a useless basin;
    scaling the whole step so the horizon moves at most frac of its
    current value keeps the direction and leaves the quadratic tail
    untouched (the cap goes inactive near the solution).
    """

    def limit(x, dx):
        cap = frac * abs(float(x[-1]))
        if cap > 0.0 and abs(float(dx[-1])) > cap:
            return dx * (cap / abs(float(dx[-1])))
        return dx

    return limit


def newton_solve(fn, x0, opts: NewtonOpts | None = None,
                 step_limit=None, x_scale=None) -> NewtonResult:
    """Damped Newton on fn(x) = 0 with finite-difference Jacobian.

    Backtracks by halving (up to max_halvings) on the 2-norm of the
    residual; model errors raised during a trial step count as a failed
    trial.  step_limit, when given, maps (x, dx) in caller units to a
    safeguarded step before the line search.  x_scale, when given, makes
    the iteration (and its FD steps) run on x/x_scale; shooting unknowns
    span many orders of magnitude and the columns of an unscaled Jacobian
    lose the cancellation accuracy the corrector needs.  Raises
    JacobianSingular / LineSearchStalled / MaxIterations with the last
    iterate and the per-iteration history attached.
    """
    opts = opts or NewtonOpts()
    sigma = np.ones(np.size(x0)) if x_scale is None else np.asarray(x_scale, dtype=float)
    if np.any(sigma <= 0.0) or not np.all(np.isfinite(sigma)):
        raise ValueError("x_scale must be positive and finite")

    def g(xi):
        return np.asarray(fn(xi * sigma), dtype=float)

    def limited(xi, dxi):
        if step_limit is None:
            return dxi
        return np.asarray(step_limit(xi * sigma, dxi * sigma), dtype=float) / sigma

    xi = np.array(x0, dtype=float) / sigma
    r = g(xi)
    if r.size != xi.size:
        raise ValueError(f"fn must be square: {xi.size} unknowns, {r.size} residuals")
    norm2 = float(np.linalg.norm(r))
    history: list[dict] = []
    watchdog = opts.watchdog
    for it in range(opts.max_iter):
        norm_inf = float(np.max(np.abs(r)))
        if norm_inf <= opts.tol:
            return NewtonResult(x=xi * sigma, residual=r, norm=norm_inf,
                                iterations=it, history=history)
        try:
            J = _fd_jacobian(g, xi, r, opts)
            dxi = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise JacobianSingular(f"Jacobian factorization failed: {exc}",
                                   iterate=xi * sigma, history=history) from exc
        if not np.all(np.isfinite(dxi)):
            raise JacobianSingular("non-finite Newton step",
                                   iterate=xi * sigma, history=history)
        dxi = limited(xi, dxi)
        lam = 1.0
        accepted = False
        n_full = math.inf
        r_full = None
        for k in range(opts.max_halvings + 1):
            xi_try = xi + lam * dxi
            try:
                r_try = g(xi_try)
                n_try = float(np.linalg.norm(r_try))
            except ModelError:
                n_try = math.inf
            if k == 0:
                n_full, r_full = n_try, r_try if n_try < math.inf else None
            if n_try < norm2:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            # watchdog escape: a curved residual valley can reject every
            # damped step while the undamped Newton path cuts straight
            # through a transient residual hump; allow a bounded number of
            # non-monotone full steps before declaring a stall
            if watchdog > 0 and r_full is not None and math.isfinite(n_full):
                watchdog -= 1
                lam = 1.0
                xi_try, r_try, n_try = xi + dxi, r_full, n_full
            else:
                raise LineSearchStalled(
                    f"no residual decrease after {opts.max_halvings} halvings "
                    f"(norm {norm2:.3e})", iterate=xi * sigma, history=history)
        xi, r, norm2 = xi_try, r_try, n_try
        history.append({
            "iteration": it + 1,
            "residual_norm": norm2,
            "step_norm": float(np.linalg.norm(lam * dxi * sigma)),
            "damping": lam,
        })
    norm_inf = float(np.max(np.abs(r)))
    if norm_inf <= opts.tol:
        return NewtonResult(x=xi * sigma, residual=r, norm=norm_inf,
                            iterations=opts.max_iter, history=history)
    raise MaxIterations(f"no convergence in {opts.max_iter} iterations "
                        f"(residual {norm_inf:.3e})", iterate=xi * sigma, history=history)


# ---------------------------------------------------------------------------
# Residual scales
# ---------------------------------------------------------------------------

def simplified_residual_scale(y0, p: VehicleParams) -> np.ndarray:
    """(5 state + 1 Hamiltonian) scaling; H scaled by the drag density."""
    h_scale = drag_coef(float(y0[0]), p)
    return np.array([p.rT, 1.0, 1.0, 1.0, 1.0, h_scale])


def full_residual_scale(y0, v0: float, p: VehicleParams) -> np.ndarray:
    """(5 state + p_w + H) scaling; H by a sum of rate magnitudes."""
    r0 = float(y0[0])
    h_scale = (drag_coef(r0, p) * v0 + gravity(r0, p) / v0
               + p.ve * p.q0 / (p.m0 * v0))
    return np.array([p.rT, 1.0, 1.0, 1.0, 1.0, 1.0, h_scale])


def simplified_unknown_scale(y0, s_ref: float, p: VehicleParams) -> np.ndarray:
    """Natural magnitudes of the reduced-problem unknowns.

    Each costate is sized so that (costate * conjugate rate) matches the
    running-cost density: p_r ~ Hs, p_L ~ Hs r, p_gamma ~ Hs / c_m.
    """
    r0 = float(y0[0])
    hs = drag_coef(r0, p)
    cm = max_curvature(r0, p)
    return np.array([hs, hs * r0, hs * r0, hs / cm, hs / cm, s_ref])


def full_unknown_scale(y0, v0: float, t_ref: float, p: VehicleParams) -> np.ndarray:
    """Natural magnitudes of the morphing-problem unknowns."""
    r0 = float(y0[0])
    hs = float(full_residual_scale(y0, v0, p)[6])
    cm = max_curvature(r0, p)
    return np.array([hs / v0, hs * r0 / v0, hs * r0 / v0, 1.0,
                     hs / (v0 * cm), hs / (v0 * cm), t_ref])


# ---------------------------------------------------------------------------
# Extremal flows (state + costate under the maximizing control)
# ---------------------------------------------------------------------------

def _simplified_flow_rates(p: VehicleParams):
    """Rate function of the coupled 10-dim reduced extremal system.

    Fused implementation of dynamics + adjoint + maximizing control; the
    per-piece public functions are the tested reference, and the test
    suite pins this composition against them.
    """
    two_eta = 2.0 * p.eta
    eta, hr, cm0, d0, rT = p.eta, p.hr, p.cm0, p.d0, p.rT
    cos, sin, tan, exp = math.cos, math.sin, math.tan, math.exp

    def rates(s, Y):
        r, L, l, gamma, chi, pr, pL, pl, pg, pc = Y
        cg = cos(gamma)
        cl = cos(L)
        if abs(cg) < CHART_TOL or abs(cl) < CHART_TOL:
            raise SingularChart(f"cos(gamma)={cg:.2e}, cos(L)={cl:.2e}")
        sg = sin(gamma)
        sc, cc = sin(chi), cos(chi)
        tl = tan(L)
        factor = exp(-(r - rT) / hr)
        cm = cm0 * factor
        d = d0 * factor
        u1 = pg / two_eta
        u2 = pc / (two_eta * cg)
        L_rate = cg * cc / r
        l_rate = cg * sc / (r * cl)
        return (
            sg, L_rate, l_rate, cm * u1, cm * u2 / cg,
            pL * L_rate / r + pl * l_rate / r
            + (pg * cm * u1 + pc * cm * u2 / cg
               - (d + eta * cm * (u1 * u1 + u2 * u2))) / hr,
            -pl * cg * sc * tl / (r * cl),
            0.0,
            -pr * cg + pL * sg * cc / r + pl * sg * sc / (r * cl)
            - pc * cm * u2 * sg / (cg * cg),
            pL * cg * sc / r - pl * cg * cc / (r * cl),
        )

    return rates


def integrate_simplified_extremal(y0, costate0, s_f: float, p: VehicleParams,
                                  n: int = 400) -> Trajectory:
    """Dense reduced extremal from initial state/costate over [0, s_f]."""
    if not (s_f > 0.0 and math.isfinite(s_f)):
        raise InvalidHorizon(f"s_f = {s_f!r}")
    grid = GridSpec(n=n, span=(0.0, float(s_f)))
    Y0 = [*map(float, y0), *map(float, costate0)]
    s, Y = integrate(_simplified_flow_rates(p), Y0, grid)
    states, costates = Y[:, :5], Y[:, 5:]
    u1 = costates[:, 3] / (2.0 * p.eta)
    u2 = costates[:, 4] / (2.0 * p.eta * np.cos(states[:, 3]))
    u = np.hypot(u1, u2)
    beta = np.arctan2(u2, u1)
    H = np.array([simplified_hamiltonian(states[i], costates[i],
                                         (u1[i], u2[i]), p)
                  for i in range(s.size)])
    return Trajectory(kind="simplified", grid=s, states=states,
                      costates=costates, u=u, beta=beta, hamiltonian=H)


def make_simplified_shooting(y0, target, p: VehicleParams, n: int = 400):
    """Shooting residual for the reduced problem.

    unknowns = (p_r, p_L, p_l, p_gamma, p_chi, s_f); residual = scaled
    (terminal state - target, H(0)).
    """
    y0 = np.asarray(y0, dtype=float)
    target = np.asarray(target, dtype=float)
    scale = simplified_residual_scale(y0, p)
    rates = _simplified_flow_rates(p)

    def fn(unknowns):
        costate0 = unknowns[:5]
        s_f = float(unknowns[5])
        if not (s_f > 0.0 and math.isfinite(s_f)):
            raise InvalidHorizon(f"s_f = {s_f!r}")
        z0 = extremal_control(costate0, y0[3], p)
        h0 = simplified_hamiltonian(y0, costate0, z0, p)
        grid = GridSpec(n=n, span=(0.0, s_f))
        Y0 = [*y0, *map(float, costate0)]
        _, Y = integrate(rates, Y0, grid)
        res = np.empty(6)
        res[:5] = Y[-1, :5] - target
        res[5] = h0
        return res / scale

    return fn


def _full_flow_rates(lam1: float, p: VehicleParams):
    """Rate function of the coupled 12-dim morphing extremal system.

    Fused implementation of control extraction + dynamics + adjoint; the
    per-piece public functions are the tested reference, and the test
    suite pins this composition against them.
    """
    eta, hr, cm0, d0, rT = p.eta, p.hr, p.cm0, p.d0, p.rT
    alpha_max, ve, q0, t_sw, m0, g0 = p.alpha_max, p.ve, p.q0, p.t_sw, p.m0, p.g0
    two_eta = 2.0 * eta
    cos, sin, tan, exp, atan2 = math.cos, math.sin, math.tan, math.exp, math.atan2

    def rates(t, Y):
        r, L, l, w, gamma, chi, pr, pL, pl, pw, pg, pc = Y
        cg = cos(gamma)
        cl = cos(L)
        if abs(cg) < CHART_TOL or abs(cl) < CHART_TOL:
            raise SingularChart(f"cos(gamma)={cg:.2e}, cos(L)={cl:.2e}")
        P = pw + 1.0
        if P <= CONCAVITY_FLOOR:
            raise ConcavityLost(f"p_w + 1 = {P:.3e} <= {CONCAVITY_FLOOR}")
        v = exp(w)
        sg = sin(gamma)
        sc, cc = sin(chi), cos(chi)
        tl = tan(L)
        factor = exp(-(r - rT) / hr)
        cm = cm0 * factor
        d = d0 * factor

        if lam1 != 0.0:
            f_t = ve * (q0 if t <= t_sw else 0.0)
            m = m0 - lam1 * q0 * (t if t < t_sw else t_sw)
            if m <= 0.0:
                raise MassDepleted(f"mass {m:.3f} kg <= 0 at t={t:g} s")
            fv = f_t / (m * v)
            G = g0 * (rT / r) ** 2
            gv = G / v
        else:
            fv = gv = 0.0

        # maximizing control: bank rotates the lift-weighted costate
        # projection positive, lift is the concave-quadratic stationary pt
        pc_cg = pc / cg
        beta = atan2(pc_cg, pg)
        cb, sb = cos(beta), sin(beta)
        K = pg * cb + pc_cg * sb
        lever = v * cm + lam1 * alpha_max * fv
        u = lever * K / (two_eta * cm * v * P)
        A = alpha_max * u
        u1c = u * cb
        u2c = u * sb
        uu = u * u

        vr = v / r
        drag_v = (d + eta * cm * uu) * v
        L_rate = vr * cg * cc
        l_rate = vr * cg * sc / cl
        if lam1 != 0.0:
            w_rate = lam1 * (fv - gv * sg) - drag_v
            g_rate = v * cm * u1c + lam1 * (vr * cg + fv * A * cb - gv * cg)
            c_rate = (v * cm / cg) * u2c + lam1 * (vr * cg * sc * tl + fv * A * sb / cg)
            dH_dr = (-pL * L_rate / r
                     - pl * l_rate / r
                     + pg * (-v * cm * u1c / hr
                             + lam1 * (-vr * cg / r + 2.0 * gv * cg / r))
                     + pc * (-v * cm * u2c / (hr * cg)
                             - lam1 * vr * cg * sc * tl / r)
                     + P * (lam1 * 2.0 * gv * sg / r + drag_v / hr))
            dH_dL = (pl * l_rate * tl
                     + pc * lam1 * vr * cg * sc / (cl * cl))
            dH_dw = (pr * v * sg
                     + pL * L_rate
                     + pl * l_rate
                     + pg * (v * cm * u1c
                             + lam1 * (vr * cg - fv * A * cb + gv * cg))
                     + pc * ((v * cm / cg) * u2c
                             + lam1 * (vr * cg * sc * tl - fv * A * sb / cg))
                     + P * (lam1 * (-fv + gv * sg) - drag_v))
            dH_dgamma = (pr * v * cg
                         - pL * vr * sg * cc
                         - pl * vr * sg * sc / cl
                         + pg * lam1 * (-vr * sg + gv * sg)
                         + pc * ((v * cm * u2c) * sg / (cg * cg)
                                 + lam1 * (-vr * sg * sc * tl
                                           + fv * A * sb * sg / (cg * cg)))
                         - P * lam1 * gv * cg)
            dH_dchi = (-pL * vr * cg * sc
                       + pl * vr * cg * cc / cl
                       + pc * lam1 * vr * cg * cc * tl)
        else:
            w_rate = -drag_v
            g_rate = v * cm * u1c
            c_rate = (v * cm / cg) * u2c
            dH_dr = (-pL * L_rate / r
                     - pl * l_rate / r
                     - pg * v * cm * u1c / hr
                     - pc * v * cm * u2c / (hr * cg)
                     + P * drag_v / hr)
            dH_dL = pl * l_rate * tl
            dH_dw = (pr * v * sg + pL * L_rate + pl * l_rate
                     + pg * v * cm * u1c + pc * (v * cm / cg) * u2c
                     - P * drag_v)
            dH_dgamma = (pr * v * cg
                         - pL * vr * sg * cc
                         - pl * vr * sg * sc / cl
                         + pc * (v * cm * u2c) * sg / (cg * cg))
            dH_dchi = -pL * vr * cg * sc + pl * vr * cg * cc / cl

        return (v * sg, L_rate, l_rate, w_rate, g_rate, c_rate,
                -dH_dr, -dH_dL, 0.0, -dH_dw, -dH_dgamma, -dH_dchi)

    return rates


def _full_grid(t_f: float, p: VehicleParams, n: int) -> GridSpec:
    bps = (p.t_sw,) if 0.0 < p.t_sw < t_f else ()
    return GridSpec(n=n, span=(0.0, float(t_f)), breakpoints=bps)


def integrate_full_extremal(x0, costate0, t_f: float, lam1: float,
                            p: VehicleParams, n: int = 400) -> Trajectory:
    """Dense morphing extremal from state/costate over [0, t_f]."""
    if not (t_f > 0.0 and math.isfinite(t_f)):
        raise InvalidHorizon(f"t_f = {t_f!r}")
    grid = _full_grid(t_f, p, n)
    Y0 = [*map(float, x0), *map(float, costate0)]
    t, Y = integrate(_full_flow_rates(lam1, p), Y0, grid)
    states, costates = Y[:, :6], Y[:, 6:]
    u = np.empty(t.size)
    beta = np.empty(t.size)
    H = np.empty(t.size)
    for i in range(t.size):
        u[i], beta[i] = extract_controls(states[i], costates[i], lam1, t[i], p)
        H[i] = full_hamiltonian(t[i], states[i], costates[i],
                                (u[i], beta[i]), lam1, p)
    return Trajectory(kind="full", grid=t, states=states, costates=costates,
                      u=u, beta=beta, hamiltonian=H,
                      meta={"lam1": lam1})


def make_full_shooting(x0, target, lam1: float, p: VehicleParams,
                       n: int = 400, v0: float | None = None):
    """Shooting residual for the morphing problem at fixed lam1.

    x0 is the 6-state (r, L, l, w, gamma, chi); target the desired
    terminal (r, L, l, gamma, chi).  unknowns = (6 costates, t_f);
    residual = scaled (terminal mismatch, p_w(t_f), H(t_f)).
    """
    x0 = np.asarray(x0, dtype=float)
    target = np.asarray(target, dtype=float)
    v_ref = math.exp(x0[3]) if v0 is None else v0
    scale = full_residual_scale(x0, v_ref, p)
    rates = _full_flow_rates(lam1, p)

    def fn(unknowns):
        costate0 = unknowns[:6]
        t_f = float(unknowns[6])
        if not (t_f > 0.0 and math.isfinite(t_f)):
            raise InvalidHorizon(f"t_f = {t_f!r}")
        grid = _full_grid(t_f, p, n)
        Y0 = [*x0, *map(float, costate0)]
        _, Y = integrate(rates, Y0, grid)
        xf, pf = Y[-1, :6], Y[-1, 6:]
        uf = extract_controls(xf, pf, lam1, t_f, p)
        res = np.empty(7)
        res[0] = xf[0] - target[0]
        res[1] = xf[1] - target[1]
        res[2] = xf[2] - target[2]
        res[3] = xf[4] - target[3]
        res[4] = xf[5] - target[4]
        res[5] = pf[3]
        res[6] = full_hamiltonian(t_f, xf, pf, uf, lam1, p)
        return res / scale

    return fn
