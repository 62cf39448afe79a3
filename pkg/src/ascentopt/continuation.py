"""Three-stage solve: guidance-seeded shooting, then a two-parameter walk.

Stage 1 solves the reduced arc-length problem toward a reachable
intermediate point (the endpoint of unsteered coasting flight, or the true
target when the scenario says the seed is good enough), starting from the
analytical guidance guess, and converts the solution into time-domain
unknowns (the w-costate starts at zero and stays there while the morphing
parameter is off).

Stage 2 walks lam1 from 0 to 1, morphing drag-only coasting into the full
powered dynamics with the target held fixed.  Stage 3 walks lam2 from 0
to 1, sliding the target from the intermediate point to the requested
one.  Both stages reuse the previous solution as predictor and adapt the
step: grow after success, halve after a failed corrector, stall out below
a floor.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import AscentError, ContinuationStalled, SolverFailure, StepOneDiverged
from .guidance import assemble_guess, ecef, los_from
from .integrator import integrate
from .shooting import (NewtonOpts, full_residual_scale, full_unknown_scale,
                       horizon_step_limit, integrate_full_extremal,
                       make_full_shooting, make_simplified_shooting,
                       newton_solve, simplified_unknown_scale,
                       _full_grid, _full_flow_rates, _simplified_flow_rates)
from .scenario import Scenario
from .trajectory import Trajectory
from .vehicle import VehicleParams, _full_rates


@dataclass(frozen=True)
class ContinuationOpts:
    initial_step: float = 0.1
    min_step: float = 1e-4
    max_step: float = 0.5
    growth: float = 1.5
    shrink: float = 0.5
    n_steps: int = 400                  # integration steps per shot
    predictor: str = "secant"           # "secant" | "zero" warm start
    newton: NewtonOpts = field(default_factory=NewtonOpts)

    def __post_init__(self):
        if not (0.0 < self.min_step <= self.initial_step <= self.max_step <= 1.0):
            raise ValueError("need 0 < min_step <= initial_step <= max_step <= 1")
        if self.predictor not in ("secant", "zero"):
            raise ValueError("predictor must be 'secant' or 'zero'")


def resolve_opts(scenario: Scenario, opts: ContinuationOpts | None = None,
                 **overrides) -> ContinuationOpts:
    """Apply scenario solver overrides (then call-site ones) to defaults."""
    base = opts or ContinuationOpts()
    merged = {**scenario.solver, **overrides}
    newton_keys = {f.name for f in dataclasses.fields(NewtonOpts)}
    newton_over = {k: merged.pop(k) for k in list(merged) if k in newton_keys}
    if newton_over:
        merged["newton"] = dataclasses.replace(base.newton, **newton_over)
    return dataclasses.replace(base, **merged) if merged else base


@dataclass
class StageRecord:
    stage: str                # "step1" | "lam1" | "lam2"
    lam1: float
    lam2: float
    step: float
    accepted: bool
    newton_iterations: int
    residual_norm: float
    wall_s: float
    newton_history: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class HomotopyState:
    lam1: float
    lam2: float
    unknowns: np.ndarray              # (p_r..p_chi, t_f), 7 entries
    target_base: np.ndarray           # intermediate terminal point (5,)
    target_final: np.ndarray          # requested terminal point (5,)
    residual_norm: float
    history: list[StageRecord] = field(default_factory=list)

    def target_at(self, lam2: float) -> np.ndarray:
        return self.target_base + lam2 * (self.target_final - self.target_base)

    def corrector_count(self, stage: str) -> int:
        return sum(1 for rec in self.history if rec.stage == stage and rec.accepted)


@dataclass
class OptimalSolution:
    scenario: Scenario
    unknowns: np.ndarray
    t_f: float
    v_tf: float
    trajectory: Trajectory
    residual_norm: float
    history: list[StageRecord]
    wall_s: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def corrector_counts(self) -> dict:
        counts = {"lam1": 0, "lam2": 0}
        for rec in self.history:
            if rec.stage in counts and rec.accepted:
                counts[rec.stage] += 1
        return counts

    def cost(self) -> float:
        """Running cost along the solution (trapezoid on the dense grid)."""
        tr = self.trajectory
        # f0 = -(w-rate); integrate dw via the sampled states instead of
        # re-deriving rates: cost = w(0) - w(t_f) exactly for this problem
        return float(tr.states[0, 3] - tr.states[-1, 3])

    def report(self) -> dict:
        counts = self.corrector_counts
        return {
            "scenario": self.scenario.name,
            "shortcut_target": self.scenario.shortcut_target,
            "m0_kg": self.diagnostics.get("m0_kg"),
            "n_steps": self.diagnostics.get("n_steps"),
            "t_f_s": self.t_f,
            "v_tf_mps": self.v_tf,
            "cost": self.cost(),
            "residual_norm": self.residual_norm,
            "lam1_solves": counts["lam1"],
            "lam2_solves": counts["lam2"],
            "wall_s": self.wall_s,
            "stages": [rec.as_dict() for rec in self.history],
        }


def coast_endpoint(scenario: Scenario, p: VehicleParams, t_f: float,
                   n: int = 400) -> np.ndarray:
    """Terminal (r, L, l, gamma, chi) of unsteered coasting flight."""
    grid = _full_grid(t_f, p, n)

    def rates(t, x):
        return _full_rates(t, x[0], x[1], x[2], x[3], x[4], x[5],
                           0.0, 0.0, 0.0, p, False)

    _, X = integrate(rates, scenario.x0_full(), grid)
    xf = X[-1]
    return np.array([xf[0], xf[1], xf[2], xf[4], xf[5]])


def default_tf_guess(scenario: Scenario, p: VehicleParams) -> float:
    """Horizon guess for the unsteered stage-1 flight.

    Initial range over initial speed is the natural time scale, but a
    steep initial path angle would march the coast out of the altitude
    band where the frozen-coefficient guidance approximations hold, so
    the guess is capped to keep the altitude excursion within one scale
    height.
    """
    r0, L0, l0, gamma0, _ = scenario.y0
    rf, Lf, lf, _, _ = scenario.yf
    geom = los_from(ecef(r0, L0, l0), ecef(rf, Lf, lf))
    t_range = geom.range_m / scenario.v0
    sg = abs(math.sin(gamma0))
    if sg > 1e-9:
        t_range = min(t_range, p.hr / (scenario.v0 * sg))
    return t_range


def _convert_to_time_domain(y0, v0, costate0, s_f, p, n):
    """Reparameterize a reduced solution by time.

    Augments the reduced extremal flow with dw/ds = -(d + eta c_m |z|^2)
    and dt/ds = exp(-w); returns (full costate with p_w = 0, t_f).
    """
    base = _simplified_flow_rates(p)

    def rates(s, Y):
        core = base(s, Y[:10])
        u1 = Y[8] / (2.0 * p.eta)
        u2 = Y[9] / (2.0 * p.eta * math.cos(Y[3]))
        factor = math.exp(-(Y[0] - p.rT) / p.hr)
        dw = -(p.d0 * factor + p.eta * p.cm0 * factor * (u1 * u1 + u2 * u2))
        return (*core, dw, math.exp(-Y[10]))

    from .integrator import GridSpec
    Y0 = [*map(float, y0), *map(float, costate0), math.log(v0), 0.0]
    _, Y = integrate(rates, Y0, GridSpec(n=n, span=(0.0, float(s_f))))
    t_f = float(Y[-1, 11])
    costate_full = np.array([costate0[0], costate0[1], costate0[2],
                             0.0, costate0[3], costate0[4]])
    return costate_full, t_f


def step_one(scenario: Scenario, p: VehicleParams,
             opts: ContinuationOpts) -> tuple[HomotopyState, dict]:
    """Seeded solve of the reduced problem, converted and re-polished at
    lam1 = 0 so the continuation starts from a converged point."""
    t0 = time.perf_counter()
    y0 = scenario.y0_array()
    yf = scenario.yf_array()
    tf_guess = scenario.tf_guess or default_tf_guess(scenario, p)
    try:
        if scenario.shortcut_target:
            target = yf.copy()
        else:
            target = coast_endpoint(scenario, p, tf_guess, opts.n_steps)

        guess = assemble_guess(y0, scenario.v0, target, p)
        fn = make_simplified_shooting(y0, target, p, opts.n_steps)
        seed = np.array([*guess.costate0, guess.s_f])
        guess_residual = float(np.max(np.abs(fn(seed))))
        simp = newton_solve(fn, seed, opts.newton,
                            step_limit=horizon_step_limit(),
                            x_scale=simplified_unknown_scale(y0, guess.s_f, p))

        costate_full, t_f = _convert_to_time_domain(
            y0, scenario.v0, simp.x[:5], simp.x[5], p, opts.n_steps)
        full_fn = make_full_shooting(scenario.x0_full(), target, 0.0, p,
                                     opts.n_steps, v0=scenario.v0)
        seed_full = np.array([*costate_full, t_f])
        conversion_residual = float(np.max(np.abs(full_fn(seed_full))))
        polished = newton_solve(full_fn, seed_full, opts.newton,
                                step_limit=horizon_step_limit(),
                                x_scale=full_unknown_scale(y0, scenario.v0, t_f, p))
    except AscentError as exc:
        raise StepOneDiverged(
            f"stage-1 solve failed for {scenario.name}: {exc}",
            history=getattr(exc, "history", [])) from exc

    wall = time.perf_counter() - t0
    record = StageRecord(stage="step1", lam1=0.0, lam2=0.0, step=0.0,
                         accepted=True,
                         newton_iterations=simp.iterations + polished.iterations,
                         residual_norm=polished.norm, wall_s=wall,
                         newton_history=simp.history_json() + polished.history_json())
    hs = HomotopyState(lam1=0.0, lam2=0.0, unknowns=polished.x,
                       target_base=target, target_final=yf,
                       residual_norm=polished.norm, history=[record])
    extras = {
        "guess": guess,
        "guess_residual": guess_residual,
        "conversion_residual": conversion_residual,
        "simplified_solution": simp,
        "tf_guess": tf_guess,
    }
    return hs, extras


def _walk(hs: HomotopyState, scenario: Scenario, p: VehicleParams,
          opts: ContinuationOpts, stage: str) -> HomotopyState:
    """Adaptive continuation in one parameter; mutates and returns hs."""
    x0_full = scenario.x0_full()
    lam = hs.lam1 if stage == "lam1" else hs.lam2
    step = opts.initial_step
    prev: tuple[float, np.ndarray] | None = None   # last accepted (lam, unknowns)
    while lam < 1.0:
        trial = min(1.0, lam + step)
        if stage == "lam1":
            lam1, lam2 = trial, hs.lam2
        else:
            lam1, lam2 = hs.lam1, trial
        fn = make_full_shooting(x0_full, hs.target_at(lam2), lam1, p,
                                opts.n_steps, v0=scenario.v0)
        seed = hs.unknowns
        if opts.predictor == "secant" and prev is not None and lam > prev[0]:
            # linear extrapolation of the solution branch in the parameter
            seed = hs.unknowns + (trial - lam) / (lam - prev[0]) * (hs.unknowns - prev[1])
        t0 = time.perf_counter()
        try:
            result = newton_solve(fn, seed, opts.newton,
                                  step_limit=horizon_step_limit(),
                                  x_scale=full_unknown_scale(
                                      scenario.y0_array(), scenario.v0,
                                      float(hs.unknowns[6]), p))
        except AscentError as exc:
            hs.history.append(StageRecord(
                stage=stage, lam1=lam1, lam2=lam2, step=trial - lam,
                accepted=False,
                newton_iterations=len(getattr(exc, "history", [])),
                residual_norm=math.inf, wall_s=time.perf_counter() - t0))
            step *= opts.shrink
            if step < opts.min_step:
                raise ContinuationStalled(
                    f"{stage} stalled at {lam:.6f} (step below {opts.min_step})",
                    iterate=hs.unknowns, history=[r.as_dict() for r in hs.history],
                ) from exc
            continue
        hs.history.append(StageRecord(
            stage=stage, lam1=lam1, lam2=lam2, step=trial - lam, accepted=True,
            newton_iterations=result.iterations, residual_norm=result.norm,
            wall_s=time.perf_counter() - t0,
            newton_history=result.history_json()))
        prev = (lam, hs.unknowns)
        lam = trial
        hs.unknowns = result.x
        hs.residual_norm = result.norm
        if stage == "lam1":
            hs.lam1 = lam
        else:
            hs.lam2 = lam
        step = min(opts.max_step, step * opts.growth)
    return hs


def continue_lambda1(hs: HomotopyState, scenario: Scenario, p: VehicleParams,
                     opts: ContinuationOpts) -> HomotopyState:
    """Walk the dynamics-morphing parameter to 1 with the target fixed."""
    return _walk(hs, scenario, p, opts, "lam1")


def continue_lambda2(hs: HomotopyState, scenario: Scenario, p: VehicleParams,
                     opts: ContinuationOpts) -> HomotopyState:
    """Walk the target from the intermediate point to the requested one."""
    gap = np.max(np.abs((hs.target_final - hs.target_base)
                        / full_residual_scale(scenario.y0_array(), scenario.v0, p)[:5]))
    if gap < 1e-12:
        # degenerate target path: one corrector at lam2 = 1 settles it
        fn = make_full_shooting(scenario.x0_full(), hs.target_final, hs.lam1, p,
                                opts.n_steps, v0=scenario.v0)
        t0 = time.perf_counter()
        result = newton_solve(fn, hs.unknowns, opts.newton,
                              step_limit=horizon_step_limit(),
                              x_scale=full_unknown_scale(
                                  scenario.y0_array(), scenario.v0,
                                  float(hs.unknowns[6]), p))
        hs.history.append(StageRecord(
            stage="lam2", lam1=hs.lam1, lam2=1.0, step=1.0, accepted=True,
            newton_iterations=result.iterations, residual_norm=result.norm,
            wall_s=time.perf_counter() - t0, newton_history=result.history_json()))
        hs.lam2 = 1.0
        hs.unknowns = result.x
        hs.residual_norm = result.norm
        return hs
    return _walk(hs, scenario, p, opts, "lam2")


def solve(scenario: Scenario, p: VehicleParams | None = None,
          opts: ContinuationOpts | None = None) -> OptimalSolution:
    """Run the full pipeline and return the solved trajectory."""
    p = p if p is not None else scenario.params()
    opts = resolve_opts(scenario, opts)
    t0 = time.perf_counter()
    hs, extras = step_one(scenario, p, opts)
    hs = continue_lambda1(hs, scenario, p, opts)
    hs = continue_lambda2(hs, scenario, p, opts)

    t_f = float(hs.unknowns[6])
    traj = integrate_full_extremal(scenario.x0_full(), hs.unknowns[:6],
                                   t_f, 1.0, p, opts.n_steps)
    wall = time.perf_counter() - t0
    return OptimalSolution(
        scenario=scenario,
        unknowns=hs.unknowns,
        t_f=t_f,
        v_tf=float(math.exp(traj.states[-1, 3])),
        trajectory=traj,
        residual_norm=hs.residual_norm,
        history=hs.history,
        wall_s=wall,
        diagnostics={
            "m0_kg": p.m0,
            "n_steps": opts.n_steps,
            "guess_residual": extras["guess_residual"],
            "conversion_residual": extras["conversion_residual"],
            "tf_guess": extras["tf_guess"],
        },
    )


def sweep_m0(scenario_names, m0_values, opts: ContinuationOpts | None = None,
             loader=None) -> list[dict]:
    """Solve each scenario across an m0 grid; tabulate (v_tf, t_f).

    Returns one record per m0 with per-scenario outcomes (or the error
    string where a solve failed).
    """
    from .scenario import load_scenario
    loader = loader or load_scenario
    rows = []
    for m0 in m0_values:
        entry = {"m0_kg": float(m0), "scenarios": {}}
        for name in scenario_names:
            scenario = loader(name)
            try:
                sol = solve(scenario, scenario.params(m0=float(m0)), opts)
                entry["scenarios"][scenario.name] = {
                    "v_tf_mps": sol.v_tf,
                    "t_f_s": sol.t_f,
                    "lam1_solves": sol.corrector_counts["lam1"],
                    "lam2_solves": sol.corrector_counts["lam2"],
                }
            except AscentError as exc:
                entry["scenarios"][scenario.name] = {"error": str(exc)}
        rows.append(entry)
    return rows
