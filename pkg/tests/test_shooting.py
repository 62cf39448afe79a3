import math

import numpy as np
import pytest

from ascentopt.errors import InvalidHorizon, JacobianSingular, MaxIterations
from ascentopt.full_ocp import extract_controls, full_adjoint
from ascentopt.scenario import BUILTIN_SCENARIOS
from ascentopt.shooting import (NewtonOpts, _fd_jacobian, _full_flow_rates,
                                _simplified_flow_rates, full_unknown_scale,
                                horizon_step_limit, integrate_full_extremal,
                                integrate_simplified_extremal,
                                make_full_shooting, make_simplified_shooting,
                                newton_solve, simplified_unknown_scale)
from ascentopt.simplified import extremal_control, simplified_adjoint, simplified_dynamics
from ascentopt.vehicle import full_dynamics

from conftest import random_full_point, random_simplified_point


class TestNewton:
    def test_linear_in_one_iteration(self):
        a = np.array([2.0, -3.0, 0.5])
        res = newton_solve(lambda x: x - a, np.zeros(3))
        assert res.iterations == 1
        np.testing.assert_allclose(res.x, a, atol=1e-12)

    def test_rosenbrock_gradient_root(self):
        def grad(x):
            return np.array([
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] ** 2),
                200.0 * (x[1] - x[0] ** 2),
            ])

        res = newton_solve(grad, np.array([-1.2, 1.0]))
        np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-7)

    def test_quadratic_tail(self):
        # once the residual is small, full steps should contract fast
        def grad(x):
            return np.array([
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] ** 2),
                200.0 * (x[1] - x[0] ** 2),
            ])

        res = newton_solve(grad, np.array([-1.2, 1.0]), NewtonOpts(tol=1e-12))
        norms = [h["residual_norm"] for h in res.history]
        damps = [h["damping"] for h in res.history]
        tail = [i for i in range(1, len(norms)) if norms[i - 1] < 1e-3]
        assert tail, "expected iterations below 1e-3"
        for i in tail:
            if damps[i] == 1.0 and norms[i - 1] > 1e-14:
                assert norms[i] / norms[i - 1] <= 0.3

    def test_deterministic(self):
        def fn(x):
            return np.array([math.sin(x[0]) + x[1] ** 3 - 0.3,
                             x[0] * x[1] - 0.2])

        a = newton_solve(fn, np.array([0.5, 0.5]))
        b = newton_solve(fn, np.array([0.5, 0.5]))
        assert np.array_equal(a.x, b.x)
        assert a.history == b.history

    def test_singular_jacobian_raises(self):
        with pytest.raises(JacobianSingular):
            newton_solve(lambda x: np.array([x[0] + x[1] - 1.0,
                                             2.0 * (x[0] + x[1]) - 2.0]),
                         np.array([5.0, 5.0]))

    def test_max_iterations_carries_history(self):
        with pytest.raises(MaxIterations) as exc_info:
            newton_solve(lambda x: np.array([math.atan(x[0]) + 2.0]),
                         np.array([0.0]), NewtonOpts(max_iter=5))
        assert len(exc_info.value.history) <= 5
        assert exc_info.value.iterate is not None

    def test_scaled_matches_unscaled_on_benign_problem(self):
        a = np.array([2.0, -3.0])
        res = newton_solve(lambda x: x - a, np.zeros(2),
                           x_scale=np.array([10.0, 0.1]))
        np.testing.assert_allclose(res.x, a, atol=1e-10)

    def test_horizon_cap_scales_direction(self):
        limit = horizon_step_limit(0.5)
        x = np.array([1.0, 2.0, 10.0])
        dx = np.array([1.0, 1.0, -9.0])
        capped = limit(x, dx)
        assert abs(capped[-1]) == pytest.approx(5.0)
        np.testing.assert_allclose(capped / capped[0], dx / dx[0], rtol=1e-12)
        np.testing.assert_array_equal(limit(x, np.array([1.0, 1.0, 1.0])),
                                      [1.0, 1.0, 1.0])


class TestFusedFlows:
    def test_simplified_flow_matches_reference(self, p, rng):
        rates = _simplified_flow_rates(p)
        for _ in range(30):
            y, costate, _ = random_simplified_point(rng, p)
            z = extremal_control(costate, y[3], p)
            got = np.array(rates(0.0, [*y, *costate]))
            dy = simplified_dynamics(y, z, p)
            dp = simplified_adjoint(y, costate, z, p)
            np.testing.assert_allclose(got, np.concatenate([dy, dp]), rtol=1e-12)

    def test_full_flow_matches_reference(self, p, rng):
        for lam1 in (0.0, 0.5, 1.0):
            rates = _full_flow_rates(lam1, p)
            for _ in range(20):
                t, x, costate, _ = random_full_point(rng, p, (lam1,))
                u, beta = extract_controls(x, costate, lam1, t, p)
                got = np.array(rates(t, [*x, *costate]))
                dx = full_dynamics(t, x, (u, beta), lam1, p)
                dp = full_adjoint(t, x, costate, (u, beta), lam1, p)
                np.testing.assert_allclose(got, np.concatenate([dx, dp]),
                                           rtol=1e-12, atol=1e-18)


class TestSimplifiedShooting:
    def _converged(self, p):
        sc = BUILTIN_SCENARIOS["S3"]
        from ascentopt.continuation import coast_endpoint, default_tf_guess
        from ascentopt.guidance import assemble_guess
        target = coast_endpoint(sc, p, default_tf_guess(sc, p), 400)
        guess = assemble_guess(sc.y0_array(), sc.v0, target, p)
        fn = make_simplified_shooting(sc.y0_array(), target, p, 400)
        seed = np.array([*guess.costate0, guess.s_f])
        res = newton_solve(fn, seed, step_limit=horizon_step_limit(),
                           x_scale=simplified_unknown_scale(sc.y0_array(),
                                                            guess.s_f, p))
        return sc, target, fn, res

    def test_residual_small_at_converged_point(self, p):
        _, _, fn, res = self._converged(p)
        assert res.norm <= 1e-8
        assert float(np.max(np.abs(fn(res.x)))) <= 1e-8

    def test_gamma_sensitivity_sign(self, p):
        # short horizon: raising the pitch costate raises the final path
        # angle (positive Jacobian orientation)
        sc = BUILTIN_SCENARIOS["S3"]
        y0 = sc.y0_array()
        costate0 = np.array([1e-5, 50.0, 0.0, 0.05, 0.02])
        s_f = 2000.0
        base = integrate_simplified_extremal(y0, costate0, s_f, p, 100)
        bumped = costate0.copy()
        bumped[3] += 1e-4
        up = integrate_simplified_extremal(y0, bumped, s_f, p, 100)
        assert up.states[-1, 3] > base.states[-1, 3]

    def test_rejects_nonpositive_horizon(self, p):
        sc = BUILTIN_SCENARIOS["S3"]
        fn = make_simplified_shooting(sc.y0_array(), sc.yf_array(), p, 100)
        with pytest.raises(InvalidHorizon):
            fn(np.array([0.0, 0.0, 0.0, 0.0, 0.0, -5.0]))

    def test_forward_jacobian_matches_central(self, p, rng):
        # smoothness of the residual map: forward and central FD agree
        sc, target, fn, res = self._converged(p)
        scale = simplified_unknown_scale(sc.y0_array(), float(res.x[5]), p)

        def g(xi):
            return fn(xi * scale)

        for trial in range(5):
            xi = res.x / scale
            xi = xi * (1.0 + 0.02 * rng.standard_normal(6))
            r0 = g(xi)
            Jf = _fd_jacobian(g, xi, r0, NewtonOpts(central=False))
            Jc = _fd_jacobian(g, xi, r0, NewtonOpts(central=True))
            denom = np.abs(Jc).max()
            assert np.max(np.abs(Jf - Jc)) / denom < 1e-4


class TestFullShooting:
    def test_converged_residual_and_hamiltonian_constant(self, p):
        # at lam1 = 0 the system is autonomous: H along the converged
        # extremal stays constant to integration accuracy
        from ascentopt.continuation import resolve_opts, step_one
        sc = BUILTIN_SCENARIOS["S3"]
        hs, extras = step_one(sc, p, resolve_opts(sc))
        assert hs.residual_norm <= 1e-8
        traj = integrate_full_extremal(sc.x0_full(), hs.unknowns[:6],
                                       float(hs.unknowns[6]), 0.0, p, 400)
        drift = np.max(np.abs(traj.hamiltonian - traj.hamiltonian[0]))
        assert drift < 5e-6

    def test_rejects_nonpositive_horizon(self, p):
        sc = BUILTIN_SCENARIOS["S3"]
        fn = make_full_shooting(sc.x0_full(), sc.yf_array(), 0.0, p, 100,
                                v0=sc.v0)
        with pytest.raises(InvalidHorizon):
            fn(np.array([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]))

    def test_deterministic(self, p):
        sc = BUILTIN_SCENARIOS["S3"]
        fn = make_full_shooting(sc.x0_full(), sc.yf_array(), 0.5, p, 200,
                                v0=sc.v0)
        x = np.array([5e-5, 180.0, 10.0, -0.1, 0.1, 0.01, 25.0])
        assert np.array_equal(fn(x), fn(x))


class TestUnknownScales:
    def test_positive_and_finite(self, p):
        sc = BUILTIN_SCENARIOS["S1"]
        for scale in (simplified_unknown_scale(sc.y0_array(), 2e4, p),
                      full_unknown_scale(sc.y0_array(), sc.v0, 25.0, p)):
            assert np.all(scale > 0)
            assert np.all(np.isfinite(scale))

    def test_matches_converged_magnitudes(self, p):
        # scales should land within ~2 orders of magnitude of actual
        # converged unknowns, else the scaled Jacobian loses its purpose
        from ascentopt.continuation import resolve_opts, step_one
        sc = BUILTIN_SCENARIOS["S3"]
        hs, _ = step_one(sc, p, resolve_opts(sc))
        scale = full_unknown_scale(sc.y0_array(), sc.v0,
                                   float(hs.unknowns[6]), p)
        nonzero = np.abs(hs.unknowns) > 0
        ratios = np.abs(hs.unknowns[nonzero]) / scale[nonzero]
        assert np.all(ratios < 100.0)
        assert np.all(ratios > 1e-4)
