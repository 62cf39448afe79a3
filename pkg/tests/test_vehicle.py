import math

import numpy as np
import pytest

from ascentopt.errors import MassDepleted, SingularChart
from ascentopt.vehicle import (VehicleParams, air_density_factor, drag_coef,
                               full_dynamics, gravity, mass, mass_flow,
                               max_curvature, thrust)


def eq1_rates(t, x6, u, beta, p):
    """Independent oracle: powered point-mass dynamics with speed as a
    state and exact angle-of-attack trigonometry, transcribed directly
    from the standard flight-mechanics form."""
    r, L, l, v, gamma, chi = x6
    q = p.q0 if t <= p.t_sw else 0.0
    f_t = p.ve * q
    m = p.m0 - p.q0 * min(t, p.t_sw)
    rho = math.exp(-(r - p.rT) / p.hr)
    d = p.d0 * rho
    cm = p.cm0 * rho
    g = p.g0 * (p.rT / r) ** 2
    alpha = p.alpha_max * u
    return np.array([
        v * math.sin(gamma),
        v / r * math.cos(gamma) * math.cos(chi),
        v / r * math.cos(gamma) * math.sin(chi) / math.cos(L),
        f_t / m * math.cos(alpha) - (d + p.eta * cm * u**2) * v**2
        - g * math.sin(gamma),
        f_t / (m * v) * math.sin(alpha) * math.cos(beta)
        + v * cm * u * math.cos(beta) + (v / r - g / v) * math.cos(gamma),
        f_t / (m * v) * math.sin(alpha) / math.cos(gamma) * math.sin(beta)
        + v * cm / math.cos(gamma) * u * math.sin(beta)
        + v / r * math.cos(gamma) * math.sin(chi) * math.tan(L),
    ])


class TestCoefficients:
    def test_density_factor_at_reference(self, p):
        assert air_density_factor(p.rT, p) == 1.0

    def test_density_factor_one_scale_height(self, p):
        assert air_density_factor(p.rT + p.hr, p) == pytest.approx(math.exp(-1), rel=1e-12)

    def test_density_factor_default_hr(self, p):
        # hr = 7500 m by default, so +7500 m is exactly one scale height
        assert p.hr == 7500.0
        assert air_density_factor(p.rT + 7500.0, p) == pytest.approx(0.36787944117144233)

    def test_reference_values(self, p):
        assert max_curvature(p.rT, p) == 0.00075
        assert drag_coef(p.rT, p) == 0.00005

    def test_curvature_one_scale_height(self, p):
        assert max_curvature(p.rT + p.hr, p) == pytest.approx(0.00075 * math.exp(-1), rel=1e-12)

    def test_common_exponential_ratio(self, p, rng):
        for r in p.rT + rng.uniform(-5000, 50000, size=50):
            assert max_curvature(r, p) / drag_coef(r, p) == pytest.approx(
                p.cm0 / p.d0, rel=1e-12)


class TestGravity:
    def test_surface(self, p):
        assert gravity(p.rT, p) == 9.80665

    def test_inverse_square(self, p):
        assert gravity(2 * p.rT, p) == pytest.approx(p.g0 / 4, rel=1e-14)

    def test_at_12km(self, p):
        assert gravity(p.rT + 12000.0, p) == pytest.approx(9.769852884412586, rel=1e-13)


class TestPropulsion:
    def test_flow_profile(self, p):
        assert mass_flow(10.0, p) == 10.0
        assert mass_flow(25.0, p) == 0.0

    def test_thrust(self, p):
        assert thrust(10.0, p) == 1500.0 * 10.0
        assert thrust(25.0, p) == 0.0

    def test_mass_after_burnout(self, p):
        assert mass(30.0, 1.0, p) == 1000.0 - 200.0

    def test_mass_monotone_and_affine(self, p):
        ts = np.linspace(0, 40, 81)
        ms = [mass(t, 1.0, p) for t in ts]
        assert all(a >= b for a, b in zip(ms, ms[1:]))
        for t in (5.0, 15.0, 35.0):
            m0 = mass(t, 0.0, p)
            m1 = mass(t, 1.0, p)
            assert mass(t, 0.5, p) == pytest.approx(0.5 * (m0 + m1), rel=1e-14)

    def test_mass_depletion_signals(self):
        small = VehicleParams(m0=100.0)
        with pytest.raises(MassDepleted):
            mass(15.0, 1.0, small)


class TestFullDynamics:
    def test_level_unpowered_flight(self, p):
        x = np.array([p.rT + 3000.0, 0.5, 0.1, math.log(1000.0), 0.0, 0.0])
        dx = full_dynamics(0.0, x, (0.0, 0.0), 0.0, p)
        assert dx[0] == 0.0      # no climb
        assert dx[4] == 0.0      # no pitch rate
        assert dx[5] == 0.0      # no yaw rate
        assert dx[3] < 0.0       # drag decelerates

    def test_coasting_w_rate_is_pure_drag(self, p, rng):
        # with the morphing parameter off, only drag acts on the log-speed
        for _ in range(20):
            x = np.array([p.rT + rng.uniform(0, 20000), rng.uniform(-1, 1),
                          rng.uniform(-1, 1), math.log(rng.uniform(400, 1500)),
                          rng.uniform(-1, 1), rng.uniform(-3, 3)])
            u, beta = rng.normal(scale=0.5), rng.uniform(-np.pi, np.pi)
            dx = full_dynamics(12.0, x, (u, beta), 0.0, p)
            v = math.exp(x[3])
            expected = -(drag_coef(x[0], p) + p.eta * max_curvature(x[0], p) * u**2) * v
            assert dx[3] == pytest.approx(expected, rel=1e-12)

    def test_matches_speed_state_form_when_powered(self, p, rng):
        # lam1 = 1, exact trig: agree with the independent transcription
        # through v = exp(w) to machine precision
        for _ in range(50):
            r = p.rT + rng.uniform(0, 20000)
            v = rng.uniform(400, 1500)
            x6 = np.array([r, rng.uniform(-1, 1), rng.uniform(-1, 1), v,
                           rng.uniform(-1, 1), rng.uniform(-3, 3)])
            u = rng.normal(scale=0.5)
            beta = rng.uniform(-np.pi, np.pi)
            t = rng.uniform(0, 40)
            xw = x6.copy()
            xw[3] = math.log(v)
            got = full_dynamics(t, xw, (u, beta), 1.0, p, exact_alpha=True)
            want = eq1_rates(t, x6, u, beta, p)
            np.testing.assert_allclose(got[:3], want[:3], rtol=1e-12)
            assert got[3] == pytest.approx(want[3] / v, rel=1e-12)  # dw = dv/v
            np.testing.assert_allclose(got[4:], want[4:], rtol=1e-12)

    def test_zero_alpha_modes_agree(self, p):
        # at u = 0 the small-angle closure is exact
        x = np.array([p.rT + 5000.0, 0.3, 0.2, math.log(900.0), 0.2, 0.1])
        a = full_dynamics(5.0, x, (0.0, 0.0), 1.0, p, exact_alpha=False)
        b = full_dynamics(5.0, x, (0.0, 0.0), 1.0, p, exact_alpha=True)
        np.testing.assert_allclose(a, b, rtol=1e-14)

    def test_thrust_cutoff_discontinuity(self, p):
        x = np.array([p.rT + 5000.0, 0.3, 0.2, math.log(900.0), 0.2, 0.1])
        eps = 1e-9
        before = full_dynamics(p.t_sw - eps, x, (0.1, 0.2), 1.0, p)
        at = full_dynamics(p.t_sw, x, (0.1, 0.2), 1.0, p)
        after = full_dynamics(p.t_sw + eps, x, (0.1, 0.2), 1.0, p)
        np.testing.assert_allclose(before, at, rtol=1e-6)   # left-continuous
        assert not np.allclose(at, after, rtol=1e-6)        # jump through f_T
        # only the thrust-dependent components jump
        np.testing.assert_allclose(before[:3], after[:3], rtol=1e-9)

    def test_singular_chart_rejected(self, p):
        x = np.array([p.rT + 5000.0, 0.3, 0.2, math.log(900.0), math.pi / 2, 0.1])
        with pytest.raises(SingularChart):
            full_dynamics(0.0, x, (0.0, 0.0), 0.0, p)
        x[4] = 0.0
        x[1] = math.pi / 2
        with pytest.raises(SingularChart):
            full_dynamics(0.0, x, (0.0, 0.0), 0.0, p)


class TestParamValidation:
    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            VehicleParams(cm0=-1.0)
        with pytest.raises(ValueError):
            VehicleParams(hr=0.0)

    def test_rejects_bad_alpha_max(self):
        with pytest.raises(ValueError):
            VehicleParams(alpha_max=2.0)
