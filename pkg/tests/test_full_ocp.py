import math

import numpy as np
import pytest

from ascentopt.errors import ConcavityLost
from ascentopt.full_ocp import extract_controls, full_adjoint, full_hamiltonian
from ascentopt.simplified import simplified_hamiltonian
from ascentopt.vehicle import drag_coef

from conftest import random_full_point

# FD steps per state component: meters for r, log-units for w, radians else
H_STEPS = np.array([1.0, 1e-6, 1e-6, 1e-7, 1e-6, 1e-6])


def fd_grad_state(t, x, costate, control, lam1, p):
    grad = np.empty(6)
    for i in range(6):
        h = H_STEPS[i]
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (full_hamiltonian(t, xp, costate, control, lam1, p)
                   - full_hamiltonian(t, xm, costate, control, lam1, p)) / (2 * h)
    return grad


def fd_control_derivs(t, x, costate, u, beta, lam1, p, h=1e-5):
    hu = (full_hamiltonian(t, x, costate, (u + h, beta), lam1, p)
          - full_hamiltonian(t, x, costate, (u - h, beta), lam1, p)) / (2 * h)
    hb = (full_hamiltonian(t, x, costate, (u, beta + h), lam1, p)
          - full_hamiltonian(t, x, costate, (u, beta - h), lam1, p)) / (2 * h)
    huu = (full_hamiltonian(t, x, costate, (u + h, beta), lam1, p)
           - 2 * full_hamiltonian(t, x, costate, (u, beta), lam1, p)
           + full_hamiltonian(t, x, costate, (u - h, beta), lam1, p)) / h**2
    return hu, hb, huu


class TestHamiltonian:
    def test_cost_term_only(self, p):
        x = np.array([p.rT + 3000.0, 0.2, 0.1, math.log(900.0), 0.1, 0.3])
        h = full_hamiltonian(0.0, x, np.zeros(6), (0.0, 0.0), 0.0, p)
        assert h == pytest.approx(-drag_coef(x[0], p) * 900.0, rel=1e-12)

    def test_reduces_to_arc_length_form_when_coasting(self, p, rng):
        # lam1 = 0, p_w = 0: the time-domain Hamiltonian is the arc-length
        # one scaled by the speed
        for _ in range(100):
            t, x, costate, _ = random_full_point(rng, p)
            costate[3] = 0.0
            u, beta = rng.normal(scale=0.6), rng.uniform(-np.pi, np.pi)
            h_full = full_hamiltonian(t, x, costate, (u, beta), 0.0, p)
            y = np.array([x[0], x[1], x[2], x[4], x[5]])
            pc = np.array([costate[0], costate[1], costate[2],
                           costate[4], costate[5]])
            z = (u * math.cos(beta), u * math.sin(beta))
            h_simpl = simplified_hamiltonian(y, pc, z, p)
            v = math.exp(x[3])
            assert h_full == pytest.approx(v * h_simpl, rel=1e-10, abs=1e-14)


class TestExtractControls:
    def test_bank_follows_costate_sign(self, p):
        x = np.array([p.rT + 3000.0, 0.2, 0.1, math.log(900.0), 0.1, 0.3])
        pc = np.array([0.0, 0.0, 0.0, 0.0, 0.5, 0.0])
        _, beta = extract_controls(x, pc, 0.0, 0.0, p)
        assert beta == 0.0
        pc[4] = -0.5
        _, beta = extract_controls(x, pc, 0.0, 0.0, p)
        assert beta == pytest.approx(math.pi)

    def test_matches_arc_length_relation_when_coasting(self, p):
        x = np.array([p.rT + 3000.0, 0.2, 0.1, math.log(900.0), 0.1, 0.3])
        pc = np.array([0.0, 0.0, 0.0, 0.0, 0.7, 0.0])
        u, beta = extract_controls(x, pc, 0.0, 0.0, p)
        assert beta == 0.0
        assert u == pytest.approx(0.7 / (2 * p.eta), rel=1e-12)

    def test_zero_costate_gives_zero_lift(self, p):
        x = np.array([p.rT + 3000.0, 0.2, 0.1, math.log(900.0), 0.1, 0.3])
        u, beta = extract_controls(x, np.zeros(6), 0.5, 3.0, p)
        assert u == 0.0 and beta == 0.0

    def test_concavity_guard(self, p):
        x = np.array([p.rT + 3000.0, 0.2, 0.1, math.log(900.0), 0.1, 0.3])
        pc = np.array([0.0, 0.0, 0.0, -1.0, 0.5, 0.0])
        with pytest.raises(ConcavityLost):
            extract_controls(x, pc, 0.0, 0.0, p)

    def test_stationarity_and_concavity(self, p, rng):
        # the extracted pair must zero both control derivatives of H and
        # sit on a concave section; checked across the morphing range
        for _ in range(120):
            t, x, costate, lam1 = random_full_point(rng, p)
            u, beta = extract_controls(x, costate, lam1, t, p)
            hu, hb, huu = fd_control_derivs(t, x, costate, u, beta, lam1, p)
            assert abs(hu) < 1e-8
            assert abs(hb) < 1e-8
            assert huu < 0.0


class TestAdjoint:
    def test_matches_minus_grad_h(self, p, rng):
        # primary correctness gate: analytic adjoint vs central differences
        for _ in range(200):
            t, x, costate, lam1 = random_full_point(rng, p)
            u, beta = rng.normal(scale=0.6), rng.uniform(-np.pi, np.pi)
            analytic = full_adjoint(t, x, costate, (u, beta), lam1, p)
            fd = -fd_grad_state(t, x, costate, (u, beta), lam1, p)
            scale = np.max(np.abs(analytic)) + 1e-12
            np.testing.assert_allclose(analytic, fd, rtol=1e-6,
                                       atol=1e-6 * scale)

    def test_longitude_cyclic(self, p, rng):
        for _ in range(20):
            t, x, costate, lam1 = random_full_point(rng, p)
            dp = full_adjoint(t, x, costate, (0.1, 0.2), lam1, p)
            assert dp[2] == 0.0

    def test_pw_rate_is_minus_h_when_coasting(self, p, rng):
        for _ in range(50):
            t, x, costate, _ = random_full_point(rng, p)
            u, beta = rng.normal(scale=0.6), rng.uniform(-np.pi, np.pi)
            dp = full_adjoint(t, x, costate, (u, beta), 0.0, p)
            h = full_hamiltonian(t, x, costate, (u, beta), 0.0, p)
            assert dp[3] == pytest.approx(-h, rel=1e-10, abs=1e-14)
