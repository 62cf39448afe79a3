import numpy as np
import pytest

from ascentopt.vehicle import DEFAULT_PARAMS


@pytest.fixture
def p():
    return DEFAULT_PARAMS


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_full_point(rng, p, lam1_choices=(0.0, 0.5, 1.0)):
    """Random admissible (t, x, costate, lam1) for the time-domain problem."""
    r = p.rT + rng.uniform(0.0, 30000.0)
    L = rng.uniform(-1.2, 1.2)
    l = rng.uniform(-np.pi, np.pi)
    w = np.log(rng.uniform(300.0, 2000.0))
    gamma = rng.uniform(-1.25, 1.25)
    chi = rng.uniform(-np.pi, np.pi)
    x = np.array([r, L, l, w, gamma, chi])
    costate = np.array([
        rng.normal(scale=1e-4),
        rng.normal(scale=100.0),
        rng.normal(scale=100.0),
        rng.uniform(-0.5, 0.5),
        rng.normal(scale=0.1),
        rng.normal(scale=0.1),
    ])
    t = rng.uniform(0.0, 40.0)
    lam1 = lam1_choices[rng.integers(len(lam1_choices))]
    return t, x, costate, lam1


def random_simplified_point(rng, p):
    """Random admissible (y, costate, z) for the arc-length problem."""
    y = np.array([
        p.rT + rng.uniform(0.0, 30000.0),
        rng.uniform(-1.2, 1.2),
        rng.uniform(-np.pi, np.pi),
        rng.uniform(-1.25, 1.25),
        rng.uniform(-np.pi, np.pi),
    ])
    costate = np.array([
        rng.normal(scale=1e-4),
        rng.normal(scale=100.0),
        rng.normal(scale=100.0),
        rng.normal(scale=0.5),
        rng.normal(scale=0.5),
    ])
    z = rng.normal(scale=1.0, size=2)
    return y, costate, z
