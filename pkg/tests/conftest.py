"""Shared fixtures: small linear models and the planted-failure bundles."""

import dataclasses

import numpy as np
import pytest

from levyspde.coefficients import CoefficientBundle, HypothesisConstants
from levyspde.models import builtin
from levyspde.noise import MarkSpace
from levyspde.spaces import GelfandTriple


def make_scalar_linear(mu=2.0, sigma=0.05, additive=False):
    """One-mode linear model: drift -mu x, Wiener coefficient sigma.

    ``additive=True`` makes the diffusion constant (sigma), otherwise it is
    multiplicative (sigma x).  No jumps.
    """
    triple = GelfandTriple(dimension_cap=1, v_weights=np.array([max(mu, 1.0)]))

    def drift(t, state):
        return -mu * state.coeffs

    def diffusion(t, state):
        if additive:
            return np.array([[sigma]])
        return sigma * np.diag(state.coeffs)

    def implicit_solve(t_next, x, dt):
        return x / (1.0 + dt * mu)

    bundle = CoefficientBundle(
        drift=drift,
        diffusion=diffusion,
        jump=lambda t, state, z: np.zeros(1),
        mark_space=MarkSpace.zero(),
        rho=lambda s: 0.0,
        eta=lambda s: 0.0,
        local_bound=lambda t, r: 0.0,
        drift_jacobian=lambda t, state: np.array([[-mu]]),
        drift_implicit_solve=implicit_solve,
    )
    constants = HypothesisConstants(beta=2.0, g_integral=sigma**2, L_A=mu / max(mu, 1.0))
    return triple, bundle, constants


def make_pure_jump(gamma_vec, marks=None, level=2):
    """Constant-jump model: no drift, no Wiener, gamma(t, u, z) = gamma_vec."""
    marks = marks or MarkSpace(marks=np.array([1.0]), weights=np.array([1.5]))
    triple = GelfandTriple(dimension_cap=level, v_weights=np.ones(level))
    g = np.asarray(gamma_vec, dtype=float)

    bundle = CoefficientBundle(
        drift=lambda t, state: np.zeros(state.level),
        diffusion=lambda t, state: np.zeros((state.level, state.level)),
        jump=lambda t, state, z: g[: state.level],
        mark_space=marks,
        rho=lambda s: 0.0,
        eta=lambda s: 0.0,
    )
    constants = HypothesisConstants(
        beta=2.0,
        h_p_integrals={2.0: marks.total_intensity * float(np.dot(g, g))},
    )
    return triple, bundle, constants


@pytest.fixture(scope="session")
def heat_spec():
    return builtin("heat")


@pytest.fixture(scope="session")
def quiet_heat_spec():
    # noise off: the contractive deterministic baseline
    return builtin("heat", c_wiener=0.0, sigma_jump=0.0, marks=MarkSpace.zero())


@pytest.fixture(scope="session")
def allen_cahn_spec():
    return builtin("allen_cahn")


def step_discontinuous_bundle(heat):
    """Heat drift with a planted jump when the first coordinate crosses 0."""
    w = heat.triple.v_weights

    def drift(t, state):
        base = -w[: state.level] * state.coeffs
        if state.coeffs[0] >= 0.0:
            base = base + 0.7 * np.eye(state.level)[0]
        return base

    return dataclasses.replace(
        heat.bundle, drift=drift, drift_jacobian=None, drift_implicit_solve=None
    )


def misdeclared_beta_constants(heat):
    """Heat constants claiming the wrong coercivity exponent."""
    return dataclasses.replace(heat.constants, beta=3.0)
