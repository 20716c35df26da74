"""Shared fixtures: the default scenario and its cached bound-state solve."""

import numpy as np
import pytest

from starkstrip import (
    CurvatureModel,
    DistortionParams,
    FieldConfig,
    GeometrySetup,
    Grid,
    OperatorKind,
    assemble,
    bound_states,
    cached_total_bend,
)


@pytest.fixture(scope="session")
def default_setup():
    return GeometrySetup(CurvatureModel.rational(-0.8, 2), d=1.0)


@pytest.fixture(scope="session")
def straight_setup():
    return GeometrySetup(CurvatureModel.zero(), d=1.0)


@pytest.fixture(scope="session")
def alpha0(default_setup):
    return cached_total_bend(default_setup)


@pytest.fixture(scope="session")
def base_grid():
    return Grid(L=20.0, Ns=801, Nu=25)


@pytest.fixture(scope="session")
def base_bound_state(default_setup, base_grid):
    """Trapped mode of the default guide on the base grid: (E0, lambda0, binding)."""
    op = assemble(OperatorKind.BARE, default_setup, grid=base_grid)
    lam0 = base_grid.lambda0_discrete()
    eigs, _ = bound_states(op, lam0, k=4)
    assert len(eigs.values) >= 1
    E0 = float(eigs.values[0])
    return E0, lam0, lam0 - E0


@pytest.fixture(scope="session")
def default_params(base_bound_state):
    E0, lam0, binding = base_bound_state
    return DistortionParams(E=-binding, deltaE=binding / 4.0, beta=0.05)


@pytest.fixture(scope="session")
def ladder_field():
    return FieldConfig(0.0019, 0.3)


def fd_derivative(fun, x, h=1e-5):
    """Central difference, one Richardson sweep; independent of closed forms."""
    d1 = (fun(x + h) - fun(x - h)) / (2 * h)
    d2 = (fun(x + h / 2) - fun(x - h / 2)) / h
    return (4 * d2 - d1) / 3.0


def seeded_rng():
    return np.random.default_rng(977)
