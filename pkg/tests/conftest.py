import numpy as np
import pytest

from vll.eos import EosParams
from vll.fields import make_grid
from vll.solver import FluidParams, FluidState


def gaussian_bump(x, center=0.5, width=0.08):
    """Smooth bump, numerically zero at the walls of [0, 1]."""
    s = (x - center) / width
    return np.exp(-s * s)


def gaussian_bump_dx(x, center=0.5, width=0.08):
    s = (x - center) / width
    return -2.0 * s / width * np.exp(-s * s)


def gaussian_bump_dxx(x, center=0.5, width=0.08):
    s = (x - center) / width
    return (4.0 * s * s - 2.0) / width**2 * np.exp(-s * s)


@pytest.fixture
def eos14():
    return EosParams(a=1.0, gamma=1.4)


@pytest.fixture
def eos2():
    return EosParams(a=1.0, gamma=2.0)


def bump_state(n, eos, rho_amp=0.3, u_amp=0.25, L=1.0):
    grid = make_grid(L, n)
    x = grid.centers
    rho = 1.0 + rho_amp * gaussian_bump(x)
    u = u_amp * gaussian_bump(x)
    return FluidState(grid, 0.0, rho, rho * u)


def equilibrium_state(n, L=1.0):
    grid = make_grid(L, n)
    return FluidState(grid, 0.0, np.ones(n), np.zeros(n))


def smooth_wall_state(n, L=1.0, rho_amp=0.1, u_amp=0.1):
    """Well-prepared style datum: positive density, velocity zero at the walls."""
    grid = make_grid(L, n)
    x = grid.centers
    rho = 1.0 + rho_amp * np.sin(np.pi * x / L)
    u = u_amp * np.sin(np.pi * x / L)
    return FluidState(grid, 0.0, rho, rho * u)


def default_params(eos, eps=1e-2, r1=0.0, **kw):
    return FluidParams(eos=eos, eps=eps, r1=r1, **kw)
