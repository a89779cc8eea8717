import numpy as np
import pytest

from rdeuler import euler
from rdeuler.basis import build_dofmap
from rdeuler.discretization import Discretization
from rdeuler.mesh import build_mesh, structured_square


@pytest.fixture(scope="session")
def gas():
    return euler.GasModel()


@pytest.fixture(scope="session")
def small_disc():
    """4x4 periodic square, P1 Lagrange, continuous."""
    mesh = structured_square(4, side=2.0)
    return Discretization(mesh, build_dofmap(mesh, "s2", "lagrange", 1))


@pytest.fixture(scope="session")
def small_disc_s1():
    mesh = structured_square(4, side=2.0)
    return Discretization(mesh, build_dofmap(mesh, "s1", "lagrange", 1))


@pytest.fixture(scope="session")
def reference_triangle():
    return build_mesh([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], [(0, 1, 2)])


def make_disc(n=4, side=2.0, space="s2", basis="lagrange", degree=1):
    mesh = structured_square(n, side=side)
    return Discretization(mesh, build_dofmap(mesh, space, basis, degree))


def random_states(rng, n, near_vacuum=False, gas=None):
    gas = gas or euler.GasModel()
    if near_vacuum:
        rho = 10.0 ** rng.uniform(-6, 0, n)
        rho_e = 10.0 ** rng.uniform(np.log10(10 * gas.e_floor), 0, n)
        u = rng.uniform(-3, 3, (n, 2))
    else:
        rho = rng.uniform(0.3, 2.0, n)
        p = rng.uniform(0.3, 2.0, n)
        rho_e = p / (gas.gamma - 1.0)
        u = rng.uniform(-1, 1, (n, 2))
    E = rho_e + 0.5 * rho * (u[:, 0] ** 2 + u[:, 1] ** 2)
    return np.stack([rho, rho * u[:, 0], rho * u[:, 1], E], axis=-1)


def smooth_field(disc, gas, amp=0.15):
    """Smooth periodic admissible field on the discretization's box."""
    (x0, x1, y0, y1) = disc.mesh.bbox
    kx = 2 * np.pi / (x1 - x0)
    ky = 2 * np.pi / (y1 - y0)

    def fn(x, y):
        rho = 1.0 + amp * np.sin(kx * x) * np.cos(ky * y)
        ux = 0.3 + amp * np.cos(kx * x)
        uy = -0.2 + amp * np.sin(ky * y)
        p = 1.0 + amp * np.cos(kx * x) * np.sin(ky * y)
        return euler.conserved(rho, ux, uy, p, gas)

    return disc.interpolate(fn)
