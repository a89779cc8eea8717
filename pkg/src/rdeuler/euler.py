"""Pointwise algebra for the 2D compressible Euler equations.

Conserved vectors are numpy arrays with a trailing axis of length 4
holding (rho, m_x, m_y, E).  All functions broadcast over leading axes,
so a whole field of states can be processed in one call.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonPositivePressure, VacuumState


@dataclass(frozen=True)
class GasModel:
    """Perfect-gas parameters and admissibility floors."""

    gamma: float = 1.4
    rho_floor: float = 1e-12
    e_floor: float = 1e-12

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1")


def conserved(rho, ux, uy, p, gas: GasModel):
    """Assemble (rho, m_x, m_y, E) from primitive values."""
    rho = np.asarray(rho, dtype=float)
    ux = np.asarray(ux, dtype=float)
    uy = np.asarray(uy, dtype=float)
    p = np.asarray(p, dtype=float)
    E = p / (gas.gamma - 1.0) + 0.5 * rho * (ux * ux + uy * uy)
    return np.stack(np.broadcast_arrays(rho, rho * ux, rho * uy, E), axis=-1)


def velocity(U):
    """Velocity vector m/rho, shape (..., 2)."""
    U = np.asarray(U, dtype=float)
    return U[..., 1:3] / U[..., 0:1]


def internal_energy(U):
    """Specific internal energy density rho*e = E - |m|^2/(2 rho)."""
    U = np.asarray(U, dtype=float)
    m2 = U[..., 1] ** 2 + U[..., 2] ** 2
    return U[..., 3] - 0.5 * m2 / U[..., 0]


def pressure(U, gas: GasModel, check=True):
    """Pressure p = (gamma-1) * rho*e of a perfect gas."""
    U = np.asarray(U, dtype=float)
    if check and np.any(~(U[..., 0] > gas.rho_floor)):
        raise VacuumState("density at or below floor")
    p = (gas.gamma - 1.0) * internal_energy(U)
    if check and np.any(~(p > 0.0)):
        raise NonPositivePressure("pressure not positive")
    return p


def sound_speed(U, gas: GasModel, check=True):
    return np.sqrt(gas.gamma * pressure(U, gas, check=check) / np.asarray(U)[..., 0])


def flux(U, gas: GasModel, check=True):
    """Euler flux table, shape (..., 4, 2).

    Column m holds (rho u_m, u_m m + p e_m, u_m (E + p)).
    """
    U = np.asarray(U, dtype=float)
    p = pressure(U, gas, check=check)
    rho = U[..., 0]
    mx = U[..., 1]
    my = U[..., 2]
    ux = mx / rho
    uy = my / rho
    Ep = U[..., 3] + p
    f = np.empty(U.shape + (2,))
    f[..., 0, 0] = mx
    f[..., 1, 0] = mx * ux + p
    f[..., 2, 0] = my * ux
    f[..., 3, 0] = ux * Ep
    f[..., 0, 1] = my
    f[..., 1, 1] = mx * uy
    f[..., 2, 1] = my * uy + p
    f[..., 3, 1] = uy * Ep
    return f


def entropy_eta(U, gas: GasModel, check=True):
    """Mathematical entropy eta = -rho s / (gamma - 1), s = log(p / rho^gamma)."""
    U = np.asarray(U, dtype=float)
    p = pressure(U, gas, check=check)
    rho = U[..., 0]
    s = np.log(p) - gas.gamma * np.log(rho)
    return -rho * s / (gas.gamma - 1.0)


def entropy_flux(U, gas: GasModel, check=True):
    """Entropy flux g = eta * u, shape (..., 2)."""
    eta = entropy_eta(U, gas, check=check)
    return eta[..., None] * velocity(U)


def entropy_potential(U):
    """Entropy potential rho*u, i.e. the momentum components."""
    return np.asarray(U, dtype=float)[..., 1:3].copy()


def entropy_vars(U, gas: GasModel, check=True):
    """Entropy variables V = d eta / d U, shape (..., 4)."""
    U = np.asarray(U, dtype=float)
    p = pressure(U, gas, check=check)
    rho = U[..., 0]
    g = gas.gamma
    s = np.log(p) - g * np.log(rho)
    u = U[..., 1:3] / rho[..., None]
    u2 = u[..., 0] ** 2 + u[..., 1] ** 2
    V = np.empty_like(U)
    V[..., 0] = g / (g - 1.0) - s / (g - 1.0) - rho * u2 / (2.0 * p)
    V[..., 1] = rho * u[..., 0] / p
    V[..., 2] = rho * u[..., 1] / p
    V[..., 3] = -rho / p
    return V


def state_from_entropy_vars(V, gas: GasModel):
    """Invert the entropy-variable map (useful to manufacture fields)."""
    V = np.asarray(V, dtype=float)
    g = gas.gamma
    rho_over_p = -V[..., 3]
    if np.any(~(rho_over_p > 0.0)):
        raise NonPositivePressure("V[3] must be negative")
    u = V[..., 1:3] / rho_over_p[..., None]
    u2 = u[..., 0] ** 2 + u[..., 1] ** 2
    s = g - (g - 1.0) * (V[..., 0] + 0.5 * rho_over_p * u2)
    # p / rho^gamma = exp(s) combined with rho/p known gives rho.
    rho = (rho_over_p * np.exp(s)) ** (-1.0 / (g - 1.0))
    p = rho / rho_over_p
    return conserved(rho, u[..., 0], u[..., 1], p, gas)


def entropy_hessian(U, gas: GasModel, step=1e-6):
    """Hessian of eta at a single state, by central differences of V."""
    U = np.asarray(U, dtype=float)
    A = np.empty((4, 4))
    for j in range(4):
        h = step * max(1.0, abs(U[j]))
        Up = U.copy()
        Um = U.copy()
        Up[j] += h
        Um[j] -= h
        A[:, j] = (entropy_vars(Up, gas) - entropy_vars(Um, gas)) / (2.0 * h)
    return A


def max_wavespeed(U, gas: GasModel, check=True):
    """|u| + a with sound speed a = sqrt(gamma p / rho)."""
    U = np.asarray(U, dtype=float)
    a = sound_speed(U, gas, check=check)
    u = U[..., 1:3] / U[..., 0:1]
    return np.hypot(u[..., 0], u[..., 1]) + a


def admissible(U, gas: GasModel):
    """Membership in the admissible set: rho and internal energy above floors.

    NaN or Inf entries yield False.
    """
    U = np.asarray(U, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        ok = np.isfinite(U).all(axis=-1)
        rho_ok = U[..., 0] >= gas.rho_floor
        e = U[..., 3] - 0.5 * (U[..., 1] ** 2 + U[..., 2] ** 2) / U[..., 0]
        e_ok = e >= gas.e_floor
    return ok & rho_ok & np.where(np.isfinite(e), e_ok, False)


def wu_shu_functional(U, v_star):
    """Linear functional (|v*|^2/2, -v*, 1) . U.

    Nonnegative for every velocity vector v* exactly when the internal
    energy of U is nonnegative; used as a half-space test for
    admissibility.
    """
    U = np.asarray(U, dtype=float)
    v = np.asarray(v_star, dtype=float)
    v2 = 0.5 * (v[..., 0] ** 2 + v[..., 1] ** 2)
    return (
        v2 * U[..., 0]
        - v[..., 0] * U[..., 1]
        - v[..., 1] * U[..., 2]
        + U[..., 3]
    )


def bernstein_admissible(dof_states, gas: GasModel):
    """True when every DOF state of an element is admissible.

    For Bernstein coefficients this is the convex sufficient condition:
    coefficientwise admissibility implies nonnegative density and
    internal energy of the reconstruction everywhere on the element.
    """
    return bool(np.all(admissible(np.asarray(dof_states, dtype=float), gas)))
