"""Dissipation-coefficient bounds and the time-step restriction.

Three lower bounds for the LxF coefficient alpha_K are provided, one
per analyzed configuration: interpolated nodal flux (spectral radius
against the scaled normals omega), pointwise quadrature flux (wavespeed
times the norms of the N_sigma_sigma' geometry vectors), and the
implicit density solve (sign condition on the off-diagonal entries).
The admissible time step turns alpha into a CFL bound under which the
forward-Euler LxF update is a convex combination of admissible states.
"""

from dataclasses import dataclass

import numpy as np

from . import euler
from .discretization import Discretization
from .errors import CFLViolation, VacuumState


@dataclass
class AlphaBound:
    value: np.ndarray        # (M,)
    case: str                # Interpolated | NonInterpolated | Implicit
    geometry: np.ndarray     # (M,) max geometric factor norm used


def scaled_normals(disc: Discretization):
    """omega_{sigma sigma'} = 2 N_K int_K phi_sigma grad(phi_sigma'), (M, N, N, 2)."""
    return 2.0 * disc.dofmap.n_local * disc.phi_grad_integrals


def _check_admissible(U, gas):
    if not np.all(euler.admissible(U, gas)):
        raise VacuumState("inadmissible state in alpha bound")


def alpha_interpolated(disc: Discretization, gas, U) -> AlphaBound:
    """Upper bound on the spectral radius of A(U).omega over DOFs and pairs.

    The Euler eigenvalues along a direction n are u.n and u.n +- a|n|,
    so (|u.unit(omega)| + a) * |omega| dominates them; the maximum runs
    over every DOF state of the element and every (sigma, sigma') pair.
    """
    U_elem = disc.elem_values(U)
    _check_admissible(U_elem, gas)
    omega = scaled_normals(disc)                                   # (M,N,N,2)
    norms = np.linalg.norm(omega, axis=-1)                         # (M,N,N)
    safe = np.where(norms > 0, norms, 1.0)
    unit = omega / safe[..., None]
    u = euler.velocity(U_elem)                                     # (M,N,2)
    a = euler.sound_speed(U_elem, gas)                             # (M,N)
    proj = np.abs(np.einsum("mdi,mnki->mdnk", u, unit)) + a[:, :, None, None]
    alpha = np.max(proj * norms[:, None, :, :], axis=(1, 2, 3))
    return AlphaBound(value=alpha, case="Interpolated", geometry=norms.max(axis=(1, 2)))


def geometry_vectors(disc: Discretization):
    """N_{sigma sigma'} = -int grad(phi_sigma) phi_sigma' + oint phi phi' n."""
    return -disc.phi_grad_integrals.swapaxes(1, 2) + disc.phi_phi_normal_integrals


def _element_max_wavespeed(disc: Discretization, gas, U_elem):
    """Max wavespeed over DOF values, interior and edge quadrature points."""
    s = euler.max_wavespeed(U_elem, gas).max(axis=1)
    s = np.maximum(s, euler.max_wavespeed(disc.interior_field(U_elem), gas).max(axis=1))
    for loc in range(3):
        Ue = np.einsum("qn,mnc->mqc", disc.edge_vals[loc], U_elem)
        s = np.maximum(s, euler.max_wavespeed(Ue, gas).max(axis=1))
    return s


def alpha_noninterpolated(disc: Discretization, gas, U, safety=1.0) -> AlphaBound:
    """Wavespeed maximum times the largest ||N_{sigma sigma'}||."""
    U_elem = disc.elem_values(U)
    _check_admissible(U_elem, gas)
    norms = np.linalg.norm(geometry_vectors(disc), axis=-1).max(axis=(1, 2))
    s = _element_max_wavespeed(disc, gas, U_elem)
    return AlphaBound(value=safety * s * norms, case="NonInterpolated", geometry=norms)


def alpha_implicit(disc: Discretization, gas, U) -> AlphaBound:
    """Sign-condition bound for the implicit density system.

    The mean-value correction splits as alpha/N_K per off-diagonal
    entry, so alpha must dominate N_K times the advective coefficient
    ||int phi grad(phi')|| times the wavespeed bound on the velocity.
    """
    U_elem = disc.elem_values(U)
    norms = np.linalg.norm(disc.phi_grad_integrals, axis=-1).max(axis=(1, 2))
    s = _element_max_wavespeed(disc, gas, U_elem)
    nk = disc.dofmap.n_local
    return AlphaBound(value=nk * s * norms, case="Implicit", geometry=norms)


def admissible_timestep(disc: Discretization, alpha, cfl, dt_max=None):
    """cfl * min over elements of |K_sigma| / (N_K alpha_K).

    Elements with vanishing alpha impose no constraint; a uniformly
    constant flow falls back to cfl * dt_max.
    """
    if not 0.0 < cfl <= 1.0:
        raise ValueError("cfl must lie in (0, 1]")
    alpha = np.asarray(getattr(alpha, "value", alpha), dtype=float)
    nk = disc.dofmap.n_local
    k_sigma = disc.dual.k_sigma
    if dt_max is None:
        (x0, x1, y0, y1) = disc.mesh.bbox
        dt_max = 1e-2 * float(np.hypot(x1 - x0, y1 - y0))
    active = alpha > 1e-300
    if not np.any(active):
        return cfl * dt_max
    return cfl * float(np.min(k_sigma[active] / (nk * alpha[active])))


def split_1d_oracle(U_left, U_mid, U_right, nu, ratio, gas):
    """One LLF update of the middle state, as the mean of two split steps.

    The flux splitting f +- nu U is admissibility preserving when nu
    dominates the local wavespeeds and 2 nu ratio <= 1; their average is
    the classical three-point LLF update.
    """
    states = np.array([U_left, U_mid, U_right], dtype=float)
    if not np.all(euler.admissible(states, gas)):
        raise VacuumState("oracle needs admissible input states")
    if nu < euler.max_wavespeed(states, gas).max() - 1e-13:
        raise CFLViolation("nu below the local wavespeed maximum")
    if 2.0 * nu * ratio > 1.0 + 1e-13:
        raise CFLViolation("2 nu dt/dx exceeds one")
    f = euler.flux(states, gas)[..., 0]          # x-direction columns
    fl, fm, fr = f
    Ul, Um, Ur = states
    up = Um - ratio * ((fm + nu * Um) - (fl + nu * Ul))
    down = Um - ratio * ((fr - nu * Ur) - (fm - nu * Um))
    return 0.5 * (up + down)
