"""Right-hand-side assembly and time integrators.

Assembly is two-phase: per-element residual evaluation (vectorized over
elements) followed by an ordered scatter into the global DOF vector, so
results are bitwise reproducible.  Forward Euler and the two-stage SSP
Runge-Kutta method advance the semidiscrete system; the implicit Euler
step solves the interpolated-flux LxF scheme through Picard iterations
preconditioned by a frozen-velocity M-matrix.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import euler, positivity
from .discretization import Discretization
from .errors import AlphaTooSmall, PicardDivergence
from .residuals import Scheme
from .stabilization import corrected_residual


@dataclass
class FieldState:
    t: float
    U: np.ndarray            # (n_dofs, 4)
    disc: Discretization
    provenance: str = "init"

    def copy_with(self, **kw):
        return replace(self, **kw)


def conserved_totals(disc: Discretization, U):
    """Sum of |C_sigma| U_sigma, the discretely conserved quantities."""
    return np.einsum("s,sc->c", disc.dual.c_sigma, np.asarray(U))


def scheme_alpha(disc: Discretization, gas, U, scheme: Scheme):
    """Dissipation bound matching the scheme's flux mode (LxF family only)."""
    if scheme.base not in ("lxf", "limited_lxf"):
        return None
    if scheme.flux_mode == "interpolated":
        return positivity.alpha_interpolated(disc, gas, U).value
    return positivity.alpha_noninterpolated(disc, gas, U).value


def element_theta(disc: Discretization, gas, U, scheme: Scheme, alpha=None):
    """Corrected per-element residuals for one scheme."""
    if alpha is None:
        alpha = scheme_alpha(disc, gas, U, scheme)
    return corrected_residual(disc, gas, U, scheme, alpha=alpha)


def scatter_residuals(disc: Discretization, theta):
    """Ordered gather of per-element signals into the global DOF vector."""
    n = disc.dofmap.n_dofs
    flat = disc.dofmap.elem_dofs.ravel()
    t2 = theta.reshape(-1, 4)
    return np.column_stack(
        [np.bincount(flat, weights=t2[:, c], minlength=n) for c in range(4)]
    )


def assemble_rhs(disc: Discretization, gas, U, scheme, levels=None):
    """Global residual sum R_sigma = sum over owner elements of theta.

    ``U`` may be a FieldState or a DOF array; ``scheme`` is a single
    Scheme or, with ``levels`` given, a cascade list indexed per element.
    """
    U = getattr(U, "U", U)
    if levels is None:
        theta = element_theta(disc, gas, U, scheme).theta
    else:
        theta = mixed_theta(disc, gas, U, scheme, levels)
    return scatter_residuals(disc, theta)


def mixed_theta(disc: Discretization, gas, U, cascade, levels):
    """Per-element residuals with a cascade level chosen per element."""
    theta = None
    for lv in np.unique(levels):
        res = element_theta(disc, gas, U, cascade[int(lv)]).theta
        if theta is None:
            theta = res.copy()
        else:
            pick = levels == lv
            theta[pick] = res[pick]
    return theta


def forward_euler_step(state: FieldState, scheme, dt, gas, levels=None) -> FieldState:
    disc = state.disc
    if levels is None:
        R = scatter_residuals(disc, element_theta(disc, gas, state.U, scheme).theta)
    else:
        R = scatter_residuals(disc, mixed_theta(disc, gas, state.U, scheme, levels))
    U = state.U - (dt / disc.dual.c_sigma)[:, None] * R
    return FieldState(t=state.t + dt, U=U, disc=disc, provenance="fe")


def ssp_rk2_step(state: FieldState, scheme, dt, gas, levels=None) -> FieldState:
    """Heun form: average of the state and a doubly advanced Euler stage."""
    s1 = forward_euler_step(state, scheme, dt, gas, levels=levels)
    s2 = forward_euler_step(s1, scheme, dt, gas, levels=levels)
    U = 0.5 * (state.U + s2.U)
    return FieldState(t=state.t + dt, U=U, disc=state.disc, provenance="ssprk2")


@dataclass
class DensitySystem:
    matrix: sp.csr_matrix     # (n_dofs, n_dofs)
    rhs: np.ndarray           # |C_sigma| rho^n
    dt: float
    alpha: np.ndarray

    def solve(self):
        return spla.spsolve(self.matrix, self.rhs)

    def row_sums(self):
        return np.asarray(self.matrix.sum(axis=1)).ravel()


def _advection_coefficients(disc: Discretization, alpha, u_frozen):
    """Element tables c[m, n, k] of the frozen-velocity LxF operator.

    The advective part contracts int phi grad(phi') with the element
    mean of the frozen velocity (so rows sum to zero for any data); the
    LxF correction adds alpha (delta - 1/N_K).
    """
    u_elem = u_frozen[disc.dofmap.elem_dofs]            # (M, N, 2)
    u_bar = u_elem.mean(axis=1)                         # (M, 2)
    adv = np.einsum("mnki,mi->mnk", disc.phi_grad_integrals, u_bar)
    nk = disc.dofmap.n_local
    corr = np.eye(nk) - 1.0 / nk
    return adv + alpha[:, None, None] * corr


def assemble_density_system(disc: Discretization, gas, U, dt, alpha, u_frozen=None):
    """Implicit-Euler density matrix with frozen velocities.

    Diagonal entries are |C_sigma| plus a nonnegative dissipation term,
    off-diagonals must come out nonpositive (otherwise AlphaTooSmall),
    and every row sums to |C_sigma| exactly.
    """
    U = np.asarray(U, dtype=float)
    alpha = np.asarray(getattr(alpha, "value", alpha), dtype=float)
    alpha = np.broadcast_to(alpha, (disc.mesh.n_tris,))
    if u_frozen is None:
        u_frozen = euler.velocity(U)
    c = _advection_coefficients(disc, alpha, u_frozen)
    nk = disc.dofmap.n_local
    mask_off = ~np.eye(nk, dtype=bool)
    if np.any(c[:, mask_off] > 1e-13 * np.maximum(alpha, 1.0)[:, None]):
        raise AlphaTooSmall("off-diagonal sign condition violated")
    dofs = disc.dofmap.elem_dofs
    rows = np.repeat(dofs, nk, axis=1).ravel()
    cols = np.tile(dofs, (1, nk)).ravel()
    data = dt * c.reshape(disc.mesh.n_tris, -1).ravel()
    n = disc.dofmap.n_dofs
    mat = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    mat = mat + sp.diags(disc.dual.c_sigma)
    return DensitySystem(matrix=mat, rhs=disc.dual.c_sigma * U[:, 0], dt=dt, alpha=alpha)


def implicit_euler_step(
    state: FieldState,
    dt,
    gas,
    alpha=None,
    tol=1e-10,
    max_iter=50,
) -> FieldState:
    """Implicit Euler for the interpolated-flux LxF scheme.

    Picard iterations solve the frozen-velocity M-matrix system with a
    defect-correction right-hand side; the first sweep omits the defect,
    which makes the density update a pure M-matrix solve and hence
    positive.  At the fixed point |C|(U - U^n) + dt R(U) = 0 holds for
    the true nonlinear residual.
    """
    disc = state.disc
    Un = state.U
    scheme = Scheme(base="lxf", flux_mode="interpolated")
    if alpha is None:
        alpha = positivity.alpha_interpolated(disc, gas, Un).value
    else:
        alpha = np.broadcast_to(
            np.asarray(getattr(alpha, "value", alpha), dtype=float),
            (disc.mesh.n_tris,),
        )
    imp_alpha = positivity.alpha_implicit(disc, gas, Un).value
    alpha = np.maximum(alpha, imp_alpha)

    c = _advection_coefficients(disc, alpha, euler.velocity(Un))
    nk = disc.dofmap.n_local
    dofs = disc.dofmap.elem_dofs
    rows = np.repeat(dofs, nk, axis=1).ravel()
    cols = np.tile(dofs, (1, nk)).ravel()
    n = disc.dofmap.n_dofs
    A = sp.coo_matrix(
        (c.reshape(disc.mesh.n_tris, -1).ravel(), (rows, cols)), shape=(n, n)
    ).tocsr()
    Mmat = sp.diags(disc.dual.c_sigma) + dt * A
    lu = spla.splu(Mmat.tocsc())

    csig = disc.dual.c_sigma[:, None]
    scale = max(float(np.max(np.abs(Un))), 1e-300)
    Uk = Un.copy()
    defect = np.zeros_like(Un)
    for it in range(max_iter):
        rhs = csig * Un - dt * defect
        X = np.column_stack([lu.solve(rhs[:, comp]) for comp in range(4)])
        if np.any(X[:, 0] <= 0.0):
            # damp toward the previous (positive-density) iterate
            theta = 1.0
            for _ in range(40):
                theta *= 0.5
                Xd = theta * X + (1.0 - theta) * Uk
                if np.all(Xd[:, 0] > 0.0):
                    X = Xd
                    break
            else:
                raise PicardDivergence("density positivity lost in Picard sweep")
        change = float(np.max(np.abs(X - Uk))) / scale
        Uk = X
        R = scatter_residuals(
            disc, element_theta(disc, gas, Uk, scheme, alpha=alpha).theta
        )
        defect = R - (A @ Uk)
        nonlinear = float(np.max(np.abs(csig * (Uk - Un) + dt * R))) / max(
            float(np.max(np.abs(csig * Un))), 1e-300
        )
        if change <= tol or nonlinear <= tol:
            return FieldState(t=state.t + dt, U=Uk, disc=disc, provenance="implicit")
    raise PicardDivergence(f"no contraction after {max_iter} sweeps")
