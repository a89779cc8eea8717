"""Element residual catalog.

Every residual splits an element's total boundary-flux integral into
per-DOF signals that sum back to that total.  The catalog covers the
pure (continuous) Galerkin form, Galerkin with gradient-jump
stabilization, the discontinuous form with a Rusanov interface flux,
the local Lax-Friedrichs distribution in its pointwise-flux and
interpolated-flux versions, and the nonlinear limited distribution
built on top of it.
"""

from dataclasses import dataclass, field

import numpy as np

from . import euler
from .discretization import Discretization
from .errors import ConfigError

BASES = ("galerkin", "galerkin_jump", "dg", "lxf", "limited_lxf")


@dataclass(frozen=True)
class Scheme:
    """Residual recipe: base distribution plus optional corrections."""

    base: str = "galerkin"
    correction: bool = False      # entropy correction term
    diffusion: bool = False       # entropy jump diffusion
    lambda_jump: float = None     # None: local max wavespeed
    zeta: float = 2.0
    flux_mode: str = "pointwise"  # "pointwise" | "interpolated" (lxf family)

    def __post_init__(self):
        if self.base not in BASES:
            raise ConfigError(f"unknown scheme base {self.base!r}")
        if self.flux_mode not in ("pointwise", "interpolated"):
            raise ConfigError(f"unknown flux mode {self.flux_mode!r}")
        if self.zeta < 2.0:
            raise ConfigError("zeta must be >= 2")

    @classmethod
    def parse(cls, text):
        """Parse strings like ``galerkin+ec+jump`` or ``lxf``."""
        parts = text.strip().lower().split("+")
        base, mods = parts[0], parts[1:]
        kwargs = {"base": base}
        for m in mods:
            if m == "ec":
                kwargs["correction"] = True
            elif m == "jump":
                kwargs["diffusion"] = True
            elif m == "interp":
                kwargs["flux_mode"] = "interpolated"
            else:
                raise ConfigError(f"unknown scheme modifier {m!r}")
        return cls(**kwargs)

    def label(self):
        s = self.base
        if self.correction:
            s += "+ec"
        if self.diffusion:
            s += "+jump"
        if self.flux_mode == "interpolated":
            s += "+interp"
        return s


@dataclass
class ElementResidual:
    """Per-DOF signals and element totals for one residual evaluation."""

    phi: np.ndarray          # (M, N_K, 4)
    total: np.ndarray        # (M, 4)
    scheme: str
    alpha: np.ndarray = field(default=None)   # (M,) for the LxF family


def rusanov_flux(U_L, U_R, n, gas):
    """Rusanov (local Lax-Friedrichs) numerical flux through normal n."""
    U_L = np.asarray(U_L, dtype=float)
    U_R = np.asarray(U_R, dtype=float)
    n = np.asarray(n, dtype=float)
    fL = euler.flux(U_L, gas)
    fR = euler.flux(U_R, gas)
    s = np.maximum(euler.max_wavespeed(U_L, gas), euler.max_wavespeed(U_R, gas))
    central = 0.5 * np.einsum("...ci,...i->...c", fL + fR, n)
    return central - 0.5 * s[..., None] * (U_R - U_L)


def interface_flux(disc: Discretization, gas, U_elem):
    """Numerical flux (already dotted with the left normal) per interface.

    Continuous spaces use the single-valued trace evaluated once from
    the left owner; discontinuous spaces use the Rusanov flux of the two
    traces.  Returns shape (E, nq, 4).
    """
    tL = disc.trace_L(U_elem)
    if disc.dofmap.space == "s2":
        f = euler.flux(tL, gas)
        return np.einsum("eqci,ei->eqc", f, disc.if_normal)
    tR = np.where(disc.if_has_right[:, None, None], disc.trace_R(U_elem), tL)
    return rusanov_flux(tL, tR, disc.if_normal[:, None, :], gas)


def boundary_totals(disc: Discretization, fnum):
    """Element totals of the boundary flux quadrature, shape (M, 4).

    One quadrature per interface feeds both owners with opposite signs,
    so the global sum telescopes to round-off.
    """
    w = disc.edge_weights
    T = disc.if_length[:, None] * np.tensordot(fnum, w, axes=([1], [0]))
    M = disc.mesh.n_tris
    out = np.zeros((M, 4))
    has_r = disc.if_has_right
    for c in range(4):
        out[:, c] = np.bincount(disc.if_left, weights=T[:, c], minlength=M)
        out[:, c] -= np.bincount(
            disc.if_right[has_r], weights=T[has_r, c], minlength=M
        )
    return out


def _galerkin_parts(disc: Discretization, gas, U_elem, fnum):
    """Boundary scatter and volume term of the Galerkin-form residual."""
    coef = np.matmul(disc.if_vals_L_wl, fnum)             # (E, N, 4)
    coef_R = np.matmul(disc.if_vals_R_wl, -fnum)
    bnd = disc.scatter_interface(coef, coef_R)
    Uq = disc.interior_field(U_elem)
    fq = euler.flux(Uq, gas)                              # (M, nq, 4, 2)
    M, nq = fq.shape[:2]
    f2 = fq.transpose(0, 1, 3, 2).reshape(M, nq * 2, 4)
    vol = np.matmul(disc.int_gradw_mat, f2)               # (M, N, 4)
    return bnd, vol


def galerkin_residual(disc: Discretization, gas, U) -> ElementResidual:
    """Galerkin distribution: oint phi f.n - int grad(phi).f per DOF."""
    U_elem = disc.elem_values(U)
    fnum = interface_flux(disc, gas, U_elem)
    bnd, vol = _galerkin_parts(disc, gas, U_elem, fnum)
    return ElementResidual(
        phi=bnd - vol, total=boundary_totals(disc, fnum), scheme="galerkin"
    )


def gradient_jump_terms(disc: Discretization, U_elem, coeff):
    """Interface penalty on gradient jumps, per-DOF, conservative per element.

    For each interface the jump of the field gradient is tested against
    minus the own-side basis gradient on the left and the own-side basis
    gradient on the right; each element's contributions then sum to zero
    because the basis gradients do.  ``coeff`` has shape (E,) and carries
    the lambda_e h_e^2 weight.
    """
    jump = disc.trace_grad_R(U_elem) - disc.trace_grad_L(U_elem)   # (E, nq, C, 2)
    w = disc.edge_weights
    jw = jump * w[None, :, None, None]
    # contract gradients against the jump over (q, i)
    E, nq, C = jump.shape[:3]
    jw2 = jw.transpose(0, 1, 3, 2).reshape(E, nq * 2, C)
    gL = disc.if_grads_L.transpose(0, 2, 1, 3).reshape(E, -1, nq * 2)
    gR = disc.if_grads_R.transpose(0, 2, 1, 3).reshape(E, -1, nq * 2)
    base = (coeff * disc.if_length)[:, None, None]
    con_L = -np.matmul(gL, jw2) * base
    con_R = np.matmul(gR, jw2) * base
    return disc.scatter_interface(con_L, con_R)


def galerkin_jump_residual(disc: Discretization, gas, U, lambda_e=1.0) -> ElementResidual:
    """Galerkin distribution plus lambda_e h_e^2 gradient-jump stabilization."""
    if disc.dofmap.space != "s2":
        raise ConfigError("jump-stabilized Galerkin needs the continuous space")
    base = galerkin_residual(disc, gas, U)
    coeff = np.where(disc.if_has_right, lambda_e * disc.if_length**2, 0.0)
    U_elem = disc.elem_values(U)
    jumps = gradient_jump_terms(disc, U_elem, coeff)
    return ElementResidual(
        phi=base.phi + jumps, total=base.total, scheme="galerkin_jump"
    )


def dg_residual(disc: Discretization, gas, U) -> ElementResidual:
    """Discontinuous distribution with the Rusanov interface flux."""
    if disc.dofmap.space != "s1":
        raise ConfigError("the discontinuous distribution needs the S1 space")
    U_elem = disc.elem_values(U)
    fnum = interface_flux(disc, gas, U_elem)
    bnd, vol = _galerkin_parts(disc, gas, U_elem, fnum)
    return ElementResidual(phi=bnd - vol, total=boundary_totals(disc, fnum), scheme="dg")


def _interpolated_lxf(disc: Discretization, gas, U_elem, alpha):
    f_dofs = euler.flux(U_elem, gas)                               # (M, N, 4, 2)
    div_part = np.einsum("mnki,mkci->mnc", disc.phi_grad_integrals, f_dofs)
    total = np.einsum("mki,mkci->mc", disc.grad_integrals, f_dofs)
    dev = U_elem - U_elem.mean(axis=1, keepdims=True)
    return div_part + alpha[:, None, None] * dev, total


def lxf_residual(disc: Discretization, gas, U, alpha, flux_mode="pointwise") -> ElementResidual:
    """Local Lax-Friedrichs distribution total/N_K + alpha (U_sigma - mean).

    ``pointwise`` evaluates the element total by boundary quadrature of
    the space's base flux; ``interpolated`` uses the nodal flux
    interpolant, which is the form covered by the explicit positivity
    bound.
    """
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (disc.mesh.n_tris,))
    if np.any(alpha < 0):
        raise ValueError("alpha must be nonnegative")
    U_elem = disc.elem_values(U)
    if flux_mode == "interpolated":
        phi, total = _interpolated_lxf(disc, gas, U_elem, alpha)
        return ElementResidual(phi=phi, total=total, scheme="lxf", alpha=alpha)
    fnum = interface_flux(disc, gas, U_elem)
    total = boundary_totals(disc, fnum)
    dev = U_elem - U_elem.mean(axis=1, keepdims=True)
    phi = total[:, None, :] / disc.dofmap.n_local + alpha[:, None, None] * dev
    return ElementResidual(phi=phi, total=total, scheme="lxf", alpha=alpha)


def beta_coefficients(x, guard=1e-14):
    """Limiter weights max(x,0)/sum(max(x,0)) along axis 0.

    Returns (beta, valid) where ``valid`` is False when the positive
    part sums below the guard and the caller must fall back.
    """
    x = np.asarray(x, dtype=float)
    pos = np.maximum(x, 0.0)
    s = pos.sum(axis=0)
    valid = s >= guard
    beta = pos / np.where(valid, s, 1.0)
    return beta, valid


def limited_lxf_residual(
    disc: Discretization, gas, U, alpha, flux_mode="pointwise", guard=1e-14
) -> ElementResidual:
    """Limited distribution beta_sigma * total, componentwise.

    Ratios x_sigma = phi_sigma^LxF / total are limited to nonnegative
    weights summing to one.  Components whose element total falls below
    the guard, or whose positive-part sum degenerates, keep the
    unlimited LxF distribution.
    """
    base = lxf_residual(disc, gas, U, alpha, flux_mode=flux_mode)
    total = base.total                                             # (M, 4)
    small = np.abs(total) < guard
    denom = np.where(small, 1.0, total)
    x = base.phi / denom[:, None, :]
    beta, valid = beta_coefficients(np.moveaxis(x, 1, 0), guard=guard)
    beta = np.moveaxis(beta, 0, 1)
    limited = beta * total[:, None, :]
    use_lxf = (small | ~valid)[:, None, :]
    phi = np.where(use_lxf, base.phi, limited)
    return ElementResidual(phi=phi, total=total, scheme="limited_lxf", alpha=base.alpha)


def conservation_defect(disc: Discretization, gas, U, res: ElementResidual):
    """Scaled distance between the per-DOF sum and the element flux total.

    The scale is the boundary quadrature of the flux magnitude, floored
    at one so that injected O(1) errors read off directly.
    """
    U_elem = disc.elem_values(U)
    fnum = interface_flux(disc, gas, U_elem)
    mag = disc.if_length[:, None] * np.einsum(
        "q,eq->e", disc.edge_weights, np.linalg.norm(fnum, axis=-1)
    )[:, None]
    M = disc.mesh.n_tris
    scale = np.zeros((M, 1))
    np.add.at(scale, disc.if_left, mag)
    has_r = disc.if_has_right
    np.add.at(scale, disc.if_right[has_r], mag[has_r])
    scale = np.maximum(scale[:, 0], 1.0)
    defect = np.linalg.norm(res.phi.sum(axis=1) - res.total, axis=-1)
    return defect / scale


def base_residual(disc: Discretization, gas, U, scheme: Scheme, alpha=None) -> ElementResidual:
    """Dispatch on the scheme base; alpha is required for the LxF family."""
    if scheme.base == "galerkin":
        return galerkin_residual(disc, gas, U)
    if scheme.base == "galerkin_jump":
        lam = 1.0 if scheme.lambda_jump is None else scheme.lambda_jump
        return galerkin_jump_residual(disc, gas, U, lambda_e=lam)
    if scheme.base == "dg":
        return dg_residual(disc, gas, U)
    if alpha is None:
        raise ValueError("LxF-family schemes need the dissipation bound alpha")
    if scheme.base == "lxf":
        return lxf_residual(disc, gas, U, alpha, flux_mode=scheme.flux_mode)
    return limited_lxf_residual(disc, gas, U, alpha, flux_mode=scheme.flux_mode)
