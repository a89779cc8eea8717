"""Entropy correction and entropy jump diffusion.

The correction redistributes each element's entropy-balance mismatch
E = oint g_num - sum <V_sigma, Phi_sigma> along the deviations of the
entropy variables, which restores the discrete entropy equality without
touching the element total.  The diffusion term adds, per interface, a
nonnegative entropy production proportional to the squared jump of
grad(V) (continuous space) or of V itself (discontinuous space); each
owner element is asked to carry half of it through the same
deviation-based redistribution, with the coefficient capped at the
penalty's magnitude scale for boundedness.  Element sums stay zero and
the achieved production is nonnegative, so the per-element entropy
inequality holds exactly; where the cap is inactive the balance is an
equality.
"""

from dataclasses import dataclass

import numpy as np

from . import euler
from .discretization import Discretization
from .residuals import ElementResidual, Scheme, base_residual

DENOM_GUARD = 1e-14

# Default interface-diffusion coefficient: this fraction of the local
# maximum wavespeed.  The bare wavespeed makes the penalty explosively
# stiff for explicit stepping on under-resolved data; values of order
# 0.01 are the usual range for gradient-jump stabilization constants.
JUMP_COEFF = 0.005


def entropy_numerical_flux(U_L, U_R, n, gas):
    """Rusanov-form numerical entropy flux, consistent with g = eta u."""
    U_L = np.asarray(U_L, dtype=float)
    U_R = np.asarray(U_R, dtype=float)
    n = np.asarray(n, dtype=float)
    gL = euler.entropy_flux(U_L, gas)
    gR = euler.entropy_flux(U_R, gas)
    s = np.maximum(euler.max_wavespeed(U_L, gas), euler.max_wavespeed(U_R, gas))
    central = 0.5 * np.einsum("...i,...i->...", gL + gR, n)
    return central - 0.5 * s * (euler.entropy_eta(U_R, gas) - euler.entropy_eta(U_L, gas))


def interface_entropy_flux(disc: Discretization, gas, U_elem):
    """g_num per interface quadrature point (E, nq), left normal."""
    tL = disc.trace_L(U_elem)
    if disc.dofmap.space == "s2":
        g = euler.entropy_flux(tL, gas)
        return np.einsum("eqi,ei->eq", g, disc.if_normal)
    tR = np.where(disc.if_has_right[:, None, None], disc.trace_R(U_elem), tL)
    return entropy_numerical_flux(tL, tR, disc.if_normal[:, None, :], gas)


def element_entropy_boundary(disc: Discretization, gas, U_elem):
    """oint_dK g_num per element, (M,); telescopes globally."""
    gq = interface_entropy_flux(disc, gas, U_elem)
    G = disc.if_length * (gq @ disc.edge_weights)
    M = disc.mesh.n_tris
    has_r = disc.if_has_right
    out = np.bincount(disc.if_left, weights=G, minlength=M)
    out -= np.bincount(disc.if_right[has_r], weights=G[has_r], minlength=M)
    return out


def _deviations(V_elem):
    dev = V_elem - V_elem.mean(axis=1, keepdims=True)
    denom = np.einsum("mnc,mnc->m", dev, dev)
    scale = np.einsum("mnc,mnc->m", V_elem, V_elem) / V_elem.shape[1]
    ok = denom >= DENOM_GUARD * np.maximum(scale, 1.0)
    return dev, denom, ok


def correction_term(V_elem, phi, g_boundary):
    """Entropy correction r_sigma = alpha (V_sigma - mean V).

    alpha matches the mismatch E = g_boundary - sum<V, phi>; the guard
    zeroes the correction on (numerically) constant elements, where E
    vanishes as well.  Returns (r, alpha, E).
    """
    V_elem = np.asarray(V_elem, dtype=float)
    phi = np.asarray(phi, dtype=float)
    E = np.asarray(g_boundary, dtype=float) - np.einsum("mnc,mnc->m", V_elem, phi)
    dev, denom, ok = _deviations(V_elem)
    alpha = np.where(ok, E / np.where(ok, denom, 1.0), 0.0)
    return alpha[:, None, None] * dev, alpha, E


def edge_jump_production(disc: Discretization, gas, U_elem, V_elem, lam=None, zeta=2.0):
    """Entropy production per interface, (E,), plus the lambda_e used.

    Continuous space: lam_e h_e^zeta oint ||[grad V]||^2; discontinuous
    space: lam_e oint ||[V]||^2.  lam defaults to the maximum wavespeed
    over the interface traces.
    """
    w = disc.edge_weights
    if lam is None:
        tL = disc.trace_L(U_elem)
        lam_e = euler.max_wavespeed(tL, gas).max(axis=1)
        has_r = disc.if_has_right
        if np.any(has_r):
            tR = disc.trace_R(U_elem)
            sR = euler.max_wavespeed(
                np.where(has_r[:, None, None], tR, tL), gas
            ).max(axis=1)
            lam_e = np.maximum(lam_e, sR)
        lam_e = JUMP_COEFF * lam_e
    else:
        lam_e = np.full(disc.if_length.shape[0], float(lam))
    if disc.dofmap.space == "s2":
        jump = disc.trace_grad_R(V_elem) - disc.trace_grad_L(V_elem)  # (E,nq,4,2)
        sq = (jump * jump).sum(axis=(2, 3)) @ w
        D = lam_e * disc.if_h**zeta * disc.if_length * sq
    else:
        jump = disc.trace_R(V_elem) - disc.trace_L(V_elem)            # (E,nq,4)
        sq = (jump * jump).sum(axis=2) @ w
        D = lam_e * disc.if_length * sq
    D = np.where(disc.if_has_right, D, 0.0)
    return D, lam_e


def distribute_production(V_elem, target, a_max=None):
    """Per-DOF signals a(V - mean V) carrying a prescribed entropy production.

    Conservative per element by construction.  The coefficient is capped
    at ``a_max`` (the magnitude scale of a gradient-jump penalty), which
    keeps the term bounded on elements whose internal variation is small
    compared to the neighboring jumps; the achieved production
    a * sum||V - mean V||^2 <= target is reported alongside.
    """
    dev, denom, ok = _deviations(V_elem)
    a = np.where(ok, np.asarray(target) / np.where(ok, denom, 1.0), 0.0)
    if a_max is not None:
        a = np.minimum(a, a_max)
    psi = a[:, None, None] * dev
    achieved = a * denom
    return psi, achieved


def jump_diffusion(disc: Discretization, gas, U, lam=None, zeta=2.0, cap=1.0,
                   U_elem=None, V_elem=None):
    """Entropy-dissipative interface diffusion.

    Returns (psi, achieved, edge_production): per-DOF signals (M, N, 4)
    with zero element sums, the per-element achieved production, and the
    per-interface target production.  Each owner element is asked to
    carry half of its interfaces' production, up to the capped
    redistribution coefficient.
    """
    if U_elem is None:
        U_elem = disc.elem_values(U)
    if V_elem is None:
        V_elem = euler.entropy_vars(U_elem, gas)
    D, lam_e = edge_jump_production(disc, gas, U_elem, V_elem, lam=lam, zeta=zeta)
    M = disc.mesh.n_tris
    has_r = disc.if_has_right
    share = np.bincount(disc.if_left, weights=0.5 * D, minlength=M)
    share += np.bincount(disc.if_right[has_r], weights=0.5 * D[has_r], minlength=M)
    lam_k = np.zeros(M)
    np.maximum.at(lam_k, disc.if_left, lam_e)
    np.maximum.at(lam_k, disc.if_right[has_r], lam_e[has_r])
    a_max = cap * lam_k * disc.mesh.diameters
    psi, achieved = distribute_production(V_elem, share, a_max=a_max)
    return psi, achieved, D


@dataclass
class CorrectedResidual:
    base: ElementResidual
    correction: np.ndarray        # (M, N, 4)
    diffusion: np.ndarray         # (M, N, 4)
    theta: np.ndarray             # (M, N, 4)
    e_corr: np.ndarray            # (M,)
    alpha_corr: np.ndarray        # (M,)
    g_boundary: np.ndarray        # (M,)
    production: np.ndarray        # (M,) achieved entropy production
    edge_production: np.ndarray   # (E,)


def corrected_residual(disc: Discretization, gas, U, scheme: Scheme, alpha=None):
    """Base residual plus entropy correction and jump diffusion."""
    base = base_residual(disc, gas, U, scheme, alpha=alpha)
    U_elem = disc.elem_values(U)
    V_elem = euler.entropy_vars(U_elem, gas)
    g_bnd = element_entropy_boundary(disc, gas, U_elem)
    M = base.phi.shape[0]
    r = np.zeros_like(base.phi)
    e_corr = np.zeros(M)
    alpha_corr = np.zeros(M)
    if scheme.correction:
        r, alpha_corr, e_corr = correction_term(V_elem, base.phi, g_bnd)
    psi = np.zeros_like(base.phi)
    production = np.zeros(M)
    edge_production = np.zeros(disc.if_length.shape[0])
    if scheme.diffusion:
        psi, production, edge_production = jump_diffusion(
            disc, gas, U, lam=scheme.lambda_jump, zeta=scheme.zeta,
            U_elem=U_elem, V_elem=V_elem,
        )
    return CorrectedResidual(
        base=base,
        correction=r,
        diffusion=psi,
        theta=base.phi + r + psi,
        e_corr=e_corr,
        alpha_corr=alpha_corr,
        g_boundary=g_bnd,
        production=production,
        edge_production=edge_production,
    )
