"""Run diagnostics: weak-BV norm, consistency errors, entropy budget,
entropy-production monitor, Cesaro averages and error norms.

The consistency decomposition follows a fixed discrete-time convention:
time integrals use the rectangle rule at the stage-start state, the
test-function time derivative is folded exactly as a telescoping sum,
and the lumped pairing against the piecewise-constant shadow of the test
function uses the dual volumes.  Under these conventions the three terms
for density and momentum reproduce the directly evaluated weak-form
defect to round-off, which is asserted by the test suite.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import euler
from .discretization import Discretization
from .errors import MeshMismatch
from .residuals import dg_residual, galerkin_residual
from .stepping import element_theta


@dataclass
class RunRecord:
    """Every-step snapshot trail of one run, for post-processing."""

    disc: Discretization
    gas: euler.GasModel
    scheme: object
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    dts: list = field(default_factory=list)


def weak_bv_norm(disc: Discretization, gas, U, lam=1.0, zeta=2.0):
    """Edge-jump seminorm (squared): sum_e lam h_e^zeta d oint ||[grad V]||^2."""
    U_elem = disc.elem_values(U)
    V_elem = euler.entropy_vars(U_elem, gas)
    jump = disc.trace_grad_R(V_elem) - disc.trace_grad_L(V_elem)
    sq = np.einsum("q,eqci,eqci->e", disc.edge_weights, jump, jump)
    d = 2.0
    contrib = lam * disc.if_h**zeta * d * disc.if_length * sq
    return float(np.sum(np.where(disc.if_has_right, contrib, 0.0)))


def galerkin_form_residual(disc: Discretization, gas, U):
    if disc.dofmap.space == "s2":
        return galerkin_residual(disc, gas, U).phi
    return dg_residual(disc, gas, U).phi


def _phi_at(phi, t, X):
    return np.asarray(phi(t, X[..., 0], X[..., 1]), dtype=float)


def _volume_quad(disc, integrand_q):
    """sum_K |K| sum_q w integrand(x_q); integrand shape (M, nq, ...)."""
    return float(
        np.sum(
            disc.mesh.areas
            * np.einsum("q,mq->m", disc.int_weights, integrand_q)
        )
    )


def _component_slice(component):
    if component == "rho":
        return [0]
    if component == "m":
        return [1, 2]
    raise ValueError("component must be 'rho', 'm' or 'eta'")


def weak_form_defect(run: RunRecord, phi, grad_phi, component):
    """Directly evaluated weak-form defect, the oracle the terms must match.

    D = [Q(U phi)]_0^T - sum_n Q(U^{n+1}(phi^{n+1}-phi^n))
        - sum_n dt_n Q(f(U^n) : grad phi).
    """
    disc, gas = run.disc, run.gas
    comps = _component_slice(component)
    X = disc.int_phys
    total = 0.0
    for i, n in ((1, len(run.states) - 1), (-1, 0)):
        Uq = disc.interior_field(disc.elem_values(run.states[n]))
        ph = _phi_at(phi, run.times[n], X)
        if component == "m":
            total += i * _volume_quad(disc, np.einsum("mqc,mqc->mq", Uq[..., 1:3], ph))
        else:
            total += i * _volume_quad(disc, Uq[..., 0] * ph)
    for n, dt in enumerate(run.dts):
        Uq1 = disc.interior_field(disc.elem_values(run.states[n + 1]))
        dph = _phi_at(phi, run.times[n + 1], X) - _phi_at(phi, run.times[n], X)
        if component == "m":
            total -= _volume_quad(disc, np.einsum("mqc,mqc->mq", Uq1[..., 1:3], dph))
        else:
            total -= _volume_quad(disc, Uq1[..., 0] * dph)
        Uq = disc.interior_field(disc.elem_values(run.states[n]))
        f = euler.flux(Uq, gas)
        gph = np.asarray(grad_phi(run.times[n], X[..., 0], X[..., 1]), dtype=float)
        if component == "m":
            total -= dt * _volume_quad(disc, np.einsum("mqci,mqci->mq", f[..., 1:3, :], gph))
        else:
            total -= dt * _volume_quad(disc, np.einsum("mqi,mqi->mq", f[..., 0, :], gph))
    return total


def consistency_error(run: RunRecord, phi, grad_phi, component):
    """Consistency-error decomposition for one smooth periodic test function.

    ``phi(t, x, y)`` returns a scalar for 'rho'/'eta' and a 2-vector for
    'm'; ``grad_phi`` returns the matching spatial gradient.  Terms:
    (I) non-Galerkin residual deviation weighted by test-function
    differences, (II) mismatch between the quadrature and lumped
    pairings, (III) interpolation defect of the test function against
    the flux, and for the entropy component (IV) the dissipation total.
    """
    disc, gas = run.disc, run.gas
    if any(s.shape[0] != disc.dofmap.n_dofs for s in run.states):
        raise MeshMismatch("snapshots do not match the discretization")
    dofs_x = disc.dofmap.dof_points
    X = disc.int_phys
    is_eta = component == "eta"
    comps = None if is_eta else _component_slice(component)

    term_I = 0.0
    term_III = 0.0
    term_IV = 0.0
    for n, dt in enumerate(run.dts):
        U = run.states[n]
        res = element_theta(disc, gas, U, run.scheme)
        theta = res.theta
        gal = galerkin_form_residual(disc, gas, U)
        phv = _phi_at(phi, run.times[n], dofs_x)      # (n_dofs,) or (n_dofs, 2)
        phe = phv[disc.dofmap.elem_dofs]              # (M, N) or (M, N, 2)
        if is_eta:
            V_elem = euler.entropy_vars(disc.elem_values(U), gas)
            xi = np.einsum("mnc,mnc->mn", V_elem, theta)
            xig = np.einsum("mnc,mnc->mn", V_elem, gal)
            term_I -= dt * float(np.sum(phe * (xi - xig)))
            term_IV += dt * float(np.sum(res.production))
        else:
            dev = theta[..., comps] - gal[..., comps]
            if component == "m":
                ph_shift = phe - phe.mean(axis=1, keepdims=True)
                term_I -= dt * float(np.einsum("mnc,mnc->", ph_shift, dev))
            else:
                ph_shift = phe - phe.mean(axis=1, keepdims=True)
                term_I -= dt * float(np.einsum("mn,mn->", ph_shift, dev[..., 0]))

        # (III): interpolation defect of phi against the flux
        Uq = disc.interior_field(disc.elem_values(U))
        gph = np.asarray(grad_phi(run.times[n], X[..., 0], X[..., 1]), dtype=float)
        if is_eta:
            gint = np.einsum("mqni,mn->mqi", disc.int_grads, phv[disc.dofmap.elem_dofs])
            gfield = euler.entropy_flux(Uq, gas)
            term_III += dt * _volume_quad(
                disc, np.einsum("mqi,mqi->mq", gint - gph, gfield)
            )
        else:
            f = euler.flux(Uq, gas)[..., comps, :]
            if component == "m":
                gint = np.einsum("mqni,mnc->mqci", disc.int_grads, phe)
                term_III += dt * _volume_quad(
                    disc, np.einsum("mqci,mqci->mq", gint - gph, f)
                )
            else:
                gint = np.einsum("mqni,mn->mqi", disc.int_grads, phe)
                term_III += dt * _volume_quad(
                    disc, np.einsum("mqi,mqi->mq", gint - gph, f[..., 0, :])
                )

    term_II = 0.0
    for n in range(len(run.dts)):
        U0, U1 = run.states[n], run.states[n + 1]
        phv = _phi_at(phi, run.times[n], dofs_x)
        if is_eta:
            d_q = euler.entropy_eta(
                disc.interior_field(disc.elem_values(U1)), gas
            ) - euler.entropy_eta(disc.interior_field(disc.elem_values(U0)), gas)
            ph_q = _phi_at(phi, run.times[n], X)
            quad = _volume_quad(disc, d_q * ph_q)
            lump = float(
                np.sum(
                    disc.dual.c_sigma
                    * phv
                    * (euler.entropy_eta(U1, gas) - euler.entropy_eta(U0, gas))
                )
            )
        else:
            dU = (U1 - U0)[:, comps]
            d_q = disc.interior_field(disc.elem_values(U1 - U0))[..., comps]
            ph_q = _phi_at(phi, run.times[n], X)
            if component == "m":
                quad = _volume_quad(disc, np.einsum("mqc,mqc->mq", d_q, ph_q))
                lump = float(np.einsum("s,sc,sc->", disc.dual.c_sigma, phv, dU))
            else:
                quad = _volume_quad(disc, d_q[..., 0] * ph_q)
                lump = float(np.sum(disc.dual.c_sigma * phv * dU[:, 0]))
        term_II += quad - lump

    out = {"I": term_I, "II": term_II, "III": term_III}
    if is_eta:
        out["IV"] = term_IV
        out["total"] = term_I + term_II + term_III + term_IV
    else:
        out["total"] = term_I + term_II + term_III
    return out


def entropy_budget(run: RunRecord):
    """Per-step entropy increment, dissipation and their defect."""
    disc, gas = run.disc, run.gas
    rows = []
    for n, dt in enumerate(run.dts):
        S0 = float(
            np.sum(disc.dual.c_sigma * euler.entropy_eta(run.states[n], gas))
        )
        S1 = float(
            np.sum(disc.dual.c_sigma * euler.entropy_eta(run.states[n + 1], gas))
        )
        res = element_theta(disc, gas, run.states[n], run.scheme)
        prod = dt * float(np.sum(res.production))
        rows.append(
            {
                "t": run.times[n + 1],
                "increment": S1 - S0,
                "production": prod,
                "defect": (S1 - S0) + prod,
            }
        )
    return rows


def entropy_production_monitor(disc: Discretization, gas, U_n, U_np1, dt, scheme):
    """Per-DOF discrete entropy production of one explicit step.

    D_sigma = eta(U^{n+1}) - eta(U^n) + dt/|C| <V^n, R_sigma>, which
    vanishes for a reproduced constant state and is quadratically small
    in dt.
    """
    from .stepping import scatter_residuals

    theta = element_theta(disc, gas, U_n, scheme).theta
    R = scatter_residuals(disc, theta)
    V = euler.entropy_vars(U_n, gas)
    d = (
        euler.entropy_eta(U_np1, gas)
        - euler.entropy_eta(U_n, gas)
        + dt / disc.dual.c_sigma * np.einsum("sc,sc->s", V, R)
    )
    return d


def cesaro_average(snapshots, probe_points, gas):
    """Arithmetic mean of fields over a refinement family at probe points.

    ``snapshots`` is a sequence of (disc, U); the result holds the four
    conserved components plus the entropy, shape (n_points, 5).
    """
    probe_points = np.asarray(probe_points, dtype=float)
    acc = np.zeros((probe_points.shape[0], 5))
    for disc, U in snapshots:
        vals = disc.evaluate_at_points(U, probe_points)
        acc[:, :4] += vals
        acc[:, 4] += euler.entropy_eta(vals, gas)
    return acc / len(snapshots)


def primitive_errors(disc: Discretization, gas, U, exact_fn, t, norm="L1"):
    """Quadrature error norms of rho, x-velocity and pressure vs a reference.

    ``exact_fn(t, x, y)`` returns conserved states at arbitrary points.
    """
    Uq = disc.interior_field(disc.elem_values(U))
    X = disc.int_phys
    Ue = np.asarray(exact_fn(t, X[..., 0], X[..., 1]), dtype=float)
    diffs = {
        "rho": Uq[..., 0] - Ue[..., 0],
        "u": euler.velocity(Uq)[..., 0] - euler.velocity(Ue)[..., 0],
        "p": euler.pressure(Uq, gas) - euler.pressure(Ue, gas, check=False),
    }
    out = {}
    area = float(np.sum(disc.mesh.areas))
    for k, d in diffs.items():
        if norm == "L1":
            out[k] = _volume_quad(disc, np.abs(d)) / area
        elif norm == "L2":
            out[k] = np.sqrt(_volume_quad(disc, d * d) / area)
        elif norm == "Linf":
            out[k] = float(np.max(np.abs(d)))
        else:
            raise ValueError("norm must be L1, L2 or Linf")
    return out


def convergence_order(errors, h_list):
    """Pairwise observed orders log(e_c/e_f)/log(h_c/h_f)."""
    errors = np.asarray(errors, dtype=float)
    h = np.asarray(h_list, dtype=float)
    orders = []
    for i in range(len(h) - 1):
        if h[i] == h[i + 1]:
            warnings.warn("identical mesh sizes, order undefined")
            orders.append(float("nan"))
        else:
            orders.append(float(np.log(errors[i] / errors[i + 1]) / np.log(h[i] / h[i + 1])))
    return orders
