"""A-posteriori detection and scheme cascade.

A candidate step is screened element by element: computational
admissibility (finite values), physical admissibility (density and
pressure above their floors at every DOF), a plateau exemption, and a
relaxed discrete maximum principle on the density with a smooth-extremum
pardon.  Flagged elements are recomputed with the next scheme in the
cascade; the final member (the most dissipative LxF distribution) is
accepted once it passes the physical and computational checks.
"""

from dataclasses import dataclass, field

import numpy as np

from . import euler
from .discretization import Discretization
from .errors import ConfigError, ParachutePadFailure
from .residuals import Scheme

DET_NONE, DET_PAD, DET_CAD, DET_NAD = 0, 1, 2, 3
DETECTOR_NAMES = {DET_NONE: "", DET_PAD: "PAD", DET_CAD: "CAD", DET_NAD: "NAD"}


def default_cascade():
    return (
        Scheme.parse("galerkin+ec+jump"),
        Scheme.parse("limited_lxf"),
        Scheme.parse("lxf"),
    )


@dataclass
class CascadeConfig:
    schemes: tuple = field(default_factory=default_cascade)
    delta_dmp: float = 1e-3
    plateau_eps: float = None      # None: h_K^3 per element
    smooth_tol: float = 0.01

    def __post_init__(self):
        if len(self.schemes) == 0:
            raise ConfigError("cascade must not be empty")
        if self.schemes[-1].base != "lxf":
            raise ConfigError("the cascade must end in the LxF distribution")


@dataclass
class DetectorReport:
    accepted: np.ndarray     # (M,) bool
    detector: np.ndarray     # (M,) last failing detector id
    worst_dof: np.ndarray    # (M,) global DOF id of the worst offender
    level: np.ndarray        # (M,) cascade level finally used
    plateau_skips: int = 0
    counts: dict = field(default_factory=dict)


def _stencil_dofs(disc: Discretization):
    """Own plus edge-neighbor DOFs per element, padded with own DOFs."""
    if "stencil" in disc._cache:
        return disc._cache["stencil"]
    dofs = disc.dofmap.elem_dofs
    nbr = disc.elem_neighbors
    cols = [dofs]
    for j in range(3):
        nb = nbr[:, j]
        cols.append(np.where(nb[:, None] >= 0, dofs[np.maximum(nb, 0)], dofs))
    out = np.concatenate(cols, axis=1)
    disc._cache["stencil"] = out
    return out


def _stencil2_dofs(disc: Discretization, elem):
    """Two-ring DOF set used by the smoothness fit (unique ids)."""
    nbr = disc.elem_neighbors
    ring = {int(elem)}
    for k in nbr[elem]:
        if k >= 0:
            ring.add(int(k))
    for k in list(ring):
        for k2 in nbr[k]:
            if k2 >= 0:
                ring.add(int(k2))
    return np.unique(disc.dofmap.elem_dofs[sorted(ring)])


def _wrap(delta, period):
    if period is None:
        return delta
    return delta - period * np.round(delta / period)


def _smooth_extremum(disc, cfg, rho, elem):
    """Pardon test: a quadratic over the two-ring stencil reproduces the
    data to within smooth_tol times its spread.

    A smooth extremum is locally parabolic, so the least-squares
    quadratic leaves a residual far below the data spread; grid-scale
    oscillations cannot be captured by one parabola and keep an O(1)
    relative residual.
    """
    sten = _stencil2_dofs(disc, elem)
    pts = disc.dofmap.dof_points[sten]
    own = disc.dofmap.dof_points[disc.dofmap.elem_dofs[elem]]
    center = own.mean(axis=0)
    (x0, x1, y0, y1) = disc.mesh.bbox
    per = (x1 - x0, y1 - y0) if disc.mesh.periodic else (None, None)
    dx = _wrap(pts[:, 0] - center[0], per[0])
    dy = _wrap(pts[:, 1] - center[1], per[1])
    vals = rho[sten]
    quad = np.column_stack(
        [np.ones_like(dx), dx, dy, dx * dx, dx * dy, dy * dy]
    )
    cq, *_ = np.linalg.lstsq(quad, vals, rcond=None)
    resid = float(np.max(np.abs(quad @ cq - vals)))
    spread = max(float(vals.max() - vals.min()), 1e-300)
    return resid <= cfg.smooth_tol * spread


def detect(disc: Discretization, gas, cfg: CascadeConfig, candidate_U, previous_U):
    """Apply the four detectors; returns (fail, code, worst_dof, skips)."""
    dofs = disc.dofmap.elem_dofs
    Uc = np.asarray(candidate_U)[dofs]                     # (M, N, 4)
    M = disc.mesh.n_tris

    finite = np.isfinite(Uc).all(axis=(1, 2))
    pad_ok = euler.admissible(Uc, gas)
    pad_fail_dof = np.argmax(~pad_ok, axis=1)
    pad_fail = ~pad_ok.all(axis=1)

    code = np.zeros(M, dtype=np.int64)
    code[pad_fail] = DET_PAD
    code[~finite] = DET_CAD
    fail = pad_fail | ~finite
    worst = np.where(fail, dofs[np.arange(M), pad_fail_dof], -1)

    # plateau exemption and relaxed maximum principle on the density
    sten = _stencil_dofs(disc)
    prev_rho = np.asarray(previous_U)[:, 0]
    mn = prev_rho[sten].min(axis=1)
    mx = prev_rho[sten].max(axis=1)
    rng = mx - mn
    eps_plateau = (
        disc.mesh.diameters**3 if cfg.plateau_eps is None else cfg.plateau_eps
    )
    plateau = rng < eps_plateau

    cand_rho = np.where(np.isfinite(Uc[:, :, 0]), Uc[:, :, 0], np.inf)
    delta = np.maximum(1e-6, cfg.delta_dmp * rng)
    low = (mn - delta)[:, None]
    high = (mx + delta)[:, None]
    nad_viol = (cand_rho < low) | (cand_rho > high)
    nad_fail = nad_viol.any(axis=1) & ~plateau & ~fail
    skips = int(np.sum(plateau & nad_viol.any(axis=1) & ~fail))

    rho_full = np.asarray(candidate_U)[:, 0]
    for k in np.nonzero(nad_fail)[0]:
        if _smooth_extremum(disc, cfg, rho_full, int(k)):
            nad_fail[k] = False
    code[nad_fail] = DET_NAD
    worst[nad_fail] = dofs[nad_fail, np.argmax(nad_viol[nad_fail], axis=1)]
    fail = fail | nad_fail
    return fail, code, worst, skips


def mood_step(state, dt, cfg: CascadeConfig, integrator, gas):
    """Advance one step under the cascade.

    ``integrator(state, dt, levels)`` must perform a full step with the
    cascade scheme chosen per element.  Elements failing detection are
    bumped one cascade level and the step is recomputed until stable;
    at the final level only the physical/computational checks apply and
    a failure there is raised loudly.
    """
    disc = state.disc
    M = disc.mesh.n_tris
    n_levels = len(cfg.schemes)
    levels = np.zeros(M, dtype=np.int64)
    counts = {"pad": 0, "cad": 0, "nad": 0}
    skips_total = 0
    last = None
    for _ in range(M * n_levels + 2):
        candidate = integrator(state, dt, levels)
        fail, code, worst, skips = detect(disc, gas, cfg, candidate.U, state.U)
        skips_total += skips
        at_last = levels == n_levels - 1
        hard = fail & at_last & ((code == DET_PAD) | (code == DET_CAD))
        if np.any(hard) and n_levels > 1:
            bad = int(np.nonzero(hard)[0][0])
            raise ParachutePadFailure(
                f"element {bad} fails {DETECTOR_NAMES[int(code[bad])]} at the "
                "final cascade level; the time step or dissipation bound is wrong"
            )
        bump = fail & ~at_last
        for name, det in (("pad", DET_PAD), ("cad", DET_CAD), ("nad", DET_NAD)):
            counts[name] += int(np.sum(bump & (code == det)))
        if not np.any(bump):
            last = (candidate, fail, code, worst)
            break
        levels[bump] += 1
    else:
        raise ParachutePadFailure("cascade loop failed to settle")

    candidate, fail, code, worst = last
    pad_ok = euler.admissible(candidate.U[disc.dofmap.elem_dofs], gas).all(axis=1)
    if n_levels > 1 and not np.all(pad_ok):
        raise ParachutePadFailure("final state violates physical admissibility")
    counts["parachute"] = (
        int(np.sum(levels == n_levels - 1)) if n_levels > 1 else 0
    )
    report = DetectorReport(
        accepted=~fail | (levels == n_levels - 1),
        detector=code,
        worst_dof=worst,
        level=levels,
        plateau_skips=skips_total,
        counts=counts,
    )
    next_state = candidate.copy_with(provenance="mood")
    return next_state, report
