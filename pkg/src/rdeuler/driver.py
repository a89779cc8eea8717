"""Run orchestration: problem setup, time loop, snapshots, diagnostics
CSV and the grid-convergence harness."""

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics, euler, mood, positivity, problems, stepping
from .config import RunConfig
from .discretization import Discretization
from .errors import ConfigError, MeshMismatch
from .basis import build_dofmap
from .mesh import read_mesh, structured_square

DIAG_HEADER = (
    "step,t,dt,mass,mom_x,mom_y,energy,entropy,bv_norm,"
    "entropy_production,mood_pad,mood_nad,mood_parachute"
)


def build_discretization(cfg: RunConfig) -> Discretization:
    if cfg.mesh.startswith("structured:"):
        n = int(cfg.mesh.split(":", 1)[1])
        mesh = structured_square(n)
    else:
        mesh = read_mesh(cfg.mesh)
    if not mesh.periodic:
        raise ConfigError("the solver requires a periodic mesh")
    return Discretization(mesh, build_dofmap(mesh, cfg.space, cfg.basis, cfg.degree))


def config_hash(cfg: RunConfig):
    blob = "\n".join(f"{k}={v}" for k, v in sorted(cfg.raw.items()))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_snapshot(path, state: stepping.FieldState, cfg_hash=""):
    disc = state.disc
    pts = disc.dofmap.dof_points
    with open(path, "w") as fh:
        fh.write("# rdeuler snapshot\n")
        fh.write(
            f"# mesh_hash={disc.mesh.content_hash()} t={float(state.t)!r} "
            f"config_hash={cfg_hash}\n"
        )
        fh.write("dof_id,x,y,rho,mx,my,E\n")
        for i in range(disc.dofmap.n_dofs):
            row = [float(v) for v in state.U[i]]
            fh.write(
                f"{i},{float(pts[i, 0])!r},{float(pts[i, 1])!r},"
                f"{row[0]!r},{row[1]!r},{row[2]!r},{row[3]!r}\n"
            )


def read_snapshot(path):
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                for tok in line.lstrip("# ").split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        meta[k] = v
                continue
            if line.startswith("dof_id") or not line:
                continue
            rows.append(line.split(","))
    rows.sort(key=lambda r: int(r[0]))
    U = np.array([[float(v) for v in r[3:7]] for r in rows])
    t = float(meta.get("t", "0.0"))
    return U, t, meta


@dataclass
class RunResult:
    cfg: RunConfig
    disc: Discretization
    gas: euler.GasModel
    state: stepping.FieldState
    rows: list = field(default_factory=list)
    record: diagnostics.RunRecord = None
    problem: object = None
    n_steps: int = 0


def initial_state(cfg: RunConfig, disc: Discretization, gas):
    if cfg.problem == "from_file":
        U, t, meta = read_snapshot(cfg.problem_file)
        if U.shape[0] != disc.dofmap.n_dofs:
            raise MeshMismatch("snapshot DOF count does not match the mesh")
        return stepping.FieldState(t=t, U=U, disc=disc, provenance="from_file"), None
    kwargs = {"beta": cfg.beta} if cfg.problem == "vortex" else {}
    prob = problems.make_problem(cfg.problem, disc.mesh.bbox, gas, **kwargs)
    U = disc.interpolate(prob.initial)
    return stepping.FieldState(t=0.0, U=U, disc=disc), prob


def compute_dt(disc, gas, U, cfl, dt_max=None):
    alpha = positivity.alpha_noninterpolated(disc, gas, U)
    return positivity.admissible_timestep(disc, alpha, cfl, dt_max=dt_max)


def _diag_row(disc, gas, state, scheme, step, dt, mood_counts):
    totals = stepping.conserved_totals(disc, state.U)
    entropy = float(np.sum(disc.dual.c_sigma * euler.entropy_eta(state.U, gas)))
    bv = diagnostics.weak_bv_norm(disc, gas, state.U, zeta=scheme.zeta)
    if scheme.diffusion:
        from .stabilization import jump_diffusion

        _, achieved, _ = jump_diffusion(
            disc, gas, state.U, lam=scheme.lambda_jump, zeta=scheme.zeta
        )
        prod = float(np.sum(achieved))
    else:
        prod = 0.0
    return {
        "step": step,
        "t": state.t,
        "dt": dt,
        "mass": totals[0],
        "mom_x": totals[1],
        "mom_y": totals[2],
        "energy": totals[3],
        "entropy": entropy,
        "bv_norm": bv,
        "entropy_production": prod,
        "mood_pad": mood_counts.get("pad", 0),
        "mood_nad": mood_counts.get("nad", 0),
        "mood_parachute": mood_counts.get("parachute", 0),
    }


def run(cfg: RunConfig, record=False) -> RunResult:
    gas = euler.GasModel(gamma=cfg.gamma, rho_floor=cfg.rho_floor, e_floor=cfg.e_floor)
    disc = build_discretization(cfg)
    state, prob = initial_state(cfg, disc, gas)
    scheme = cfg.scheme_obj()
    cascade = cfg.cascade_objs()
    mood_cfg = mood.CascadeConfig(
        schemes=cascade,
        delta_dmp=cfg.mood_delta_dmp,
        plateau_eps=cfg.mood_plateau,
        smooth_tol=cfg.mood_smooth_tol,
    )

    def plain_step(st, dt, levels=None):
        sch = cascade if levels is not None else scheme
        if cfg.integrator == "fe":
            return stepping.forward_euler_step(st, sch, dt, gas, levels=levels)
        if cfg.integrator == "ssprk2":
            return stepping.ssp_rk2_step(st, sch, dt, gas, levels=levels)
        return stepping.implicit_euler_step(st, dt, gas)

    rec = diagnostics.RunRecord(disc=disc, gas=gas, scheme=scheme) if record else None
    if rec is not None:
        rec.times.append(state.t)
        rec.states.append(state.U.copy())

    os.makedirs(cfg.output_dir, exist_ok=True)
    chash = config_hash(cfg)
    rows = [_diag_row(disc, gas, state, scheme, 0, 0.0, {})]
    step = 0
    while state.t < cfg.t_end - 1e-12 and step < cfg.max_steps:
        dt = min(compute_dt(disc, gas, state.U, cfg.cfl, cfg.dt_max), cfg.t_end - state.t)
        if cfg.mood_enabled:
            state, report = mood.mood_step(state, dt, mood_cfg, plain_step, gas)
            counts = report.counts
        else:
            state = plain_step(state, dt)
            counts = {}
        step += 1
        if step % cfg.diag_every == 0:
            rows.append(_diag_row(disc, gas, state, scheme, step, dt, counts))
        if cfg.output_every and step % cfg.output_every == 0:
            write_snapshot(
                os.path.join(cfg.output_dir, f"snap_{step:06d}.csv"), state, chash
            )
        if rec is not None:
            rec.times.append(state.t)
            rec.states.append(state.U.copy())
            rec.dts.append(dt)
    write_snapshot(os.path.join(cfg.output_dir, "snap_final.csv"), state, chash)
    _write_diag_csv(os.path.join(cfg.output_dir, "diagnostics.csv"), rows)
    return RunResult(
        cfg=cfg,
        disc=disc,
        gas=gas,
        state=state,
        rows=rows,
        record=rec,
        problem=prob,
        n_steps=step,
    )


def _write_diag_csv(path, rows):
    keys = DIAG_HEADER.split(",")
    with open(path, "w") as fh:
        fh.write(DIAG_HEADER + "\n")
        for r in rows:
            fh.write(",".join(repr(r[k]) if isinstance(r[k], float) else str(r[k]) for k in keys) + "\n")


def convergence(cfg: RunConfig, mesh_specs, norm="L1"):
    """Run one problem over a mesh family; report errors and orders."""
    if cfg.problem not in ("vortex", "constant"):
        raise ConfigError("convergence needs a problem with a known solution")

    def one(spec):
        from dataclasses import replace

        sub = replace(cfg, mesh=spec, output_dir=os.path.join(cfg.output_dir, _safe(spec)))
        sub.raw = dict(cfg.raw)
        result = run(sub)
        errs = diagnostics.primitive_errors(
            result.disc,
            result.gas,
            result.state.U,
            result.problem.state,
            result.state.t,
            norm=norm,
        )
        return {
            "mesh": spec,
            "mesh_h": float(result.disc.mesh.diameters.max()),
            "n_elems": result.disc.mesh.n_tris,
            "err_rho_L1": errs["rho"],
            "err_u_L1": errs["u"],
            "err_p_L1": errs["p"],
        }

    workers = int(os.environ.get("RDEULER_THREADS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, mesh_specs))
    else:
        rows = [one(spec) for spec in mesh_specs]

    hs = [r["mesh_h"] for r in rows]
    for key in ("rho", "u", "p"):
        errs = [r[f"err_{key}_L1"] for r in rows]
        orders = [float("nan")] + diagnostics.convergence_order(errs, hs)
        for r, o in zip(rows, orders):
            r[f"order_{key}"] = o

    os.makedirs(cfg.output_dir, exist_ok=True)
    path = os.path.join(cfg.output_dir, "errors.csv")
    keys = [
        "mesh_h", "n_elems", "err_rho_L1", "err_u_L1", "err_p_L1",
        "order_rho", "order_u", "order_p",
    ]
    with open(path, "w") as fh:
        fh.write(",".join(keys) + "\n")
        for r in rows:
            fh.write(",".join(repr(float(r[k])) if k != "n_elems" else str(r[k]) for k in keys) + "\n")
    return rows


def _safe(spec):
    return "".join(c if c.isalnum() else "_" for c in spec)
