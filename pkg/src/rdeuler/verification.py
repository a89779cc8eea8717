"""Built-in self checks behind the ``verify`` command.

Each check is parameterized so the test suite can run it at full
acceptance scale while the command line uses quicker settings.
"""

import numpy as np

from . import diagnostics, euler, mood, positivity, stepping
from .basis import bernstein_to_lagrange, build_dofmap
from .config import parse_config
from .discretization import Discretization
from .errors import ConfigError
from .mesh import structured_rect, structured_square
from .residuals import Scheme
from .stabilization import corrected_residual
from .stepping import FieldState


def random_admissible_field(disc, gas, rng, near_vacuum=False):
    """Random DOF states; near_vacuum stresses the admissibility floors."""
    n = disc.dofmap.n_dofs
    if near_vacuum:
        rho = 10.0 ** rng.uniform(-6, 0, n)
        rho_e = 10.0 ** rng.uniform(np.log10(10.0 * gas.e_floor), 0, n)
        u = rng.uniform(-3, 3, (n, 2))
    else:
        rho = rng.uniform(0.3, 2.0, n)
        p = rng.uniform(0.3, 2.0, n)
        rho_e = p / (gas.gamma - 1.0)
        u = rng.uniform(-1, 1, (n, 2))
    E = rho_e + 0.5 * rho * (u[:, 0] ** 2 + u[:, 1] ** 2)
    return np.stack([rho, rho * u[:, 0], rho * u[:, 1], E], axis=-1)


def _drift(disc, U0, U1):
    """Componentwise drift of the conserved totals, normalized by the
    largest component magnitude (momenta may start at zero)."""
    t0 = stepping.conserved_totals(disc, U0)
    t1 = stepping.conserved_totals(disc, U1)
    scale = np.einsum("s,sc->c", disc.dual.c_sigma, np.abs(U0)).max()
    return np.abs(t1 - t0) / max(scale, 1e-300)


def check_conservation(n=16, t_end=0.5, cfl=0.3, tol=1e-11):
    """Vortex run keeps total mass, momentum and energy to round-off."""
    cfg = parse_config(
        f"mesh = structured:{n}\nproblem = vortex\nintegrator = ssprk2\n"
        f"cfl = {cfl}\nt_end = {t_end}\noutput.dir = out/verify_conservation\n"
        "output.diag_every = 1000000\n"
    )
    from .driver import run

    result = run(cfg)
    U0 = result.disc.interpolate(result.problem.initial)
    drift = _drift(result.disc, U0, result.state.U)
    ok = bool(np.all(drift <= tol))
    return ok, {"drift": drift.tolist(), "steps": result.n_steps}


def check_entropy_balance(n_fields=100, n=4, seed=7, tol_eq=1e-11, tol_ineq=1e-12):
    """Per-element entropy equality with the correction, inequality with
    the diffusion, on random admissible fields."""
    gas = euler.GasModel()
    mesh = structured_square(n, side=2.0)
    disc = Discretization(mesh, build_dofmap(mesh, "s2", "lagrange", 1))
    rng = np.random.default_rng(seed)
    scheme = Scheme.parse("galerkin+ec+jump")
    worst_eq, worst_ineq = 0.0, 0.0
    for _ in range(n_fields):
        U = random_admissible_field(disc, gas, rng)
        res = corrected_residual(disc, gas, U, scheme)
        V = euler.entropy_vars(disc.elem_values(U), gas)
        lhs = np.einsum("mnc,mnc->m", V, res.base.phi + res.correction)
        scale = np.maximum(np.abs(res.g_boundary), 1.0)
        worst_eq = max(worst_eq, float(np.max(np.abs(lhs - res.g_boundary) / scale)))
        full = np.einsum("mnc,mnc->m", V, res.theta)
        worst_ineq = min(worst_ineq, float(np.min(full - res.g_boundary)))
    ok = worst_eq <= tol_eq and worst_ineq >= -tol_ineq
    return ok, {"worst_equality": worst_eq, "worst_inequality": worst_ineq}


def positivity_stress(
    disc, gas, rng, n_fields, n_steps, cfl=1.0, check_lagrange_points=False
):
    """Forward-Euler interpolated LxF steps on random near-vacuum fields.

    Returns the number of admissibility violations at DOFs and, for
    Bernstein coefficients, at the mapped Lagrange points.
    """
    scheme = Scheme(base="lxf", flux_mode="interpolated")
    violations = 0
    Mmap = None
    if check_lagrange_points:
        Mmap = bernstein_to_lagrange(disc.dofmap.degree)
    for _ in range(n_fields):
        U = random_admissible_field(disc, gas, rng, near_vacuum=True)
        state = FieldState(t=0.0, U=U, disc=disc)
        for _ in range(n_steps):
            alpha = positivity.alpha_interpolated(disc, gas, state.U).value
            dt = positivity.admissible_timestep(disc, alpha, cfl)
            state = stepping.forward_euler_step(state, scheme, dt, gas)
            if not np.all(euler.admissible(state.U, gas)):
                violations += 1
                break
            if Mmap is not None:
                at_lagrange = np.einsum(
                    "ln,mnc->mlc", Mmap, disc.elem_values(state.U)
                )
                if not np.all(euler.admissible(at_lagrange, gas)):
                    violations += 1
                    break
    return violations


def check_positivity(n_fields=500, n_steps=50, n=4, seed=11):
    gas = euler.GasModel()
    mesh = structured_square(n, side=2.0)
    rng = np.random.default_rng(seed)
    disc1 = Discretization(mesh, build_dofmap(mesh, "s2", "lagrange", 1))
    v1 = positivity_stress(disc1, gas, rng, n_fields, n_steps)
    disc2 = Discretization(mesh, build_dofmap(mesh, "s2", "bernstein", 2))
    v2 = positivity_stress(
        disc2, gas, rng, n_fields, n_steps, check_lagrange_points=True
    )
    return v1 == 0 and v2 == 0, {"lagrange_violations": v1, "bernstein_violations": v2}


def run_mood_sod(nx=32, ny=4, t_end=0.6, cfl=0.3, cascade=None, integrator="ssprk2"):
    """Smoothed-Sod strip under the cascade; returns summary data."""
    from .config import RunConfig
    from .driver import run

    cfg = RunConfig(
        problem="sod_smooth",
        mesh="strip",
        integrator=integrator,
        cfl=cfl,
        t_end=t_end,
        mood_enabled=True,
        cascade=cascade or "galerkin,limited_lxf,lxf",
        scheme="lxf",
        output_dir="out/verify_mood",
        diag_every=1,
    )
    cfg.validate()
    gas = euler.GasModel()
    mesh = structured_rect(nx, ny, width=10.0, height=10.0 * ny / nx)
    disc = Discretization(mesh, build_dofmap(mesh, "s2", "lagrange", 1))
    from . import problems

    prob = problems.make_problem("sod_smooth", mesh.bbox, gas)
    state = FieldState(t=0.0, U=disc.interpolate(prob.initial), disc=disc)
    U0 = state.U.copy()
    mood_cfg = mood.CascadeConfig(schemes=cfg.cascade_objs())

    def integ(st, dt, levels=None):
        if integrator == "fe":
            return stepping.forward_euler_step(
                st, cfg.cascade_objs() if levels is not None else cfg.scheme_obj(),
                dt, gas, levels=levels,
            )
        return stepping.ssp_rk2_step(
            st, cfg.cascade_objs() if levels is not None else cfg.scheme_obj(),
            dt, gas, levels=levels,
        )

    activations = 0
    steps = 0
    while state.t < t_end - 1e-12:
        alpha = positivity.alpha_noninterpolated(disc, gas, state.U)
        dt = min(positivity.admissible_timestep(disc, alpha, cfl), t_end - state.t)
        state, report = mood.mood_step(state, dt, mood_cfg, integ, gas)
        activations += int(np.sum(report.level > 0))
        steps += 1
        if not np.all(euler.admissible(state.U, gas)):
            return {"ok_pad": False, "activations": activations, "steps": steps}
    drift = _drift(disc, U0, state.U)
    return {
        "ok_pad": True,
        "activations": activations,
        "steps": steps,
        "drift": drift,
        "final": state,
        "disc": disc,
    }


def check_mood(nx=24, ny=3, t_end=0.4):
    info = run_mood_sod(nx=nx, ny=ny, t_end=t_end)
    ok = (
        info["ok_pad"]
        and info["activations"] >= 1
        and bool(np.all(info.get("drift", np.inf) <= 1e-11))
    )
    return ok, {k: v for k, v in info.items() if k not in ("final", "disc")}


def check_consistency(n=8, t_end=0.1, tol=1e-9):
    """Terms (I)-(III) reproduce the brute-force weak-form defect."""
    cfg = parse_config(
        f"mesh = structured:{n}\nproblem = vortex\nintegrator = fe\n"
        f"cfl = 0.3\nt_end = {t_end}\noutput.dir = out/verify_consistency\n"
        "output.diag_every = 1000000\n"
    )
    from .driver import run

    result = run(cfg, record=True)
    k = 2.0 * np.pi / 10.0

    def phi(t, x, y):
        return np.cos(k * x) * np.cos(k * y)

    def grad_phi(t, x, y):
        return np.stack(
            [-k * np.sin(k * x) * np.cos(k * y), -k * np.cos(k * x) * np.sin(k * y)],
            axis=-1,
        )

    def phi_m(t, x, y):
        return np.stack([phi(t, x, y), np.sin(k * x) * np.cos(k * y)], axis=-1)

    def grad_phi_m(t, x, y):
        g1 = grad_phi(t, x, y)
        g2 = np.stack(
            [k * np.cos(k * x) * np.cos(k * y), -k * np.sin(k * x) * np.sin(k * y)],
            axis=-1,
        )
        return np.stack([g1, g2], axis=-2)

    out = {}
    ok = True
    for comp, (p, g) in {
        "rho": (phi, grad_phi),
        "m": (phi_m, grad_phi_m),
    }.items():
        terms = diagnostics.consistency_error(result.record, p, g, comp)
        defect = diagnostics.weak_form_defect(result.record, p, g, comp)
        rel = abs(terms["total"] - defect) / max(abs(defect), 1e-300)
        out[comp] = {"total": terms["total"], "defect": defect, "rel": rel}
        ok = ok and rel <= tol
    return ok, out


SUITES = {
    "conservation": check_conservation,
    "entropy": check_entropy_balance,
    "positivity": check_positivity,
    "mood": check_mood,
    "consistency": check_consistency,
}


def verify_suite(name):
    if name not in SUITES:
        raise ConfigError(
            f"unknown suite {name!r}; choose from {sorted(SUITES)}"
        )
    return SUITES[name]()
