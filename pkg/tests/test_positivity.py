import numpy as np
import pytest

from conftest import make_disc, random_states
from rdeuler import euler
from rdeuler.basis import build_dofmap
from rdeuler.discretization import Discretization
from rdeuler.errors import CFLViolation, VacuumState
from rdeuler.mesh import build_mesh, structured_square
from rdeuler.positivity import (
    admissible_timestep,
    alpha_implicit,
    alpha_interpolated,
    alpha_noninterpolated,
    geometry_vectors,
    scaled_normals,
    split_1d_oracle,
)
from rdeuler.verification import positivity_stress


def _ref_disc(scale=1.0):
    mesh = build_mesh(
        [(0, 0), (scale, 0), (0, scale)], [(0, 1, 2)], periodic=False
    )
    return Discretization(mesh, build_dofmap(mesh, "s2", "lagrange", 1))


def test_scaled_normals_row_sums(gas):
    rng = np.random.default_rng(0)
    for _ in range(10):
        pts = rng.uniform(-1, 1, (3, 2))
        pts[1] = pts[0] + [1.0, 0.1 * rng.standard_normal()]
        pts[2] = pts[0] + [0.2, 1.0]
        mesh = build_mesh(pts, [(0, 1, 2)])
        disc = Discretization(mesh, build_dofmap(mesh, "s2", "lagrange", 1))
        om = scaled_normals(disc)
        assert np.abs(om.sum(axis=2)).max() < 1e-14


def test_scaled_normals_reference_value():
    om = scaled_normals(_ref_disc())
    # int phi0 grad(phi0) = (-1/6, -1/6); omega = 2*3*that = (-1, -1)
    assert np.allclose(om[0, 0, 0], [-1.0, -1.0], atol=1e-13)


def test_scaled_normals_scale_linearly():
    om1 = scaled_normals(_ref_disc(1.0))[0]
    om2 = scaled_normals(_ref_disc(2.0))[0]
    assert np.allclose(om2, 2.0 * om1, rtol=1e-12)
    # directions invariant
    n1 = om1 / np.linalg.norm(om1, axis=-1, keepdims=True)
    n2 = om2 / np.linalg.norm(om2, axis=-1, keepdims=True)
    assert np.allclose(n1, n2, atol=1e-13)


def test_alpha_interpolated_stagnant_state(gas):
    disc = _ref_disc()
    U = np.tile(euler.conserved(1.0, 0.0, 0.0, 1.0, gas), (3, 1))
    a = alpha_interpolated(disc, gas, U)
    om = scaled_normals(disc)
    max_norm = np.linalg.norm(om, axis=-1).max()
    assert max_norm == pytest.approx(np.sqrt(2.0), rel=1e-13)
    assert a.value[0] == pytest.approx(np.sqrt(1.4) * np.sqrt(2.0), rel=1e-12)


def test_alpha_interpolated_grows_with_speed(gas):
    disc = _ref_disc()
    U = np.tile(euler.conserved(1.0, 0.0, 0.0, 1.0, gas), (3, 1))
    a0 = alpha_interpolated(disc, gas, U).value[0]
    U2 = U.copy()
    U2[1] = euler.conserved(1.0, 2.0, 0.5, 1.0, gas)
    a1 = alpha_interpolated(disc, gas, U2).value[0]
    assert a1 > a0


def test_alpha_interpolated_requires_admissible(gas):
    disc = _ref_disc()
    U = np.tile([1.0, 3.0, 0.0, 1.0], (3, 1))
    with pytest.raises(VacuumState):
        alpha_interpolated(disc, gas, U)


def test_geometry_vectors_gauss_identity(gas):
    for disc in (make_disc(3, 2.0), make_disc(3, 2.0, degree=2)):
        N = geometry_vectors(disc)
        assert np.abs(N.sum(axis=2)).max() < 1e-13


def test_alpha_noninterpolated_stagnant(gas):
    disc = _ref_disc()
    U = np.tile(euler.conserved(1.0, 0.0, 0.0, 1.0, gas), (3, 1))
    a = alpha_noninterpolated(disc, gas, U)
    max_norm = np.linalg.norm(geometry_vectors(disc), axis=-1).max()
    assert a.value[0] == pytest.approx(np.sqrt(1.4) * max_norm, rel=1e-12)


def test_alpha_noninterpolated_refinement_ratio(gas):
    n1 = np.linalg.norm(geometry_vectors(make_disc(4, 2.0)), axis=-1).max()
    n2 = np.linalg.norm(geometry_vectors(make_disc(8, 2.0)), axis=-1).max()
    assert abs(n1 / n2 - 2.0) < 0.2


def test_alpha_implicit_reference_value(gas):
    disc = _ref_disc()
    norms = np.linalg.norm(disc.phi_grad_integrals, axis=-1)
    assert norms[0].max() == pytest.approx(np.sqrt(2.0) / 6.0, rel=1e-12)
    U = np.tile(euler.conserved(1.0, 0.0, 0.0, 1.0, gas), (3, 1))
    a = alpha_implicit(disc, gas, U)
    assert a.value[0] == pytest.approx(
        3 * np.sqrt(1.4) * np.sqrt(2.0) / 6.0, rel=1e-12
    )


def test_alpha_implicit_scales_with_mesh(gas):
    U = np.tile(euler.conserved(1.0, 0.0, 0.0, 1.0, euler.GasModel()), (3, 1))
    a1 = alpha_implicit(_ref_disc(1.0), gas, U).value[0]
    a2 = alpha_implicit(_ref_disc(2.0), gas, U).value[0]
    assert a2 / a1 == pytest.approx(2.0, rel=1e-12)


def test_phi_grad_integrals_row_sums(gas):
    disc = make_disc(3, 2.0, degree=2)
    assert np.abs(disc.phi_grad_integrals.sum(axis=2)).max() < 1e-14


def test_admissible_timestep_arithmetic():
    disc = _ref_disc()  # |K| = 1/2, |K_sigma| = 1/6, N_K = 3
    dt = admissible_timestep(disc, np.array([2.0]), cfl=0.5)
    assert dt == pytest.approx(1.0 / 72.0, rel=1e-14)
    assert admissible_timestep(disc, np.array([2.0]), cfl=1.0) == pytest.approx(
        2 * dt, rel=1e-14
    )


def test_admissible_timestep_refinement(gas):
    rngs = []
    for n in (4, 8):
        disc = make_disc(n, 2.0)
        U = np.tile(euler.conserved(1.0, 0.3, 0.1, 1.0, euler.GasModel()), (disc.dofmap.n_dofs, 1))
        a = alpha_interpolated(disc, gas, U)
        rngs.append(admissible_timestep(disc, a, cfl=0.5))
    assert abs(rngs[0] / rngs[1] - 2.0) < 0.3  # dt halves within 15 percent


def test_admissible_timestep_constant_flow_cap():
    disc = _ref_disc()
    dt = admissible_timestep(disc, np.array([0.0]), cfl=0.5, dt_max=0.25)
    assert dt == pytest.approx(0.125)
    # default cap from the domain size
    dt2 = admissible_timestep(disc, np.array([0.0]), cfl=1.0)
    assert dt2 == pytest.approx(1e-2 * np.hypot(1.0, 1.0))


def test_split_oracle_uniform_state(gas):
    U = euler.conserved(1.0, 0.3, 0.0, 1.0, gas)
    out = split_1d_oracle(U, U, U, nu=2.0, ratio=0.2, gas=gas)
    assert np.allclose(out, U, atol=1e-15)


def test_split_oracle_sod_matches_llf(gas):
    UL = euler.conserved(1.0, 0.0, 0.0, 1.0, gas)
    UR = euler.conserved(0.125, 0.0, 0.0, 0.1, gas)
    nu = float(euler.max_wavespeed(UL, gas))
    ratio = 0.2
    got = split_1d_oracle(UL, UL, UR, nu, ratio, gas)
    fl = euler.flux(UL, gas)[:, 0]
    fm = fl
    fr = euler.flux(UR, gas)[:, 0]
    fhat_right = 0.5 * (fm + fr) - 0.5 * nu * (UR - UL)
    fhat_left = 0.5 * (fl + fm) - 0.5 * nu * (UL - UL)
    expect = UL - ratio * (fhat_right - fhat_left)
    assert np.allclose(got, expect, atol=1e-14)
    assert euler.admissible(got, gas)


def test_split_oracle_is_llf_average(gas):
    rng = np.random.default_rng(1)
    for _ in range(20):
        Ul, Um, Ur = random_states(rng, 3)
        nu = float(euler.max_wavespeed(np.array([Ul, Um, Ur]), gas).max()) * 1.05
        ratio = 0.4 / nu
        got = split_1d_oracle(Ul, Um, Ur, nu, ratio, gas)
        fhat = lambda a, b: 0.5 * (
            euler.flux(a, gas)[:, 0] + euler.flux(b, gas)[:, 0]
        ) - 0.5 * nu * (b - a)
        expect = Um - ratio * (fhat(Um, Ur) - fhat(Ul, Um))
        assert np.abs(got - expect).max() < 1e-14
        assert euler.admissible(got, gas)


def test_split_oracle_cfl_violation(gas):
    U = euler.conserved(1.0, 0.0, 0.0, 1.0, gas)
    with pytest.raises(CFLViolation):
        split_1d_oracle(U, U, U, nu=2.0, ratio=0.3, gas=gas)
    with pytest.raises(CFLViolation):
        split_1d_oracle(U, U, U, nu=0.5, ratio=0.1, gas=gas)  # nu too small


def test_explicit_positivity_reduced(gas):
    # reduced version of the 500-field stress test (full size in the
    # acceptance suite)
    mesh = structured_square(4, side=2.0)
    rng = np.random.default_rng(7)
    disc1 = Discretization(mesh, build_dofmap(mesh, "s2", "lagrange", 1))
    assert positivity_stress(disc1, gas, rng, n_fields=50, n_steps=10) == 0
    disc2 = Discretization(mesh, build_dofmap(mesh, "s2", "bernstein", 2))
    assert (
        positivity_stress(
            disc2, gas, rng, n_fields=25, n_steps=10, check_lagrange_points=True
        )
        == 0
    )
