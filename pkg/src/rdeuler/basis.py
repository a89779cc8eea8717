"""Polynomial bases on triangles, quadrature rules and DOF numbering.

Supported bases: Lagrange and Bernstein, degrees 1 and 2, on the
barycentric reference simplex.  Local DOF ordering is fixed: vertices
(0, 1, 2) first, then for degree 2 the edge midpoints in the order
(01, 12, 20).  Gradients returned by reference-level helpers are taken
with respect to (lambda_1, lambda_2) with lambda_0 = 1 - l1 - l2.
"""

from dataclasses import dataclass

import numpy as np

from .errors import OutOfElement, UnsupportedDegree
from .mesh import Mesh


def n_local_dofs(p):
    if p not in (1, 2):
        raise UnsupportedDegree(f"degree {p} not supported")
    return (p + 1) * (p + 2) // 2


def lagrange_points(p):
    """Barycentric coordinates of the local Lagrange points."""
    n_local_dofs(p)
    verts = np.eye(3)
    if p == 1:
        return verts
    mids = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
    return np.vstack([verts, mids])


def basis_values(kind, p, lam):
    """Basis values at barycentric points, shape lam.shape[:-1] + (N_K,)."""
    lam = np.asarray(lam, dtype=float)
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    if p == 1:
        # Degree 1: Lagrange and Bernstein coincide with the barycentrics.
        return np.stack([l0, l1, l2], axis=-1)
    if p != 2:
        raise UnsupportedDegree(f"degree {p} not supported")
    if kind == "lagrange":
        return np.stack(
            [
                l0 * (2 * l0 - 1),
                l1 * (2 * l1 - 1),
                l2 * (2 * l2 - 1),
                4 * l0 * l1,
                4 * l1 * l2,
                4 * l2 * l0,
            ],
            axis=-1,
        )
    if kind == "bernstein":
        return np.stack(
            [l0 * l0, l1 * l1, l2 * l2, 2 * l0 * l1, 2 * l1 * l2, 2 * l2 * l0],
            axis=-1,
        )
    raise ValueError(f"unknown basis kind {kind!r}")


def basis_ref_grads(kind, p, lam):
    """d(basis)/d(l1, l2), shape lam.shape[:-1] + (N_K, 2)."""
    lam = np.asarray(lam, dtype=float)
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    one = np.ones_like(l0)
    zero = np.zeros_like(l0)
    if p == 1:
        g = np.stack(
            [
                np.stack([-one, -one], axis=-1),
                np.stack([one, zero], axis=-1),
                np.stack([zero, one], axis=-1),
            ],
            axis=-2,
        )
        return g
    if p != 2:
        raise UnsupportedDegree(f"degree {p} not supported")
    if kind == "lagrange":
        rows = [
            np.stack([1 - 4 * l0, 1 - 4 * l0], axis=-1),
            np.stack([4 * l1 - 1, zero], axis=-1),
            np.stack([zero, 4 * l2 - 1], axis=-1),
            np.stack([4 * (l0 - l1), -4 * l1], axis=-1),
            np.stack([4 * l2, 4 * l1], axis=-1),
            np.stack([-4 * l2, 4 * (l0 - l2)], axis=-1),
        ]
    elif kind == "bernstein":
        rows = [
            np.stack([-2 * l0, -2 * l0], axis=-1),
            np.stack([2 * l1, zero], axis=-1),
            np.stack([zero, 2 * l2], axis=-1),
            np.stack([2 * (l0 - l1), -2 * l1], axis=-1),
            np.stack([2 * l2, 2 * l1], axis=-1),
            np.stack([-2 * l2, 2 * (l0 - l2)], axis=-1),
        ]
    else:
        raise ValueError(f"unknown basis kind {kind!r}")
    return np.stack(rows, axis=-2)


def bernstein_to_lagrange(p):
    """Map from Bernstein coefficients to values at the Lagrange points.

    Row L holds B_sigma evaluated at Lagrange point L; rows are convex
    weights (nonnegative, summing to one).
    """
    pts = lagrange_points(p)
    return basis_values("bernstein", p, pts)


# Interior rule: 6-point symmetric, exact through degree 4, weights
# normalized to the reference-area measure (they sum to one).
_A1, _B1, _W1 = 0.816847572980459, 0.091576213509771, 0.109951743655322
_A2, _B2, _W2 = 0.108103018168070, 0.445948490915965, 0.223381589678011

_INTERIOR_POINTS = np.array(
    [
        [_A1, _B1, _B1],
        [_B1, _A1, _B1],
        [_B1, _B1, _A1],
        [_A2, _B2, _B2],
        [_B2, _A2, _B2],
        [_B2, _B2, _A2],
    ]
)
_INTERIOR_WEIGHTS = np.array([_W1, _W1, _W1, _W2, _W2, _W2])

# Edge rule: 3-point Gauss on [0, 1], exact through degree 5.
_G = np.sqrt(0.6)
_EDGE_T = np.array([0.5 * (1 - _G), 0.5, 0.5 * (1 + _G)])
_EDGE_W = np.array([5.0, 8.0, 5.0]) / 18.0


@dataclass(frozen=True)
class Quadrature:
    interior_points: np.ndarray
    interior_weights: np.ndarray
    edge_t: np.ndarray
    edge_weights: np.ndarray
    interior_degree: int = 4
    edge_degree: int = 5


def default_quadrature():
    return Quadrature(
        interior_points=_INTERIOR_POINTS.copy(),
        interior_weights=_INTERIOR_WEIGHTS.copy(),
        edge_t=_EDGE_T.copy(),
        edge_weights=_EDGE_W.copy(),
    )


def edge_barycentric(loc, t):
    """Barycentric coordinates along local edge loc, parameter t in [0, 1]."""
    t = np.asarray(t, dtype=float)
    z = np.zeros_like(t)
    if loc == 0:
        lam = (1 - t, t, z)
    elif loc == 1:
        lam = (z, 1 - t, t)
    elif loc == 2:
        lam = (t, z, 1 - t)
    else:
        raise ValueError("local edge index must be 0, 1 or 2")
    return np.stack(lam, axis=-1)


@dataclass
class DofMap:
    """Global DOF layout for a continuous (S2) or discontinuous (S1) space."""

    mesh: Mesh
    space: str
    basis: str
    degree: int
    elem_dofs: np.ndarray   # (n_tris, N_K)
    dof_points: np.ndarray  # (n_dofs, 2) coordinates of the Lagrange points
    n_dofs: int

    @property
    def n_local(self):
        return n_local_dofs(self.degree)


def build_dofmap(mesh: Mesh, space="s2", basis="lagrange", degree=1) -> DofMap:
    space = space.lower()
    basis = basis.lower()
    if space not in ("s1", "s2"):
        raise ValueError("space must be 's1' or 's2'")
    if basis not in ("lagrange", "bernstein"):
        raise ValueError("basis must be 'lagrange' or 'bernstein'")
    nk = n_local_dofs(degree)
    M = mesh.n_tris
    pts = lagrange_points(degree)

    if space == "s1":
        elem_dofs = np.arange(M * nk, dtype=np.int64).reshape(M, nk)
        phys = np.einsum("lk,mkx->mlx", pts, mesh.nodes[mesh.tris])
        dof_points = phys.reshape(M * nk, 2)
        return DofMap(mesh, space, basis, degree, elem_dofs, dof_points, M * nk)

    # S2: vertices share through periodic-identified nodes, midpoints
    # through the interface table.
    reps = np.unique(mesh.node_rep)
    vert_id = {int(r): i for i, r in enumerate(reps)}
    n_vert = len(reps)
    elem_dofs = np.empty((M, nk), dtype=np.int64)
    for k in range(M):
        for v in range(3):
            elem_dofs[k, v] = vert_id[int(mesh.node_rep[mesh.tris[k, v]])]
    n_dofs = n_vert
    if degree == 2:
        elem_dofs[:, 3:6] = n_vert + mesh.elem_edges
        n_dofs = n_vert + mesh.n_edges

    dof_points = np.zeros((n_dofs, 2))
    seen = np.zeros(n_dofs, dtype=bool)
    phys = np.einsum("lk,mkx->mlx", pts, mesh.nodes[mesh.tris])
    # First owner in element order fixes the coordinates of a shared DOF.
    for k in range(M):
        for l in range(nk):
            d = elem_dofs[k, l]
            if not seen[d]:
                dof_points[d] = phys[k, l]
                seen[d] = True
    return DofMap(mesh, space, basis, degree, elem_dofs, dof_points, n_dofs)


def element_jacobian(mesh: Mesh, element):
    p = mesh.nodes[mesh.tris[element]]
    return np.stack([p[1] - p[0], p[2] - p[0]], axis=-1)


def eval_basis(dofmap: DofMap, element, lam, tol=1e-12):
    """Values and physical gradients of the element basis at one point."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (3,):
        raise OutOfElement("expected a barycentric triple")
    if abs(lam.sum() - 1.0) > 1e-10 or np.any(lam < -tol) or np.any(lam > 1 + tol):
        raise OutOfElement(f"point {lam} outside the closed simplex")
    vals = basis_values(dofmap.basis, dofmap.degree, lam)
    ref = basis_ref_grads(dofmap.basis, dofmap.degree, lam)
    J = element_jacobian(dofmap.mesh, element)
    JinvT = np.linalg.inv(J).T
    grads = ref @ JinvT.T
    return {"values": vals, "gradients": grads}


def integrate_element(mesh: Mesh, element, f, quad: Quadrature = None):
    """Quadrature of a pointwise integrand f(x) over one element."""
    quad = quad or default_quadrature()
    p = mesh.nodes[mesh.tris[element]]
    xq = quad.interior_points @ p
    vals = np.array([f(x) for x in xq])
    return mesh.areas[element] * np.tensordot(quad.interior_weights, vals, axes=1)


def integrate_edge(mesh: Mesh, edge, side, f, quad: Quadrature = None):
    """Quadrature of f(x) over an interface, traversed by the given side."""
    quad = quad or default_quadrature()
    if side == 0:
        elem, loc = mesh.edge_left[edge], mesh.edge_left_loc[edge]
    else:
        elem, loc = mesh.edge_right[edge], mesh.edge_right_loc[edge]
        if elem < 0:
            raise ValueError("interface has no right side")
    lam = edge_barycentric(int(loc), quad.edge_t)
    p = mesh.nodes[mesh.tris[elem]]
    xq = lam @ p
    vals = np.array([f(x) for x in xq])
    return mesh.elem_edge_length[elem, loc] * np.tensordot(
        quad.edge_weights, vals, axes=1
    )
