"""Precomputed geometry, quadrature and trace tables for one space.

A :class:`Discretization` binds a mesh and a DOF map and caches the
arrays every kernel needs: physical basis gradients at interior and
edge quadrature points, interface trace tables (with the right side
enumerated in reversed order so both sides see the same physical
points), dual volumes and neighbor lists.  All arrays are immutable
after construction.
"""

import numpy as np

from . import basis as fb
from .errors import NonConforming
from .mesh import Mesh, dual_volumes


class Discretization:
    def __init__(self, mesh: Mesh, dofmap: fb.DofMap, quad: fb.Quadrature = None):
        if dofmap.mesh is not mesh:
            raise ValueError("dofmap was built on a different mesh")
        self.mesh = mesh
        self.dofmap = dofmap
        self.quad = quad or fb.default_quadrature()
        self._cache = {}
        self._build_geometry()
        self._build_interior_tables()
        self._build_edge_tables()
        self._build_interface_tables()
        self.dual = dual_volumes(mesh, dofmap)
        self._build_neighbors()
        self._check_trace_pairing()

    # -- construction ------------------------------------------------

    def _build_geometry(self):
        mesh = self.mesh
        p = mesh.nodes[mesh.tris]           # (M, 3, 2)
        J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        Jinv = np.empty_like(J)
        Jinv[:, 0, 0] = J[:, 1, 1] / det
        Jinv[:, 0, 1] = -J[:, 0, 1] / det
        Jinv[:, 1, 0] = -J[:, 1, 0] / det
        Jinv[:, 1, 1] = J[:, 0, 0] / det
        self.jacobians = J
        self.jinv_T = np.swapaxes(Jinv, -1, -2)
        self.corner_coords = p
        # Physical coordinates of the local Lagrange points.
        pts = fb.lagrange_points(self.dofmap.degree)
        self.lagrange_phys = np.einsum("lk,mkx->mlx", pts, p)

    def _build_interior_tables(self):
        q = self.quad
        kind, p = self.dofmap.basis, self.dofmap.degree
        self.int_weights = q.interior_weights
        self.int_points = q.interior_points
        self.int_vals = fb.basis_values(kind, p, q.interior_points)      # (nq, N)
        ref = fb.basis_ref_grads(kind, p, q.interior_points)             # (nq, N, 2)
        self.int_grads = np.einsum("mij,qnj->mqni", self.jinv_T, ref)
        self.int_phys = np.einsum("qk,mkx->mqx", q.interior_points, self.corner_coords)
        # area- and weight-folded gradient table (M, N, nq*2) for volume terms
        M = self.mesh.n_tris
        nq, nk = self.int_vals.shape
        gw = self.int_grads * (self.mesh.areas[:, None, None, None]
                               * self.int_weights[None, :, None, None])
        self.int_gradw_mat = np.ascontiguousarray(
            gw.transpose(0, 2, 1, 3).reshape(M, nk, nq * 2)
        )
        self.int_grads_T = np.ascontiguousarray(self.int_grads.transpose(0, 1, 3, 2))

    def _build_edge_tables(self):
        q = self.quad
        kind, p = self.dofmap.basis, self.dofmap.degree
        lam = np.stack([fb.edge_barycentric(loc, q.edge_t) for loc in range(3)])
        self.edge_weights = q.edge_weights
        self.edge_lam = lam                                              # (3, nq, 3)
        self.edge_vals = fb.basis_values(kind, p, lam)                   # (3, nq, N)
        ref = fb.basis_ref_grads(kind, p, lam)                           # (3, nq, N, 2)
        self.edge_grads = np.einsum("mij,lqnj->mlqni", self.jinv_T, ref)
        self.edge_phys = np.einsum("lqk,mkx->mlqx", lam, self.corner_coords)

    def _build_interface_tables(self):
        mesh = self.mesh
        li, ll = mesh.edge_left, mesh.edge_left_loc
        ri, rl = mesh.edge_right, mesh.edge_right_loc
        self.if_left = li
        self.if_right = ri
        self.if_normal = mesh.elem_edge_normal[li, ll]
        self.if_length = mesh.edge_length
        hk = mesh.diameters
        self.if_h = np.where(ri >= 0, np.maximum(hk[li], hk[np.maximum(ri, 0)]), hk[li])
        self.if_vals_L = self.edge_vals[ll]                              # (E, nq, N)
        self.if_grads_L = self.edge_grads[li, ll]                        # (E, nq, N, 2)
        self.if_phys_L = self.edge_phys[li, ll]                          # (E, nq, 2)
        has_r = ri >= 0
        rs = np.maximum(ri, 0)
        # The right owner traverses the shared edge backwards, so its
        # quadrature points coincide with the left ones in reversed order.
        self.if_vals_R = self.edge_vals[rl][:, ::-1]
        self.if_grads_R = self.edge_grads[rs, rl][:, ::-1]
        self.if_has_right = has_r
        self.if_dofs_L = self.dofmap.elem_dofs[li]
        self.if_dofs_R = self.dofmap.elem_dofs[rs]
        # weight- and length-folded tables for fast contractions
        w = self.edge_weights
        self.if_vals_L_wl = np.ascontiguousarray(
            (self.if_vals_L * (w[None, :, None] * self.if_length[:, None, None]))
            .transpose(0, 2, 1)
        )                                                                # (E, N, nq)
        self.if_vals_R_wl = np.ascontiguousarray(
            (self.if_vals_R * (w[None, :, None] * self.if_length[:, None, None]))
            .transpose(0, 2, 1)
        )
        self.if_grads_L_T = np.ascontiguousarray(self.if_grads_L.transpose(0, 1, 3, 2))
        self.if_grads_R_T = np.ascontiguousarray(self.if_grads_R.transpose(0, 1, 3, 2))

    def _build_neighbors(self):
        mesh = self.mesh
        nbr = np.full((mesh.n_tris, 3), -1, dtype=np.int64)
        e = mesh.elem_edges
        side = mesh.elem_edge_side
        left = mesh.edge_left[e]
        right = mesh.edge_right[e]
        nbr = np.where(side == 0, right, left)
        self.elem_neighbors = nbr

    def _check_trace_pairing(self):
        """Both owners must enumerate the same physical quadrature points."""
        has_r = self.if_has_right
        if not np.any(has_r):
            return
        mesh = self.mesh
        rs = np.maximum(self.if_right, 0)
        rl = mesh.edge_right_loc
        x_r = self.edge_phys[rs, rl][:, ::-1]                            # (E, nq, 2)
        x_l = self.if_phys_L + mesh.edge_translation[:, None, :]
        err = np.abs(x_r - x_l)[has_r]
        scale = max(1.0, float(np.max(np.abs(mesh.nodes))))
        if err.size and err.max() > 1e-12 * scale:
            raise NonConforming("interface quadrature points do not pair up")

    # -- lazy integral tables -----------------------------------------

    @property
    def phi_grad_integrals(self):
        """int_K phi_sigma grad(phi_sigma') dx, shape (M, N, N, 2)."""
        if "pgi" not in self._cache:
            tab = np.einsum(
                "q,qn,mqki->mnki", self.int_weights, self.int_vals, self.int_grads
            )
            self._cache["pgi"] = tab * self.mesh.areas[:, None, None, None]
        return self._cache["pgi"]

    @property
    def grad_integrals(self):
        """int_K grad(phi_sigma) dx, shape (M, N, 2)."""
        if "gi" not in self._cache:
            tab = np.einsum("q,mqni->mni", self.int_weights, self.int_grads)
            self._cache["gi"] = tab * self.mesh.areas[:, None, None]
        return self._cache["gi"]

    @property
    def phi_phi_normal_integrals(self):
        """oint_dK phi_sigma phi_sigma' n dgamma, shape (M, N, N, 2)."""
        if "ppn" not in self._cache:
            mesh = self.mesh
            out = np.zeros((mesh.n_tris, self.dofmap.n_local, self.dofmap.n_local, 2))
            for loc in range(3):
                v = self.edge_vals[loc]                                  # (nq, N)
                pp = np.einsum("q,qn,qk->nk", self.edge_weights, v, v)
                seg = mesh.elem_edge_length[:, loc, None, None, None] * (
                    pp[None, :, :, None] * mesh.elem_edge_normal[:, loc][:, None, None, :]
                )
                out += seg
            self._cache["ppn"] = out
        return self._cache["ppn"]

    # -- field helpers -------------------------------------------------

    def elem_values(self, U):
        """Gather per-element DOF values, shape (M, N_K, ncomp)."""
        return np.asarray(U)[self.dofmap.elem_dofs]

    def interior_field(self, U_elem):
        """Field at interior quadrature points, (M, nq, ncomp)."""
        if U_elem.ndim == 2:
            return U_elem @ self.int_vals.T
        return np.matmul(self.int_vals[None], U_elem)

    def interior_gradient(self, U_elem):
        """Field gradient at interior quadrature points, (M, nq, ncomp, 2)."""
        if U_elem.ndim == 2:
            return np.matmul(self.int_grads_T, U_elem[:, None, :, None])[..., 0]
        out = np.matmul(self.int_grads_T, U_elem[:, None])    # (M, nq, 2, C)
        return out.swapaxes(-1, -2)

    def trace_L(self, U_elem):
        return np.matmul(self.if_vals_L, U_elem[self.if_left])

    def trace_R(self, U_elem):
        rs = np.maximum(self.if_right, 0)
        return np.matmul(self.if_vals_R, U_elem[rs])

    def trace_grad_L(self, U_elem):
        out = np.matmul(self.if_grads_L_T, U_elem[self.if_left][:, None])
        return out.swapaxes(-1, -2)                           # (E, nq, C, 2)

    def trace_grad_R(self, U_elem):
        rs = np.maximum(self.if_right, 0)
        out = np.matmul(self.if_grads_R_T, U_elem[rs][:, None])
        return out.swapaxes(-1, -2)

    def scatter_interface(self, contrib_L, contrib_R):
        """Accumulate per-interface DOF contributions into element arrays.

        contrib_L/contrib_R have shape (E, N_K, ...) and are added to the
        left/right owner rows of a fresh (M, N_K, ...) array.
        """
        M = self.mesh.n_tris
        tail = contrib_L.shape[1:]
        flatL = contrib_L.reshape(contrib_L.shape[0], -1)
        out = np.column_stack(
            [
                np.bincount(self.if_left, weights=flatL[:, c], minlength=M)
                for c in range(flatL.shape[1])
            ]
        )
        has_r = self.if_has_right
        flatR = contrib_R[has_r].reshape(-1, flatL.shape[1])
        right = self.if_right[has_r]
        for c in range(flatL.shape[1]):
            out[:, c] += np.bincount(right, weights=flatR[:, c], minlength=M)
        return out.reshape((M,) + tail)

    def interpolate(self, fn):
        """Interpolate fn(x, y) -> (..., ncomp) onto the DOF vector.

        Lagrange DOFs take point values; Bernstein coefficients solve the
        local value problem through the inverse Bernstein-to-Lagrange
        map.  The first owner element (lowest id) fixes shared DOFs.
        """
        X = self.lagrange_phys
        vals = np.asarray(fn(X[..., 0], X[..., 1]), dtype=float)
        if self.dofmap.basis == "bernstein" and self.dofmap.degree > 1:
            Minv = np.linalg.inv(fb.bernstein_to_lagrange(self.dofmap.degree))
            vals = np.einsum("ln,mn...->ml...", Minv, vals)
        flat_dofs = self.dofmap.elem_dofs.ravel()
        first = np.full(self.dofmap.n_dofs, -1, dtype=np.int64)
        # reversed scan leaves the FIRST occurrence in place
        for i in range(flat_dofs.size - 1, -1, -1):
            first[flat_dofs[i]] = i
        nk = self.dofmap.n_local
        flat_vals = vals.reshape((-1,) + vals.shape[2:])
        return flat_vals[first]

    def evaluate_at_points(self, U, points, k_candidates=12):
        """Evaluate the finite-element field at arbitrary physical points."""
        from scipy.spatial import cKDTree

        points = np.atleast_2d(np.asarray(points, dtype=float))
        centroids = self.corner_coords.mean(axis=1)
        tree = cKDTree(centroids)
        k = min(k_candidates, self.mesh.n_tris)
        _, cand = tree.query(points, k=k)
        cand = np.atleast_2d(cand)
        U_elem = self.elem_values(U)
        ncomp = U_elem.shape[-1]
        out = np.empty((points.shape[0], ncomp))
        found = np.zeros(points.shape[0], dtype=bool)
        for j in range(cand.shape[1]):
            todo = np.nonzero(~found)[0]
            if todo.size == 0:
                break
            elems = cand[todo, j]
            lam = self._barycentric(points[todo], elems)
            ok = np.all(lam > -1e-10, axis=1)
            hit = todo[ok]
            if hit.size:
                lam_ok = np.clip(lam[ok], 0.0, 1.0)
                vals = fb.basis_values(self.dofmap.basis, self.dofmap.degree, lam_ok)
                out[hit] = np.einsum("pn,pnc->pc", vals, U_elem[elems[ok]])
                found[hit] = True
        if not np.all(found):
            # brute-force fallback for stragglers
            for i in np.nonzero(~found)[0]:
                lam_all = self._barycentric(
                    np.repeat(points[i][None], self.mesh.n_tris, axis=0),
                    np.arange(self.mesh.n_tris),
                )
                e = int(np.argmax(lam_all.min(axis=1)))
                lam = np.clip(lam_all[e], 0.0, 1.0)
                vals = fb.basis_values(self.dofmap.basis, self.dofmap.degree, lam)
                out[i] = vals @ U_elem[e]
        return out

    def _barycentric(self, pts, elems):
        p0 = self.corner_coords[elems, 0]
        rel = pts - p0
        Jinv = np.linalg.inv(self.jacobians[elems])
        l12 = np.einsum("pij,pj->pi", Jinv, rel)
        l0 = 1.0 - l12.sum(axis=1)
        return np.concatenate([l0[:, None], l12], axis=1)


def make_discretization(mesh, space="s2", basis="lagrange", degree=1):
    return Discretization(mesh, fb.build_dofmap(mesh, space, basis, degree))
