"""Conformal triangular meshes with periodic identification.

The mesh stores, besides nodes and triangles, an interface table: one
entry per internal edge and one per matched periodic edge couple.  Every
interface has a left owner (the element that traverses the edge in its
own counterclockwise orientation) and, when present, a right owner that
traverses it in the opposite direction.  For periodic couples a
translation vector maps left-side coordinates onto the right side.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateTriangle,
    NonConforming,
    UnmatchedPeriodicEdge,
)


@dataclass
class Mesh:
    nodes: np.ndarray          # (n_nodes, 2)
    tris: np.ndarray           # (n_tris, 3) counterclockwise
    areas: np.ndarray          # (n_tris,)
    diameters: np.ndarray      # (n_tris,) longest edge
    # interface table
    edge_nodes: np.ndarray     # (n_edges, 2) ordered along the left traversal
    edge_left: np.ndarray      # (n_edges,)
    edge_left_loc: np.ndarray  # (n_edges,)
    edge_right: np.ndarray     # (n_edges,) or -1 for an unpaired boundary edge
    edge_right_loc: np.ndarray
    edge_periodic: np.ndarray      # (n_edges,) bool
    edge_translation: np.ndarray   # (n_edges, 2): x_right = x_left + t
    edge_length: np.ndarray
    # per-element edge data
    elem_edges: np.ndarray       # (n_tris, 3) interface index of local edge k
    elem_edge_side: np.ndarray   # (n_tris, 3) 0 = left owner, 1 = right owner
    elem_edge_normal: np.ndarray  # (n_tris, 3, 2) unit outward
    elem_edge_length: np.ndarray  # (n_tris, 3)
    node_rep: np.ndarray         # (n_nodes,) periodic-identified representative
    periodic: bool
    bbox: tuple = field(default=None)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_tris(self):
        return self.tris.shape[0]

    @property
    def n_edges(self):
        return self.edge_left.shape[0]

    @property
    def num_internal_edges(self):
        return int(np.sum((self.edge_right >= 0) & ~self.edge_periodic))

    @property
    def num_periodic_pairs(self):
        return int(np.sum(self.edge_periodic))

    @property
    def num_unpaired_boundary_edges(self):
        return int(np.sum(self.edge_right < 0))

    def content_hash(self):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.nodes).tobytes())
        h.update(np.ascontiguousarray(self.tris).tobytes())
        h.update(b"periodic" if self.periodic else b"open")
        return h.hexdigest()[:16]


@dataclass
class DualVolumes:
    c_sigma: np.ndarray   # (n_dofs,) dual volume per global DOF
    k_sigma: np.ndarray   # (n_tris,) |K| / N_K


def _signed_area2(nodes, tris):
    a = nodes[tris[:, 1]] - nodes[tris[:, 0]]
    b = nodes[tris[:, 2]] - nodes[tris[:, 0]]
    return a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]


def build_mesh(raw_nodes, raw_triangles, periodic=False, periodic_tolerance=None):
    """Build connectivity, geometry and (optionally) periodic pairing.

    Clockwise triangles are re-oriented in place; zero-area triangles,
    hanging nodes and edges with more than two owners are rejected.
    """
    nodes = np.asarray(raw_nodes, dtype=float).copy()
    tris = np.asarray(raw_triangles, dtype=np.int64).copy()
    if tris.ndim != 2 or tris.shape[1] != 3 or tris.shape[0] < 1:
        raise NonConforming("need at least one index triple")
    if tris.min() < 0 or tris.max() >= nodes.shape[0]:
        raise NonConforming("triangle index out of range")

    extent = nodes.max(axis=0) - nodes.min(axis=0)
    scale = max(float(np.max(np.abs(nodes))), float(extent.max()), 1.0)

    area2 = _signed_area2(nodes, tris)
    flip = area2 < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    area2 = np.abs(area2)
    if np.any(area2 <= 1e-14 * scale * scale):
        bad = int(np.argmin(area2))
        raise DegenerateTriangle(f"triangle {bad} has zero area")
    areas = 0.5 * area2

    # Edge ownership keyed by the unordered node pair.
    owners = {}
    for k in range(tris.shape[0]):
        for loc in range(3):
            a = int(tris[k, loc])
            b = int(tris[k, (loc + 1) % 3])
            key = (a, b) if a < b else (b, a)
            owners.setdefault(key, []).append((k, loc))
    for key, lst in owners.items():
        if len(lst) > 2:
            raise NonConforming(f"edge {key} shared by {len(lst)} triangles")

    boundary = [(key, lst[0]) for key, lst in owners.items() if len(lst) == 1]
    _reject_hanging_nodes(nodes, boundary, tol=1e-12 * scale)

    pairs = {}
    translations = {}
    if periodic:
        pairs, translations = _pair_periodic_edges(
            nodes, tris, boundary, periodic_tolerance, scale
        )

    matched = set(pairs) | set(pairs.values())
    edge_rows = []
    for key, lst in sorted(owners.items()):
        if len(lst) == 2:
            (k1, loc1), (k2, loc2) = sorted(lst)
            a1 = int(tris[k1, loc1])
            b1 = int(tris[k1, (loc1 + 1) % 3])
            a2 = int(tris[k2, loc2])
            b2 = int(tris[k2, (loc2 + 1) % 3])
            if (a1, b1) == (a2, b2):
                raise NonConforming(f"edge {key} traversed twice in the same sense")
            edge_rows.append((a1, b1, k1, loc1, k2, loc2, False, 0.0, 0.0))
        elif key not in matched:
            (k1, loc1) = lst[0]
            a1 = int(tris[k1, loc1])
            b1 = int(tris[k1, (loc1 + 1) % 3])
            if periodic:
                raise UnmatchedPeriodicEdge(f"boundary edge {key} has no partner")
            edge_rows.append((a1, b1, k1, loc1, -1, -1, False, 0.0, 0.0))
    for key_l, key_r in sorted(pairs.items()):
        (k1, loc1) = owners[key_l][0]
        (k2, loc2) = owners[key_r][0]
        a1 = int(tris[k1, loc1])
        b1 = int(tris[k1, (loc1 + 1) % 3])
        t = translations[key_l]
        edge_rows.append((a1, b1, k1, loc1, k2, loc2, True, t[0], t[1]))

    n_edges = len(edge_rows)
    edge_nodes = np.array([(r[0], r[1]) for r in edge_rows], dtype=np.int64)
    edge_left = np.array([r[2] for r in edge_rows], dtype=np.int64)
    edge_left_loc = np.array([r[3] for r in edge_rows], dtype=np.int64)
    edge_right = np.array([r[4] for r in edge_rows], dtype=np.int64)
    edge_right_loc = np.array([r[5] for r in edge_rows], dtype=np.int64)
    edge_periodic = np.array([r[6] for r in edge_rows], dtype=bool)
    edge_translation = np.array([(r[7], r[8]) for r in edge_rows], dtype=float)

    elem_edges = np.full((tris.shape[0], 3), -1, dtype=np.int64)
    elem_edge_side = np.zeros((tris.shape[0], 3), dtype=np.int64)
    for e in range(n_edges):
        elem_edges[edge_left[e], edge_left_loc[e]] = e
        elem_edge_side[edge_left[e], edge_left_loc[e]] = 0
        if edge_right[e] >= 0:
            elem_edges[edge_right[e], edge_right_loc[e]] = e
            elem_edge_side[edge_right[e], edge_right_loc[e]] = 1
    if np.any(elem_edges < 0):
        raise NonConforming("element edge without interface entry")

    # Outward normals: rotate the ccw edge tangent by -90 degrees.
    p = nodes[tris]                                   # (M, 3, 2)
    tangents = p[:, [1, 2, 0], :] - p                 # local edge k: vk -> vk+1
    lengths = np.hypot(tangents[..., 0], tangents[..., 1])
    normals = np.stack([tangents[..., 1], -tangents[..., 0]], axis=-1)
    normals /= lengths[..., None]
    diameters = lengths.max(axis=1)
    edge_length = lengths[edge_left, edge_left_loc]

    if periodic:
        right_len = lengths[edge_right, edge_right_loc]
        rel = np.abs(edge_length - right_len) / edge_length
        if np.any(rel > 1e-9):
            raise UnmatchedPeriodicEdge("paired edges differ in length")

    node_rep = _identify_nodes(nodes, edge_rows, tris)

    return Mesh(
        nodes=nodes,
        tris=tris,
        areas=areas,
        diameters=diameters,
        edge_nodes=edge_nodes,
        edge_left=edge_left,
        edge_left_loc=edge_left_loc,
        edge_right=edge_right,
        edge_right_loc=edge_right_loc,
        edge_periodic=edge_periodic,
        edge_translation=edge_translation,
        edge_length=edge_length,
        elem_edges=elem_edges,
        elem_edge_side=elem_edge_side,
        elem_edge_normal=normals,
        elem_edge_length=lengths,
        node_rep=node_rep,
        periodic=periodic,
        bbox=(
            float(nodes[:, 0].min()),
            float(nodes[:, 0].max()),
            float(nodes[:, 1].min()),
            float(nodes[:, 1].max()),
        ),
    )


def _reject_hanging_nodes(nodes, boundary_edges, tol):
    for (a, b), _ in boundary_edges:
        pa, pb = nodes[a], nodes[b]
        d = pb - pa
        L2 = d @ d
        rel = nodes - pa
        t = (rel @ d) / L2
        perp = rel - t[:, None] * d
        dist = np.hypot(perp[:, 0], perp[:, 1])
        on_open_segment = (dist < tol) & (t > 1e-9) & (t < 1 - 1e-9)
        on_open_segment[[a, b]] = False
        if np.any(on_open_segment):
            raise NonConforming(
                f"node {int(np.argmax(on_open_segment))} hangs on edge ({a}, {b})"
            )


def _edge_side_of_box(nodes, key, bbox, tol):
    (xmin, xmax, ymin, ymax) = bbox
    pts = nodes[list(key)]
    if np.all(np.abs(pts[:, 0] - xmin) < tol):
        return "xmin"
    if np.all(np.abs(pts[:, 0] - xmax) < tol):
        return "xmax"
    if np.all(np.abs(pts[:, 1] - ymin) < tol):
        return "ymin"
    if np.all(np.abs(pts[:, 1] - ymax) < tol):
        return "ymax"
    return None


def _pair_periodic_edges(nodes, tris, boundary, tol, scale):
    xmin, ymin = nodes.min(axis=0)
    xmax, ymax = nodes.max(axis=0)
    if tol is None:
        tol = 1e-9 * max(xmax - xmin, ymax - ymin)
    bbox = (xmin, xmax, ymin, ymax)
    sides = {"xmin": [], "xmax": [], "ymin": [], "ymax": []}
    for key, _ in boundary:
        side = _edge_side_of_box(nodes, key, bbox, tol)
        if side is None:
            raise UnmatchedPeriodicEdge(f"boundary edge {key} off the bounding box")
        sides[side].append(key)

    pairs = {}
    translations = {}

    def match(low, high, t):
        t = np.asarray(t, dtype=float)
        high_mids = {k: 0.5 * (nodes[k[0]] + nodes[k[1]]) for k in sides[high]}
        used = set()
        for key in sides[low]:
            mid = 0.5 * (nodes[key[0]] + nodes[key[1]]) + t
            best, best_d = None, np.inf
            for hk, hm in high_mids.items():
                if hk in used:
                    continue
                d = np.hypot(*(hm - mid))
                if d < best_d:
                    best, best_d = hk, d
            if best is None or best_d > tol:
                raise UnmatchedPeriodicEdge(f"no partner for boundary edge {key}")
            used.add(best)
            pairs[key] = best
            translations[key] = t
        if len(used) != len(sides[high]):
            raise UnmatchedPeriodicEdge(f"unpaired edges remain on side {high}")

    match("xmin", "xmax", (xmax - xmin, 0.0))
    match("ymin", "ymax", (0.0, ymax - ymin))
    return pairs, translations


def _identify_nodes(nodes, edge_rows, tris):
    """Union-find over nodes joined through periodic edge couples."""
    parent = np.arange(nodes.shape[0])

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    for row in edge_rows:
        a1, b1, k1, loc1, k2, loc2, is_per = row[:7]
        if not is_per:
            continue
        t = np.array(row[7:9])
        a2 = int(tris[k2, loc2])
        b2 = int(tris[k2, (loc2 + 1) % 3])
        for left_node in (a1, b1):
            target = nodes[left_node] + t
            d2 = np.hypot(*(nodes[a2] - target))
            d3 = np.hypot(*(nodes[b2] - target))
            union(left_node, a2 if d2 <= d3 else b2)
    return np.array([find(i) for i in range(nodes.shape[0])])


def shape_regularity(mesh: Mesh):
    """Observed bounds of h_K^2 / |K| over all elements."""
    ratio = mesh.diameters**2 / mesh.areas
    return {"min": float(ratio.min()), "max": float(ratio.max())}


def dual_volumes(mesh: Mesh, dofmap) -> DualVolumes:
    """Dual volumes |C_sigma| = sum over owner elements of |K| / N_K."""
    k_sigma = mesh.areas / dofmap.n_local
    c_sigma = np.zeros(dofmap.n_dofs)
    np.add.at(c_sigma, dofmap.elem_dofs, k_sigma[:, None])
    return DualVolumes(c_sigma=c_sigma, k_sigma=k_sigma)


def structured_rect(nx, ny, width=10.0, height=10.0, center=(0.0, 0.0), periodic=True):
    """Uniform right-triangle mesh of a rectangle, 2*nx*ny elements."""
    xs = np.linspace(center[0] - width / 2.0, center[0] + width / 2.0, nx + 1)
    ys = np.linspace(center[1] - height / 2.0, center[1] + height / 2.0, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=-1)

    def nid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b = nid(i, j), nid(i + 1, j)
            c, d = nid(i + 1, j + 1), nid(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    return build_mesh(nodes, np.array(tris), periodic=periodic)


def structured_square(n, side=10.0, center=(0.0, 0.0), periodic=True):
    """Uniform right-triangle mesh of a square, 2*n*n elements."""
    return structured_rect(n, n, width=side, height=side, center=center, periodic=periodic)


def read_mesh(path):
    """Read the plain-text mesh format (header ``rdmesh 1``)."""
    tokens = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    it = iter(tokens)

    def take(what):
        try:
            return next(it)
        except StopIteration:
            raise NonConforming(f"truncated mesh file, expected {what}") from None

    if take("magic") != "rdmesh" or take("version") != "1":
        raise NonConforming("not an rdmesh-1 file")
    if take("nodes") != "nodes":
        raise NonConforming("expected 'nodes'")
    n = int(take("node count"))
    nodes = np.array(
        [[float(take("x")), float(take("y"))] for _ in range(n)], dtype=float
    )
    if take("triangles") != "triangles":
        raise NonConforming("expected 'triangles'")
    m = int(take("triangle count"))
    tris = np.array(
        [[int(take("i")), int(take("j")), int(take("k"))] for _ in range(m)],
        dtype=np.int64,
    )
    periodic = False
    rest = list(it)
    if rest[:2] == ["periodic", "auto"]:
        periodic = True
        rest = rest[2:]
    if rest:
        raise NonConforming(f"trailing tokens in mesh file: {rest[:4]}")
    return build_mesh(nodes, tris, periodic=periodic)


def write_mesh(path, mesh: Mesh):
    with open(path, "w") as fh:
        fh.write("rdmesh 1\n")
        fh.write(f"nodes {mesh.n_nodes}\n")
        for x, y in mesh.nodes:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        fh.write(f"triangles {mesh.n_tris}\n")
        for i, j, k in mesh.tris:
            fh.write(f"{i} {j} {k}\n")
        if mesh.periodic:
            fh.write("periodic auto\n")
