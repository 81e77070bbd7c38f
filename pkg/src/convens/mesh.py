"""Structured triangulations of the unit square with tagged cavity walls."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InconsistentMeshError


class BoundaryTag(Enum):
    HOT_WALL = "hot"        # x = 0, T = 1
    COLD_WALL = "cold"      # x = 1, T = 0
    INSULATED = "insulated"  # y = 0 and y = 1, n.grad(T) = 0


@dataclass
class Mesh:
    """Triangle mesh with edge connectivity and tagged boundary edges.

    ``edges`` holds unique vertex pairs (sorted); ``tri_edges[t, e]`` is the
    global index of the edge opposite local vertex ``e`` of triangle ``t``.
    """

    vertices: np.ndarray          # (nv, 2)
    triangles: np.ndarray         # (nt, 3) counterclockwise
    edges: np.ndarray             # (ne, 2)
    tri_edges: np.ndarray         # (nt, 3)
    h: float
    boundary_edges: list = field(default_factory=list)  # [(edge_index, BoundaryTag)]
    subdivisions: int | None = None  # set for structured meshes; enables O(1) point location

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_triangles(self):
        return len(self.triangles)

    @property
    def num_edges(self):
        return len(self.edges)

    def triangle_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def boundary_edge_count(self, tag):
        return sum(1 for _, t in self.boundary_edges if t is tag)


def _build_edges(triangles):
    """Unique edges plus the per-triangle edge table (edge e opposite vertex e)."""
    nt = len(triangles)
    edge_index = {}
    edges = []
    tri_edges = np.empty((nt, 3), dtype=np.int64)
    for t in range(nt):
        v = triangles[t]
        for e in range(3):
            pair = (v[(e + 1) % 3], v[(e + 2) % 3])
            key = (min(pair), max(pair))
            idx = edge_index.get(key)
            if idx is None:
                idx = len(edges)
                edge_index[key] = idx
                edges.append(key)
            tri_edges[t, e] = idx
    return np.array(edges, dtype=np.int64), tri_edges


def _edge_triangle_counts(mesh):
    counts = np.zeros(mesh.num_edges, dtype=np.int64)
    for t in range(mesh.num_triangles):
        for e in range(3):
            counts[mesh.tri_edges[t, e]] += 1
    return counts


def from_arrays(vertices, triangles, h=None):
    """Assemble a Mesh from raw vertex/triangle arrays (test and I/O helper)."""
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    edges, tri_edges = _build_edges(triangles)
    if h is None:
        p = vertices[triangles]
        lengths = [np.linalg.norm(p[:, (e + 1) % 3] - p[:, (e + 2) % 3], axis=1) for e in range(3)]
        h = float(np.max(lengths))
    return Mesh(vertices, triangles, edges, tri_edges, h)


def build_structured_mesh(m):
    """Uniform triangulation of [0,1]^2: m^2 squares, each split by the
    lower-left to upper-right diagonal, with tagged boundary edges."""
    if m < 1:
        raise ValueError(f"subdivisions must be >= 1, got {m}")
    n = m + 1
    xs = np.linspace(0.0, 1.0, n)
    xx, yy = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return j * n + i

    tris = []
    for j in range(m):
        for i in range(m):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))  # below the diagonal
            tris.append((v00, v11, v01))  # above the diagonal
    triangles = np.array(tris, dtype=np.int64)
    edges, tri_edges = _build_edges(triangles)
    mesh = Mesh(vertices, triangles, edges, tri_edges, h=np.sqrt(2.0) / m,
                subdivisions=m)
    return tag_boundary(mesh)


def tag_boundary(mesh, tol=1e-12):
    """Tag boundary edges: x=0 hot, x=1 cold, y in {0,1} insulated.

    Corner edges are axis-aligned here, so the vertical-wall checks run first
    and vertical walls own the corners.
    """
    counts = _edge_triangle_counts(mesh)
    tagged = []
    for idx in np.nonzero(counts == 1)[0]:
        va, vb = mesh.edges[idx]
        pa, pb = mesh.vertices[va], mesh.vertices[vb]
        if abs(pa[0]) < tol and abs(pb[0]) < tol:
            tag = BoundaryTag.HOT_WALL
        elif abs(pa[0] - 1.0) < tol and abs(pb[0] - 1.0) < tol:
            tag = BoundaryTag.COLD_WALL
        elif (abs(pa[1]) < tol and abs(pb[1]) < tol) or \
                (abs(pa[1] - 1.0) < tol and abs(pb[1] - 1.0) < tol):
            tag = BoundaryTag.INSULATED
        else:
            raise InconsistentMeshError(
                f"boundary edge {va}-{vb} lies on no wall of the unit square")
        tagged.append((int(idx), tag))
    mesh.boundary_edges = tagged
    return mesh


def locate_points(mesh, points):
    """Map points in [0,1]^2 to (triangle index, barycentric coords).

    O(1) per point on structured meshes via the known cell layout.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if mesh.subdivisions is None:
        return _locate_generic(mesh, points)
    m = mesh.subdivisions
    x, y = points[:, 0], points[:, 1]
    i = np.clip(np.floor(x * m).astype(int), 0, m - 1)
    j = np.clip(np.floor(y * m).astype(int), 0, m - 1)
    fx = x * m - i
    fy = y * m - j
    lower = fy <= fx  # below the (i,j)->(i+1,j+1) diagonal
    tri = 2 * (j * m + i) + np.where(lower, 0, 1)
    # barycentric coordinates in the local triangles
    lam = np.empty((len(points), 3))
    # lower: vertices (i,j), (i+1,j), (i+1,j+1): lam = (1-fx, fx-fy, fy)
    lam[lower, 0] = 1.0 - fx[lower]
    lam[lower, 1] = fx[lower] - fy[lower]
    lam[lower, 2] = fy[lower]
    up = ~lower
    # upper: vertices (i,j), (i+1,j+1), (i,j+1): lam = (1-fy, fx, fy-fx)
    lam[up, 0] = 1.0 - fy[up]
    lam[up, 1] = fx[up]
    lam[up, 2] = fy[up] - fx[up]
    return tri, lam


def _locate_generic(mesh, points, tol=1e-12):
    p = mesh.vertices[mesh.triangles]
    tri_out = np.full(len(points), -1, dtype=np.int64)
    lam_out = np.zeros((len(points), 3))
    for k, pt in enumerate(points):
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        r = pt - p[:, 0]
        l1 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
        l2 = (d1[:, 0] * r[:, 1] - d1[:, 1] * r[:, 0]) / det
        l0 = 1.0 - l1 - l2
        inside = (l0 >= -tol) & (l1 >= -tol) & (l2 >= -tol)
        t = np.nonzero(inside)[0]
        if len(t) == 0:
            raise ValueError(f"point {pt} outside the mesh")
        tri_out[k] = t[0]
        lam_out[k] = (l0[t[0]], l1[t[0]], l2[t[0]])
    return tri_out, lam_out
