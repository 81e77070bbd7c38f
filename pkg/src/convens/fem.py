"""Taylor-Hood (P2-P1) assembly over triangle meshes.

Velocity lives in vector P2 (layout: all x-components, then all
y-components), pressure in P1 on vertices, temperature in scalar P2.
Scalar P2 dofs are vertex values followed by edge-midpoint values.

All integrals use a degree-6 rule, which is exact for every assembled
term here (the trilinear form couples P2 * grad(P2) * P2, degree 5), so
skew-symmetry of the convection form holds to rounding.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .mesh import BoundaryTag, locate_points


class SpaceKind(Enum):
    VECTOR_P2 = "vector_p2"
    SCALAR_P2 = "scalar_p2"
    SCALAR_P1 = "scalar_p1"


# Dunavant degree-6 rule, 12 points, weights normalized to sum to 1;
# integral over a triangle of area A is A * sum(w * f(x_q)).
def _dunavant6():
    groups = [
        (0.116786275726379, (0.501426509658179, 0.249286745170910, 0.249286745170910)),
        (0.050844906370207, (0.873821971016996, 0.063089014491502, 0.063089014491502)),
        (0.082851075618374, (0.053145049844817, 0.310352451033784, 0.636502499121399)),
    ]
    pts, wts = [], []
    for w, (a, b, c) in groups[:2]:
        for perm in ((a, b, c), (b, a, c), (b, c, a)):
            pts.append(perm)
            wts.append(w)
    w, (a, b, c) = groups[2]
    for perm in ((a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)):
        pts.append(perm)
        wts.append(w)
    return np.array(pts), np.array(wts)


QUAD_POINTS, QUAD_WEIGHTS = _dunavant6()  # (12, 3) barycentric, (12,)


def p2_values(lam):
    """P2 basis values at barycentric points lam (nq, 3) -> (nq, 6).

    Local ordering: 3 vertex functions L_i(2L_i - 1), then 3 edge bubbles
    4 L_a L_b where edge e is opposite vertex e.
    """
    lam = np.atleast_2d(lam)
    out = np.empty((lam.shape[0], 6))
    for i in range(3):
        out[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
    for e in range(3):
        a, b = (e + 1) % 3, (e + 2) % 3
        out[:, 3 + e] = 4.0 * lam[:, a] * lam[:, b]
    return out


def p2_grad_coeffs(lam):
    """Coefficients D with grad(phi_i)(q) = sum_k D[q, i, k] * grad(L_k)."""
    lam = np.atleast_2d(lam)
    nq = lam.shape[0]
    D = np.zeros((nq, 6, 3))
    for i in range(3):
        D[:, i, i] = 4.0 * lam[:, i] - 1.0
    for e in range(3):
        a, b = (e + 1) % 3, (e + 2) % 3
        D[:, 3 + e, a] = 4.0 * lam[:, b]
        D[:, 3 + e, b] = 4.0 * lam[:, a]
    return D


@dataclass
class FeSpace:
    kind: SpaceKind
    ctx: "FemContext"

    @property
    def mesh(self):
        return self.ctx.mesh

    @property
    def dof_count(self):
        ns = self.ctx.num_scalar_p2
        if self.kind is SpaceKind.VECTOR_P2:
            return 2 * ns
        if self.kind is SpaceKind.SCALAR_P2:
            return ns
        return self.mesh.num_vertices

    @property
    def dof_map(self):
        if self.kind is SpaceKind.SCALAR_P1:
            return self.mesh.triangles
        return self.ctx.l2g_p2

    def dof_coords(self):
        if self.kind is SpaceKind.SCALAR_P1:
            return self.mesh.vertices
        if self.kind is SpaceKind.SCALAR_P2:
            return self.ctx.p2_coords
        return np.vstack([self.ctx.p2_coords, self.ctx.p2_coords])


class FemContext:
    """Per-mesh precomputation shared by all assembly routines."""

    def __init__(self, mesh):
        self.mesh = mesh
        tris = mesh.triangles
        pts = mesh.vertices[tris]                       # (nt, 3, 2)
        d1 = pts[:, 1] - pts[:, 0]
        d2 = pts[:, 2] - pts[:, 0]
        self.areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        if np.any(self.areas <= 0):
            raise ValueError("mesh has non-positive triangle areas")

        # grad(L_k) constant per triangle: grad L_k = (b_k, c_k) / (2A)
        nt = mesh.num_triangles
        gradL = np.empty((nt, 3, 2))
        for k in range(3):
            a, b = (k + 1) % 3, (k + 2) % 3
            gradL[:, k, 0] = pts[:, a, 1] - pts[:, b, 1]
            gradL[:, k, 1] = pts[:, b, 0] - pts[:, a, 0]
        gradL /= (2.0 * self.areas)[:, None, None]
        self.gradL = gradL

        self.num_scalar_p2 = mesh.num_vertices + mesh.num_edges
        self.l2g_p2 = np.hstack([tris, mesh.num_vertices + mesh.tri_edges])  # (nt, 6)

        self.phi = p2_values(QUAD_POINTS)               # (nq, 6)
        Dref = p2_grad_coeffs(QUAD_POINTS)              # (nq, 6, 3)
        self.dphi = np.einsum("qik,tkc->tqic", Dref, gradL)  # (nt, nq, 6, 2)
        self.wq = QUAD_WEIGHTS
        # physical quadrature point coordinates, (nt, nq, 2)
        self.qpts = np.einsum("qk,tkc->tqc", QUAD_POINTS, pts)

        mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
        self.p2_coords = np.vstack([mesh.vertices, mids])

        self._spaces = {}
        self._cache = {}

    def space(self, kind):
        if kind not in self._spaces:
            self._spaces[kind] = FeSpace(kind, self)
        return self._spaces[kind]

    # -- scatter helper -------------------------------------------------

    def _scatter(self, local, rows_map, cols_map, shape):
        nt, ni, nj = local.shape
        rows = np.repeat(rows_map, nj, axis=1).ravel()
        cols = np.tile(cols_map, (1, ni)).ravel()
        A = sp.coo_matrix((local.ravel(), (rows, cols)), shape=shape)
        return A.tocsr()

    # -- matrices --------------------------------------------------------

    def mass_scalar_p2(self):
        if "M_p2" not in self._cache:
            Mref = np.einsum("q,qi,qj->ij", self.wq, self.phi, self.phi)
            local = self.areas[:, None, None] * Mref
            n = self.num_scalar_p2
            self._cache["M_p2"] = self._scatter(local, self.l2g_p2, self.l2g_p2, (n, n))
        return self._cache["M_p2"]

    def mass_scalar_p1(self):
        if "M_p1" not in self._cache:
            lam = QUAD_POINTS
            Mref = np.einsum("q,qi,qj->ij", self.wq, lam, lam)
            local = self.areas[:, None, None] * Mref
            n = self.mesh.num_vertices
            tris = self.mesh.triangles
            self._cache["M_p1"] = self._scatter(local, tris, tris, (n, n))
        return self._cache["M_p1"]

    def mass_vector_p2(self):
        if "M_vec" not in self._cache:
            M = self.mass_scalar_p2()
            self._cache["M_vec"] = sp.block_diag((M, M), format="csr")
        return self._cache["M_vec"]

    def stiffness_scalar_p2(self):
        if "K_p2" not in self._cache:
            local = np.einsum("q,tqic,tqjc->tij", self.wq, self.dphi, self.dphi)
            local *= self.areas[:, None, None]
            n = self.num_scalar_p2
            self._cache["K_p2"] = self._scatter(local, self.l2g_p2, self.l2g_p2, (n, n))
        return self._cache["K_p2"]

    def stiffness_vector_p2(self):
        if "K_vec" not in self._cache:
            K = self.stiffness_scalar_p2()
            self._cache["K_vec"] = sp.block_diag((K, K), format="csr")
        return self._cache["K_vec"]

    def divergence(self):
        """B with B[i, j] = (psi_i, d_x phi_j | d_y phi_j), shape (nv, 2 ns)."""
        if "B" not in self._cache:
            lam = QUAD_POINTS
            ns = self.num_scalar_p2
            nv = self.mesh.num_vertices
            tris = self.mesh.triangles
            blocks = []
            for c in range(2):
                local = np.einsum("q,qi,tqjc->tij", self.wq, lam, self.dphi[..., c:c + 1])
                local *= self.areas[:, None, None]
                blocks.append(self._scatter(local, tris, self.l2g_p2, (nv, ns)))
            self._cache["B"] = sp.hstack(blocks, format="csr")
        return self._cache["B"]

    def pressure_integral(self):
        """Vector c with c_i = (psi_i, 1), the zero-mean constraint row."""
        if "c_p" not in self._cache:
            local = self.areas[:, None] * np.einsum("q,qi->i", self.wq, QUAD_POINTS)
            c = np.zeros(self.mesh.num_vertices)
            np.add.at(c, self.mesh.triangles.ravel(), local.ravel())
            self._cache["c_p"] = c
        return self._cache["c_p"]

    def convection_scalar(self, w):
        """Skew-symmetric convection operator for advecting field w (vector P2).

        N = (C - C^T)/2 with C_ij = (w . grad phi_j, phi_i); exactly skew for
        any w, matching b(w, ., .) = ((w . grad v, s) - (w . grad s, v))/2.
        """
        ns = self.num_scalar_p2
        wx = w[:ns][self.l2g_p2]                          # (nt, 6)
        wy = w[ns:][self.l2g_p2]
        wq = np.einsum("qi,ti->tq", self.phi, wx)         # (nt, nq)
        wq2 = np.einsum("qi,ti->tq", self.phi, wy)
        wdg = wq[..., None] * self.dphi[..., 0] + wq2[..., None] * self.dphi[..., 1]  # (nt, nq, 6)
        local = np.einsum("q,qi,tqj->tij", self.wq, self.phi, wdg)
        local *= self.areas[:, None, None]
        C = self._scatter(local, self.l2g_p2, self.l2g_p2, (ns, ns))
        return (C - C.T).tocsr() * 0.5

    def convection_vector(self, w):
        N = self.convection_scalar(w)
        return sp.block_diag((N, N), format="csr")

    def convection_apply_scalar(self, w, z):
        """r_i = b(w, z, phi_i) by direct quadrature (no global matrix)."""
        ns = self.num_scalar_p2
        wq = np.einsum("qi,ti->tq", self.phi, w[:ns][self.l2g_p2])
        wq2 = np.einsum("qi,ti->tq", self.phi, w[ns:][self.l2g_p2])
        zloc = z[self.l2g_p2]
        z_q = np.einsum("qi,ti->tq", self.phi, zloc)
        gz = np.einsum("tqic,ti->tqc", self.dphi, zloc)   # (nt, nq, 2)
        wdgz = wq * gz[..., 0] + wq2 * gz[..., 1]          # (nt, nq)
        wdphi = wq[..., None] * self.dphi[..., 0] + wq2[..., None] * self.dphi[..., 1]
        local = 0.5 * np.einsum("q,tq,qi->ti", self.wq, wdgz, self.phi)
        local -= 0.5 * np.einsum("q,tqi,tq->ti", self.wq, wdphi, z_q)
        local *= self.areas[:, None]
        r = np.zeros(ns)
        np.add.at(r, self.l2g_p2.ravel(), local.ravel())
        return r

    def convection_apply_vector(self, w, z):
        ns = self.num_scalar_p2
        return np.concatenate([
            self.convection_apply_scalar(w, z[:ns]),
            self.convection_apply_scalar(w, z[ns:]),
        ])

    def buoyancy(self, T, xi, scale):
        """r over vector P2 dofs with r_(c,i) = scale * xi_c * (phi_i, T)."""
        ns = self.num_scalar_p2
        Tq = np.einsum("qi,ti->tq", self.phi, T[self.l2g_p2])
        local = np.einsum("q,tq,qi->ti", self.wq, Tq, self.phi) * self.areas[:, None]
        r = np.zeros(ns)
        np.add.at(r, self.l2g_p2.ravel(), local.ravel())
        return scale * np.concatenate([xi[0] * r, xi[1] * r])

    def load_scalar(self, fn):
        """r_i = (f, phi_i) with f a pointwise evaluator f(points) -> values."""
        vals = fn(self.qpts.reshape(-1, 2)).reshape(self.qpts.shape[:2])
        local = np.einsum("q,tq,qi->ti", self.wq, vals, self.phi) * self.areas[:, None]
        r = np.zeros(self.num_scalar_p2)
        np.add.at(r, self.l2g_p2.ravel(), local.ravel())
        return r

    def load_vector(self, fn):
        """r over vector P2 dofs for f(points) -> (n, 2)."""
        vals = fn(self.qpts.reshape(-1, 2)).reshape(self.qpts.shape[0], self.qpts.shape[1], 2)
        out = []
        for c in range(2):
            local = np.einsum("q,tq,qi->ti", self.wq, vals[..., c], self.phi)
            local *= self.areas[:, None]
            r = np.zeros(self.num_scalar_p2)
            np.add.at(r, self.l2g_p2.ravel(), local.ravel())
            out.append(r)
        return np.concatenate(out)

    # -- interpolation and evaluation -------------------------------------

    def interpolate_scalar(self, fn):
        return np.asarray(fn(self.p2_coords), dtype=float)

    def interpolate_vector(self, fn):
        vals = np.asarray(fn(self.p2_coords), dtype=float)
        return np.concatenate([vals[:, 0], vals[:, 1]])

    def interpolate_p1(self, fn):
        return np.asarray(fn(self.mesh.vertices), dtype=float)

    def evaluate_scalar(self, field, points):
        tri, lam = locate_points(self.mesh, points)
        phi = p2_values(lam)                              # (np, 6)
        return np.einsum("pi,pi->p", phi, field[self.l2g_p2[tri]])

    def evaluate_scalar_grad(self, field, points):
        tri, lam = locate_points(self.mesh, points)
        D = p2_grad_coeffs(lam)                           # (np, 6, 3)
        dphi = np.einsum("pik,pkc->pic", D, self.gradL[tri])
        return np.einsum("pic,pi->pc", dphi, field[self.l2g_p2[tri]])

    def evaluate_vector(self, field, points):
        ns = self.num_scalar_p2
        return np.column_stack([
            self.evaluate_scalar(field[:ns], points),
            self.evaluate_scalar(field[ns:], points),
        ])

    def evaluate_p1(self, field, points):
        tri, lam = locate_points(self.mesh, points)
        return np.einsum("pk,pk->p", lam, field[self.mesh.triangles[tri]])

    # -- boundary dofs -----------------------------------------------------

    def boundary_scalar_dofs(self, tags=None):
        """Scalar P2 dofs (vertices + midpoints) on boundary edges with the
        given tags (all walls when tags is None), sorted ascending."""
        nv = self.mesh.num_vertices
        dofs = set()
        for edge_idx, tag in self.mesh.boundary_edges:
            if tags is not None and tag not in tags:
                continue
            va, vb = self.mesh.edges[edge_idx]
            dofs.update((int(va), int(vb), nv + int(edge_idx)))
        return np.array(sorted(dofs), dtype=np.int64)

    # -- norms ---------------------------------------------------------------

    def l2_norm_scalar(self, field):
        M = self.mass_scalar_p2()
        return float(np.sqrt(max(field @ (M @ field), 0.0)))

    def l2_norm_vector(self, field):
        M = self.mass_vector_p2()
        return float(np.sqrt(max(field @ (M @ field), 0.0)))

    def h1_seminorm_vector_sq(self, field):
        K = self.stiffness_vector_p2()
        return float(field @ (K @ field))


# ---------------------------------------------------------------------------
# Spec-level operation wrappers keyed on FeSpace

def assemble_mass(space):
    if space.kind is SpaceKind.SCALAR_P2:
        return space.ctx.mass_scalar_p2()
    if space.kind is SpaceKind.VECTOR_P2:
        return space.ctx.mass_vector_p2()
    return space.ctx.mass_scalar_p1()


def assemble_stiffness(space, coefficient=1.0):
    if coefficient <= 0:
        raise ValueError(f"stiffness coefficient must be positive, got {coefficient}")
    if space.kind is SpaceKind.SCALAR_P2:
        K = space.ctx.stiffness_scalar_p2()
    elif space.kind is SpaceKind.VECTOR_P2:
        K = space.ctx.stiffness_vector_p2()
    else:
        raise ValueError("stiffness assembly requires a P2 space")
    return K if coefficient == 1.0 else (coefficient * K).tocsr()


def assemble_divergence(velocity_space, pressure_space):
    if velocity_space.mesh is not pressure_space.mesh:
        raise ValueError("velocity and pressure spaces must share a mesh")
    return velocity_space.ctx.divergence()


def assemble_convection_matrix(advecting_field, target_space):
    ctx = target_space.ctx
    if len(advecting_field) != 2 * ctx.num_scalar_p2:
        raise ValueError("advecting field must be a vector P2 coefficient array")
    if target_space.kind is SpaceKind.VECTOR_P2:
        return ctx.convection_vector(advecting_field)
    return ctx.convection_scalar(advecting_field)


def apply_convection(advecting_field, transported_field, target_space):
    ctx = target_space.ctx
    if target_space.kind is SpaceKind.VECTOR_P2:
        return ctx.convection_apply_vector(advecting_field, transported_field)
    return ctx.convection_apply_scalar(advecting_field, transported_field)


def assemble_buoyancy(T_extrap, params, ctx):
    return ctx.buoyancy(T_extrap, params.xi, params.Pr * params.Ra)


def interpolate(fn, space):
    ctx = space.ctx
    if space.kind is SpaceKind.SCALAR_P2:
        return ctx.interpolate_scalar(fn)
    if space.kind is SpaceKind.VECTOR_P2:
        return ctx.interpolate_vector(fn)
    return ctx.interpolate_p1(fn)
