"""Reported quantities: Nusselt numbers, midline velocity maxima, and
discrete space-time error norms with convergence rates."""

from dataclasses import dataclass, field

import numpy as np

from .mesh import BoundaryTag

# 3-point Gauss rule on [0, 1]
_GAUSS3_X = np.array([0.5 - np.sqrt(15.0) / 10.0, 0.5, 0.5 + np.sqrt(15.0) / 10.0])
_GAUSS3_W = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


def _wall_gauss_points(ctx, wall):
    """Gauss points (coords, weights*length) on each edge of the wall."""
    mesh = ctx.mesh
    pts, wts = [], []
    for edge_idx, tag in mesh.boundary_edges:
        if tag is not wall:
            continue
        va, vb = mesh.edges[edge_idx]
        pa, pb = mesh.vertices[va], mesh.vertices[vb]
        length = np.linalg.norm(pb - pa)
        for s, w in zip(_GAUSS3_X, _GAUSS3_W):
            pts.append(pa + s * (pb - pa))
            wts.append(w * length)
    return np.array(pts), np.array(wts)


def nusselt_local(T_field, ctx, wall):
    """Local Nusselt profile on a vertical wall: +dT/dx at the cold wall,
    -dT/dx at the hot wall, from the one-sided P2 element gradient at wall
    quadrature points. Returns (y, Nu) sorted by y."""
    if wall not in (BoundaryTag.HOT_WALL, BoundaryTag.COLD_WALL):
        raise ValueError("Nusselt profile is defined on the vertical walls")
    pts, _ = _wall_gauss_points(ctx, wall)
    grads = ctx.evaluate_scalar_grad(T_field, pts)
    sign = -1.0 if wall is BoundaryTag.HOT_WALL else 1.0
    nu = sign * grads[:, 0]
    order = np.argsort(pts[:, 1])
    return pts[order, 1], nu[order]


def nusselt_avg(T_field, ctx):
    """Average Nusselt number on the hot wall (x = 0), edge-wise 3-point
    Gauss quadrature of the local value."""
    pts, wts = _wall_gauss_points(ctx, BoundaryTag.HOT_WALL)
    grads = ctx.evaluate_scalar_grad(T_field, pts)
    return float(np.sum(wts * (-grads[:, 0])))


def midline_max(u_field, ctx, component, line, n_samples=2049):
    """Max of a velocity component along x=0.5 or y=0.5, by dense sampling.

    Returns (max value, coordinate along the line)."""
    s = np.linspace(0.0, 1.0, n_samples)
    if line == "x=0.5":
        pts = np.column_stack([np.full_like(s, 0.5), s])
    elif line == "y=0.5":
        pts = np.column_stack([s, np.full_like(s, 0.5)])
    else:
        raise ValueError("line must be 'x=0.5' or 'y=0.5'")
    ns = ctx.num_scalar_p2
    comp = u_field[:ns] if component == 0 else u_field[ns:]
    vals = ctx.evaluate_scalar(comp, pts)
    k = int(np.argmax(vals))
    return float(vals[k]), float(s[k])


# ---------------------------------------------------------------------------
# Error norms


def scalar_field_error(ctx, field, exact_fn, exact_grad_fn, t):
    """(L2, H1-seminorm) error of a scalar P2 field against closed forms."""
    qpts = ctx.qpts.reshape(-1, 2)
    loc = field[ctx.l2g_p2]
    vals = np.einsum("qi,ti->tq", ctx.phi, loc)
    e = vals - exact_fn(qpts, t).reshape(vals.shape)
    l2_sq = float(np.sum(ctx.areas[:, None] * ctx.wq[None, :] * e * e))
    g = np.einsum("tqic,ti->tqc", ctx.dphi, loc)
    ge = g - exact_grad_fn(qpts, t).reshape(g.shape)
    h1_sq = float(np.sum(ctx.areas[:, None] * ctx.wq[None, :] * np.sum(ge * ge, axis=-1)))
    return np.sqrt(max(l2_sq, 0.0)), np.sqrt(max(h1_sq, 0.0))


def vector_field_error(ctx, field, exact_fn, exact_grad_fn, t):
    """(L2, H1-seminorm) error of a vector P2 field.

    exact_fn -> (n, 2); exact_grad_fn -> (n, 2, 2) with [:, i, c] = d u_i/d x_c.
    """
    ns = ctx.num_scalar_p2
    qpts = ctx.qpts.reshape(-1, 2)
    ex = exact_fn(qpts, t)
    gx = exact_grad_fn(qpts, t)
    l2_sq = 0.0
    h1_sq = 0.0
    for c in range(2):
        loc = field[c * ns:(c + 1) * ns][ctx.l2g_p2]
        vals = np.einsum("qi,ti->tq", ctx.phi, loc)
        e = vals - ex[:, c].reshape(vals.shape)
        l2_sq += np.sum(ctx.areas[:, None] * ctx.wq[None, :] * e * e)
        g = np.einsum("tqic,ti->tqc", ctx.dphi, loc)
        ge = g - gx[:, c, :].reshape(g.shape)
        h1_sq += np.sum(ctx.areas[:, None] * ctx.wq[None, :] * np.sum(ge * ge, axis=-1))
    return np.sqrt(max(l2_sq, 0.0)), np.sqrt(max(h1_sq, 0.0))


def pressure_field_error(ctx, field, exact_fn, t):
    """L2 error of a P1 pressure field."""
    qpts = ctx.qpts.reshape(-1, 2)
    from .fem import QUAD_POINTS
    loc = field[ctx.mesh.triangles]
    vals = np.einsum("qk,tk->tq", QUAD_POINTS, loc)
    e = vals - exact_fn(qpts, t).reshape(vals.shape)
    return np.sqrt(max(float(np.sum(ctx.areas[:, None] * ctx.wq[None, :] * e * e)), 0.0))


@dataclass
class ErrorHistory:
    """Per-level errors of the member-averaged fields; discrete time norms
    |||.|||_{inf,0} = max_n ||.|| and |||.|||_{2,0} = (dt sum_n ||.||^2)^(1/2)."""

    dt: float
    t: list = field(default_factory=list)
    u_l2: list = field(default_factory=list)
    u_h1: list = field(default_factory=list)
    T_l2: list = field(default_factory=list)
    T_h1: list = field(default_factory=list)
    p_l2: list = field(default_factory=list)

    def add_level(self, t, u_l2, u_h1, T_l2, T_h1, p_l2):
        self.t.append(t)
        self.u_l2.append(u_l2)
        self.u_h1.append(u_h1)
        self.T_l2.append(T_l2)
        self.T_h1.append(T_h1)
        self.p_l2.append(p_l2)

    def norm_inf(self, key):
        return float(np.max(getattr(self, key)))

    def norm_2(self, key):
        vals = np.asarray(getattr(self, key))
        return float(np.sqrt(self.dt * np.sum(vals * vals)))

    def summary(self):
        return {
            "u_inf_l2": self.norm_inf("u_l2"),
            "u_2_h1": self.norm_2("u_h1"),
            "T_inf_l2": self.norm_inf("T_l2"),
            "T_2_h1": self.norm_2("T_h1"),
            "p_2_l2": self.norm_2("p_l2"),
        }


def error_norms(levels, exact, ctx, dt):
    """Accumulate an ErrorHistory from (t, u_mean, T_mean, p_mean) levels
    compared against unscaled exact evaluators."""
    hist = ErrorHistory(dt=dt)
    for t, u, T, p in levels:
        ul2, uh1 = vector_field_error(ctx, u, exact.u, exact.grad_u, t)
        Tl2, Th1 = scalar_field_error(ctx, T, exact.T, exact.grad_T, t)
        pl2 = pressure_field_error(ctx, p, exact.p, t)
        hist.add_level(t, ul2, uh1, Tl2, Th1, pl2)
    return hist


def convergence_rate(e1, e2, dt1, dt2):
    """log2(e1/e2) / log2(dt1/dt2) between two successive resolutions."""
    if e1 <= 0 or e2 <= 0:
        raise ValueError("convergence rate undefined for nonpositive errors")
    if dt1 <= 0 or dt2 <= 0 or dt1 == dt2:
        raise ValueError("timesteps must be positive and distinct")
    return float(np.log2(e1 / e2) / np.log2(dt1 / dt2))


def write_benchmark_csv(path, rows):
    """rows: iterable of (Ra, nu_avg, max_u1_x05, max_u2_y05)."""
    with open(path, "w") as fh:
        fh.write("Ra,nu_avg,max_u1_x05,max_u2_y05\n")
        for ra, nu, m1, m2 in rows:
            fh.write(f"{ra:g},{nu:.8g},{m1:.8g},{m2:.8g}\n")


def write_wall_profile_csv(path, y, nu):
    with open(path, "w") as fh:
        fh.write("y,nu_local\n")
        for yi, ni in zip(y, nu):
            fh.write(f"{yi:.8g},{ni:.8g}\n")
