"""BDF2 IMEX ensemble timestepping with shared coefficient matrices.

Each step builds one velocity-pressure saddle matrix and one temperature
matrix from the extrapolated ensemble-average velocity; both are
factorized once and solved against J member right-hand sides. Member
coupling enters only through that average; fluctuation convection,
buoyancy, and forcing are explicit (extrapolated) and live in the RHS.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import fem, linalg
from .errors import (MaxStepsExceededError, SingularMatrixError,
                     StartupFailureError, TimestepUnderflowError)
from .fem import FemContext, SpaceKind
from .mesh import BoundaryTag


def _conduction_profile_bc(points, t, member):
    # cavity wall temperatures: 1 at x=0, 0 at x=1
    return 1.0 - points[:, 0]


def _zero_velocity_bc(points, t, member):
    return np.zeros((len(points), 2))


@dataclass
class ProblemParams:
    Pr: float
    Ra: float
    xi: tuple = (0.0, 1.0)
    J: int = 2
    f: object = None          # f(points, t, member) -> (n, 2), None means zero
    gamma: object = None      # gamma(points, t, member) -> (n,), None means zero
    velocity_bc: object = None
    temperature_bc: object = None

    def __post_init__(self):
        if self.Pr <= 0:
            raise ValueError("Pr must be positive")
        if self.Ra < 0:
            raise ValueError("Ra must be nonnegative")
        if self.J < 1:
            raise ValueError("J must be at least 1")
        xi = np.asarray(self.xi, dtype=float)
        if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
            raise ValueError("xi must be a unit vector")
        self.xi = xi
        if self.velocity_bc is None:
            self.velocity_bc = _zero_velocity_bc
        if self.temperature_bc is None:
            self.temperature_bc = _conduction_profile_bc


@dataclass
class CflConfig:
    c_dagger: float = 1.0
    enabled: bool = True

    def __post_init__(self):
        if self.c_dagger <= 0:
            raise ValueError("c_dagger must be positive")


@dataclass
class EnsembleState:
    u_prev: np.ndarray   # (J, nu)
    u_curr: np.ndarray
    T_prev: np.ndarray   # (J, nT)
    T_curr: np.ndarray
    p_curr: np.ndarray   # (J, np)
    t: float
    dt: float
    step_index: int = 0

    @property
    def J(self):
        return self.u_curr.shape[0]

    def copy(self):
        return EnsembleState(self.u_prev.copy(), self.u_curr.copy(),
                             self.T_prev.copy(), self.T_curr.copy(),
                             self.p_curr.copy(), self.t, self.dt, self.step_index)


@dataclass
class StepRecord:
    step: int
    t: float
    dt: float
    cfl_value: float
    halvings: int
    u_norms: list
    T_norms: list


class Operators:
    """Per-mesh assembly bundle: spaces, time-independent matrices, and
    Dirichlet dof bookkeeping.

    temp_dirichlet_policy: 'walls' pins hot/cold walls only (cavity, the
    horizontal walls stay natural); 'all' pins the whole boundary
    (manufactured solutions with non-insulated traces).
    """

    def __init__(self, mesh, temp_dirichlet_policy="walls"):
        self.mesh = mesh
        self.ctx = FemContext(mesh)
        self.velocity_space = self.ctx.space(SpaceKind.VECTOR_P2)
        self.temperature_space = self.ctx.space(SpaceKind.SCALAR_P2)
        self.pressure_space = self.ctx.space(SpaceKind.SCALAR_P1)

        self.M_u = self.ctx.mass_vector_p2()
        self.M_T = self.ctx.mass_scalar_p2()
        self.K_u = self.ctx.stiffness_vector_p2()
        self.K_T = self.ctx.stiffness_scalar_p2()
        self.B = self.ctx.divergence()
        self.c_p = self.ctx.pressure_integral()

        ns = self.ctx.num_scalar_p2
        self.n_u = 2 * ns
        self.n_p = mesh.num_vertices
        self.n_T = ns

        bdofs = self.ctx.boundary_scalar_dofs()
        self.vel_dirichlet_scalar = bdofs
        self.vel_dirichlet = np.concatenate([bdofs, ns + bdofs])
        self.vel_bc_coords = self.ctx.p2_coords[bdofs]

        if temp_dirichlet_policy == "walls":
            tdofs = self.ctx.boundary_scalar_dofs(
                {BoundaryTag.HOT_WALL, BoundaryTag.COLD_WALL})
        elif temp_dirichlet_policy == "all":
            tdofs = bdofs
        else:
            raise ValueError(f"unknown policy {temp_dirichlet_policy!r}")
        self.temp_dirichlet = tdofs
        self.temp_bc_coords = self.ctx.p2_coords[tdofs]

        # saddle rows that are overwritten per step (velocity Dirichlet rows)
        self._neg_BT = (-self.B.T).tocsr()

    def saddle_matrix(self, A_u):
        """Assemble [[A_u, -B^T, 0], [B, 0, c], [0, c^T, 0]] with velocity
        Dirichlet rows replaced by identity rows."""
        A_u = linalg.replace_rows_identity(A_u, self.vel_dirichlet)
        BT = linalg.zero_rows(self._neg_BT, self.vel_dirichlet)
        c_col = sp.csr_matrix(self.c_p.reshape(-1, 1))
        c_row = sp.csr_matrix(self.c_p.reshape(1, -1))
        S = sp.bmat([[A_u, BT, None],
                     [self.B, None, c_col],
                     [None, c_row, None]], format="csr")
        return S

    def velocity_h1_seminorm_sq(self, v):
        return float(v @ (self.K_u @ v))


def mean_and_fluctuations(state):
    """Extrapolated ensemble average and per-member fluctuations of velocity."""
    extrap = 2.0 * state.u_curr - state.u_prev
    mean = extrap.sum(axis=0) / state.J
    fluct = extrap - mean
    return mean, fluct


def cfl_ok(dt, h, fluctuations, ops, cfl):
    """Timestep condition c_dagger * dt/h * max_j |grad u'_j|^2 <= 1."""
    worst = max(ops.velocity_h1_seminorm_sq(v) for v in fluctuations)
    value = cfl.c_dagger * dt / h * worst
    return value <= 1.0, value


def assemble_step_matrices(ops, mean, dt, Pr):
    """Shared per-step matrices: the velocity-pressure saddle system and the
    temperature system. Both depend only on the ensemble mean, never on a
    single member's data."""
    N_s = ops.ctx.convection_scalar(mean)
    N_u = sp.block_diag((N_s, N_s), format="csr")
    A_u = ((3.0 / (2.0 * dt)) * ops.M_u + N_u + Pr * ops.K_u).tocsr()
    saddle = ops.saddle_matrix(A_u)
    A_T = ((3.0 / (2.0 * dt)) * ops.M_T + N_s + ops.K_T).tocsr()
    A_T = linalg.replace_rows_identity(A_T, ops.temp_dirichlet)
    return saddle, A_T


def _apply_velocity_bc(ops, params, rhs, t, member):
    vals = params.velocity_bc(ops.vel_bc_coords, t, member)
    vals = np.asarray(vals, dtype=float)
    ns = ops.ctx.num_scalar_p2
    rhs[ops.vel_dirichlet_scalar] = vals[:, 0]
    rhs[ns + ops.vel_dirichlet_scalar] = vals[:, 1]


def step(state, params, ops, precomputed=None):
    """One BDF2 IMEX ensemble step; assumes the CFL condition already holds."""
    dt = state.dt
    t1 = state.t + dt
    if precomputed is None:
        mean, fluct = mean_and_fluctuations(state)
    else:
        mean, fluct = precomputed
    try:
        saddle, A_T = assemble_step_matrices(ops, mean, dt, params.Pr)
        fact_u = linalg.factorize(saddle)
        fact_T = linalg.factorize(A_T)
    except SingularMatrixError as err:
        raise SingularMatrixError(
            f"step {state.step_index}: {err}", err.pivot_index) from err

    J = state.J
    n_sys = saddle.shape[0]
    rhs_u = np.zeros((n_sys, J))
    for j in range(J):
        u_extr = 2.0 * state.u_curr[j] - state.u_prev[j]
        T_extr = 2.0 * state.T_curr[j] - state.T_prev[j]
        r = (ops.M_u @ (4.0 * state.u_curr[j] - state.u_prev[j])) / (2.0 * dt)
        r -= ops.ctx.convection_apply_vector(fluct[j], u_extr)
        r += ops.ctx.buoyancy(T_extr, params.xi, params.Pr * params.Ra)
        if params.f is not None:
            r += ops.ctx.load_vector(lambda pts: params.f(pts, t1, j))
        _apply_velocity_bc(ops, params, r, t1, j)
        rhs_u[:ops.n_u, j] = r

    sol_u = linalg.solve_multi(fact_u, rhs_u)
    u_new = sol_u[:ops.n_u].T.copy()
    p_new = sol_u[ops.n_u:ops.n_u + ops.n_p].T.copy()

    rhs_T = np.zeros((ops.n_T, J))
    for j in range(J):
        T_extr = 2.0 * state.T_curr[j] - state.T_prev[j]
        r = (ops.M_T @ (4.0 * state.T_curr[j] - state.T_prev[j])) / (2.0 * dt)
        r -= ops.ctx.convection_apply_scalar(fluct[j], T_extr)
        if params.gamma is not None:
            r += ops.ctx.load_scalar(lambda pts: params.gamma(pts, t1, j))
        r[ops.temp_dirichlet] = params.temperature_bc(ops.temp_bc_coords, t1, j)
        rhs_T[:, j] = r

    T_new = linalg.solve_multi(fact_T, rhs_T).T.copy()

    return EnsembleState(
        u_prev=state.u_curr.copy(), u_curr=u_new,
        T_prev=state.T_curr.copy(), T_curr=T_new,
        p_curr=p_new, t=t1, dt=dt, step_index=state.step_index + 1)


def startup_step(state, params, ops, tol=1e-10, max_iter=50):
    """Fill time level 1 via one trapezoidal (Crank-Nicolson) step per member.

    Convection and buoyancy are evaluated on the half-step average and
    resolved by Picard iteration; members are integrated independently.
    """
    dt = state.dt
    t0, t1 = state.t, state.t + dt
    J = state.J
    u1_all = np.empty_like(state.u_curr)
    T1_all = np.empty_like(state.T_curr)
    p1_all = np.empty_like(state.p_curr)
    prra = params.Pr * params.Ra

    for j in range(J):
        u0 = state.u_curr[j]
        T0 = state.T_curr[j]
        u1 = u0.copy()
        T1 = T0.copy()
        load_f = None
        if params.f is not None:
            load_f = 0.5 * (ops.ctx.load_vector(lambda p: params.f(p, t0, j))
                            + ops.ctx.load_vector(lambda p: params.f(p, t1, j)))
        load_g = None
        if params.gamma is not None:
            load_g = 0.5 * (ops.ctx.load_scalar(lambda p: params.gamma(p, t0, j))
                            + ops.ctx.load_scalar(lambda p: params.gamma(p, t1, j)))

        converged = False
        for _ in range(max_iter):
            w = 0.5 * (u0 + u1)
            Tbar = 0.5 * (T0 + T1)
            N_s = ops.ctx.convection_scalar(w)
            N_u = sp.block_diag((N_s, N_s), format="csr")
            A_u = ((1.0 / dt) * ops.M_u + 0.5 * N_u + 0.5 * params.Pr * ops.K_u).tocsr()
            saddle = ops.saddle_matrix(A_u)
            r = (ops.M_u @ u0) / dt
            r -= 0.5 * (N_u @ u0)
            r -= 0.5 * params.Pr * (ops.K_u @ u0)
            r += ops.ctx.buoyancy(Tbar, params.xi, prra)
            if load_f is not None:
                r += load_f
            _apply_velocity_bc(ops, params, r, t1, j)
            rhs = np.zeros(saddle.shape[0])
            rhs[:ops.n_u] = r
            sol = linalg.factorize(saddle).solve(rhs)
            u1_new = sol[:ops.n_u]
            p1 = sol[ops.n_u:ops.n_u + ops.n_p]

            w = 0.5 * (u0 + u1_new)
            N_T = ops.ctx.convection_scalar(w)
            A_T = ((1.0 / dt) * ops.M_T + 0.5 * N_T + 0.5 * ops.K_T).tocsr()
            A_T = linalg.replace_rows_identity(A_T, ops.temp_dirichlet)
            rT = (ops.M_T @ T0) / dt
            rT -= 0.5 * (N_T @ T0)
            rT -= 0.5 * (ops.K_T @ T0)
            if load_g is not None:
                rT += load_g
            rT[ops.temp_dirichlet] = params.temperature_bc(ops.temp_bc_coords, t1, j)
            T1_new = linalg.factorize(A_T).solve(rT)

            du = np.linalg.norm(u1_new - u1) / max(np.linalg.norm(u1_new), 1e-30)
            dT = np.linalg.norm(T1_new - T1) / max(np.linalg.norm(T1_new), 1e-30)
            u1, T1 = u1_new, T1_new
            if max(du, dT) < tol:
                converged = True
                break
        if not converged:
            raise StartupFailureError(
                f"member {j}: Picard did not converge in {max_iter} iterations")
        u1_all[j] = u1
        T1_all[j] = T1
        p1_all[j] = p1

    return EnsembleState(
        u_prev=state.u_curr.copy(), u_curr=u1_all,
        T_prev=state.T_curr.copy(), T_curr=T1_all,
        p_curr=p1_all, t=t1, dt=dt, step_index=state.step_index + 1)


def steady_state_reached(state_prev, state_curr, ops, tol=1e-5):
    """True iff both relative increments are <= tol for every member,
    in the L2 (mass-matrix) norm. Zero denominators count as not converged."""
    for j in range(state_curr.J):
        nu = ops.ctx.l2_norm_vector(state_curr.u_curr[j])
        nT = ops.ctx.l2_norm_scalar(state_curr.T_curr[j])
        if nu == 0.0 or nT == 0.0:
            return False
        du = ops.ctx.l2_norm_vector(state_curr.u_curr[j] - state_prev.u_curr[j])
        dT = ops.ctx.l2_norm_scalar(state_curr.T_curr[j] - state_prev.T_curr[j])
        if max(du / nu, dT / nT) > tol:
            return False
    return True


def advance(state, params, ops, cfl, *, t_final=None, steady_tol=None,
            dt_min=1e-9, max_steps=10**6, on_step=None):
    """Run the CFL-guarded BDF2 loop from a two-level state.

    Halves dt (never increases it) whenever the fluctuation condition fails,
    re-attempting the same step with the stored levels. Stops at t_final or
    when the steady-state increment criterion holds. Returns the final state
    and the per-step log.
    """
    log = []
    halvings_total = 0
    while True:
        if t_final is not None and state.t >= t_final - 1e-12:
            break
        if len(log) >= max_steps:
            raise MaxStepsExceededError(f"exceeded {max_steps} steps at t={state.t}")

        mean, fluct = mean_and_fluctuations(state)
        value = 0.0
        if cfl.enabled:
            ok, value = cfl_ok(state.dt, ops.mesh.h, fluct, ops, cfl)
            while not ok:
                state.dt /= 2.0
                halvings_total += 1
                if state.dt < dt_min:
                    raise TimestepUnderflowError(
                        f"dt fell below {dt_min} at t={state.t} "
                        f"(cfl value {value:.3e})")
                ok, value = cfl_ok(state.dt, ops.mesh.h, fluct, ops, cfl)

        new_state = step(state, params, ops, precomputed=(mean, fluct))
        log.append(StepRecord(
            step=new_state.step_index, t=new_state.t, dt=new_state.dt,
            cfl_value=value, halvings=halvings_total,
            u_norms=[ops.ctx.l2_norm_vector(u) for u in new_state.u_curr],
            T_norms=[ops.ctx.l2_norm_scalar(T) for T in new_state.T_curr]))
        if on_step is not None:
            on_step(new_state)
        reached_steady = (steady_tol is not None
                          and steady_state_reached(state, new_state, ops, steady_tol))
        state = new_state
        if reached_steady:
            break
    return state, log


def write_step_log(path, log, J):
    header = ["step", "t", "dt", "cfl_value", "halvings"]
    header += [f"u_norm_{j}" for j in range(J)]
    header += [f"T_norm_{j}" for j in range(J)]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for rec in log:
            row = [str(rec.step), f"{rec.t:.10g}", f"{rec.dt:.10g}",
                   f"{rec.cfl_value:.6e}", str(rec.halvings)]
            row += [f"{v:.10e}" for v in rec.u_norms]
            row += [f"{v:.10e}" for v in rec.T_norms]
            fh.write(",".join(row) + "\n")
