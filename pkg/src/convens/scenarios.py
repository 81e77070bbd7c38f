"""The two experiments: the differentially heated cavity benchmark and the
manufactured-solution convergence ladder."""

import os
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import breeding, fem, mms, observables, stepper, vtk_io
from .breeding import BredVectorConfig
from .mesh import BoundaryTag, build_structured_mesh
from .stepper import CflConfig, EnsembleState, Operators, ProblemParams


@dataclass
class ScenarioConfig:
    scenario: str = "cavity"            # "cavity" or "mms"
    Ra: float = 1e4
    Pr: float = 0.71
    m: int = 64                          # cavity mesh subdivisions
    m_list: tuple = (8, 16, 24)          # mms ladder (dt = 1/m each)
    dt0: float = 0.001
    t_final: float = 1.0                 # mms horizon
    steady_tol: float = 1e-5             # cavity stopping tolerance
    eps_mms: float = 1e-2
    cfl: CflConfig = dc_field(default_factory=CflConfig)
    bred: BredVectorConfig = dc_field(default_factory=BredVectorConfig)
    seed: int = 0
    max_steps: int = 10**6
    output_dir: str = "."

    def __post_init__(self):
        if self.scenario not in ("cavity", "mms"):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        for name in ("Ra", "Pr", "dt0", "t_final", "steady_tol", "eps_mms"):
            if getattr(self, name) <= 0 and not (name == "Ra" and self.Ra == 0):
                raise ValueError(f"{name} must be positive")
        if self.m < 1:
            raise ValueError("m must be >= 1")


def parse_config_file(path):
    """Flat key=value config; values are parsed as python literals when
    possible, comma lists become tuples."""
    import ast
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, raw = line.partition("=")
            key = key.strip()
            raw = raw.strip()
            if "," in raw:
                out[key] = tuple(ast.literal_eval(v.strip()) for v in raw.split(","))
            else:
                try:
                    out[key] = ast.literal_eval(raw)
                except (ValueError, SyntaxError):
                    out[key] = raw
    return out


# ---------------------------------------------------------------------------
# MMS convergence study


def mms_problem(eps, Pr, Ra):
    """Member exact solutions (1 +- eps scaling) and the matching params."""
    exacts = [mms.MmsExact(1.0 + eps), mms.MmsExact(1.0 - eps)]
    base = ProblemParams(Pr=Pr, Ra=Ra, J=2)
    forcings = [mms.mms_forcing(e, base) for e in exacts]

    def f(pts, t, j):
        return forcings[j][0](pts, t)

    def gamma(pts, t, j):
        return forcings[j][1](pts, t)

    def velocity_bc(pts, t, j):
        return exacts[j].u(pts, t)        # identically zero on the walls

    def temperature_bc(pts, t, j):
        return exacts[j].T(pts, t)

    params = ProblemParams(Pr=Pr, Ra=Ra, J=2, f=f, gamma=gamma,
                           velocity_bc=velocity_bc, temperature_bc=temperature_bc)
    return exacts, params


def mms_initial_state(ops, exacts, dt):
    J = len(exacts)
    u0 = np.stack([ops.ctx.interpolate_vector(lambda p: e.u(p, 0.0)) for e in exacts])
    T0 = np.stack([ops.ctx.interpolate_scalar(lambda p: e.T(p, 0.0)) for e in exacts])
    p0 = np.stack([ops.ctx.interpolate_p1(lambda p: e.p(p, 0.0)) for e in exacts])
    return EnsembleState(u_prev=u0.copy(), u_curr=u0, T_prev=T0.copy(), T_curr=T0,
                         p_curr=p0, t=0.0, dt=dt)


@dataclass
class MmsLevelResult:
    m: int
    dt: float
    errors: dict          # u_inf_l2, u_2_h1, T_inf_l2, T_2_h1, p_2_l2
    halvings: int = 0


@dataclass
class MmsResult:
    levels: list
    rates: list           # dicts keyed like errors, between successive levels

    def table_rows(self):
        keys = ("u_inf_l2", "u_2_h1", "T_inf_l2", "T_2_h1", "p_2_l2")
        rows = []
        for i, lev in enumerate(self.levels):
            row = {"m": lev.m, "dt": lev.dt}
            for k in keys:
                row[k] = lev.errors[k]
                row[f"{k}_rate"] = self.rates[i - 1][k] if i > 0 else float("nan")
            rows.append(row)
        return rows


def run_mms_level(m, cfg):
    mesh = build_structured_mesh(m)
    ops = Operators(mesh, temp_dirichlet_policy="all")
    exacts, params = mms_problem(cfg.eps_mms, cfg.Pr, cfg.Ra)
    unperturbed = mms.MmsExact(1.0)
    dt = 1.0 / m

    state = mms_initial_state(ops, exacts, dt)
    hist = observables.ErrorHistory(dt=dt)

    def record(st):
        u_mean = st.u_curr.sum(axis=0) / st.J
        T_mean = st.T_curr.sum(axis=0) / st.J
        p_mean = st.p_curr.sum(axis=0) / st.J
        ul2, uh1 = observables.vector_field_error(
            ops.ctx, u_mean, unperturbed.u, unperturbed.grad_u, st.t)
        Tl2, Th1 = observables.scalar_field_error(
            ops.ctx, T_mean, unperturbed.T, unperturbed.grad_T, st.t)
        pl2 = observables.pressure_field_error(ops.ctx, p_mean, unperturbed.p, st.t)
        hist.add_level(st.t, ul2, uh1, Tl2, Th1, pl2)

    record(state)
    state = stepper.startup_step(state, params, ops)
    record(state)
    state, log = stepper.advance(state, params, ops, cfg.cfl,
                                 t_final=cfg.t_final, max_steps=cfg.max_steps,
                                 on_step=record)
    halvings = log[-1].halvings if log else 0
    return MmsLevelResult(m=m, dt=dt, errors=hist.summary(), halvings=halvings)


def run_mms(cfg):
    levels = [run_mms_level(m, cfg) for m in cfg.m_list]
    rates = []
    for prev, curr in zip(levels, levels[1:]):
        rates.append({k: observables.convergence_rate(
            prev.errors[k], curr.errors[k], prev.dt, curr.dt)
            for k in prev.errors})
    return MmsResult(levels=levels, rates=rates)


def write_mms_csv(path, result):
    keys = ("u_inf_l2", "u_2_h1", "T_inf_l2", "T_2_h1", "p_2_l2")
    header = ["m", "dt"]
    for k in keys:
        header += [k, f"{k}_rate"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in result.table_rows():
            cells = [str(row["m"]), f"{row['dt']:.8g}"]
            for k in keys:
                cells.append(f"{row[k]:.8e}")
                r = row[f"{k}_rate"]
                cells.append("" if np.isnan(r) else f"{r:.3f}")
            fh.write(",".join(cells) + "\n")


# ---------------------------------------------------------------------------
# Cavity benchmark


@dataclass
class BenchmarkReport:
    Ra: float
    m: int
    epsilon: tuple
    nu_avg: float
    max_u1_x05: float
    max_u1_loc: float
    max_u2_y05: float
    max_u2_loc: float
    steps: int
    final_t: float
    final_dt: float
    halvings: int
    max_energy: float
    hot_profile: tuple    # (y, nu)
    cold_profile: tuple
    log: list


def _member_energy(state, ctx):
    """Discrete energy of the stability bound, maximized over members."""
    e = 0.0
    for j in range(state.J):
        nT = ctx.l2_norm_scalar(state.T_curr[j])
        nTe = ctx.l2_norm_scalar(2.0 * state.T_curr[j] - state.T_prev[j])
        nu = ctx.l2_norm_vector(state.u_curr[j])
        nue = ctx.l2_norm_vector(2.0 * state.u_curr[j] - state.u_prev[j])
        e = max(e, 0.5 * nT**2 + 0.5 * nTe**2 + nu**2 + nue**2)
    return e


def run_benchmark(cfg):
    mesh = build_structured_mesh(cfg.m)
    ops = Operators(mesh, temp_dirichlet_policy="walls")
    params = ProblemParams(Pr=cfg.Pr, Ra=cfg.Ra, J=2)

    bred_cfg = cfg.bred
    if bred_cfg.epsilon is None and bred_cfg.rng_seed != cfg.seed:
        bred_cfg = BredVectorConfig(epsilon=None, delta_t=bred_cfg.delta_t,
                                    k_star=bred_cfg.k_star, rng_seed=cfg.seed)
    u0, T0, eps = breeding.benchmark_initial_conditions(bred_cfg, params, ops, cfg.dt0)

    state = EnsembleState(
        u_prev=u0.copy(), u_curr=u0, T_prev=T0.copy(), T_curr=T0,
        p_curr=np.zeros((2, ops.n_p)), t=0.0, dt=cfg.dt0)
    state = stepper.startup_step(state, params, ops)

    energy = {"max": _member_energy(state, ops.ctx)}

    def track(st):
        energy["max"] = max(energy["max"], _member_energy(st, ops.ctx))
        if not (np.all(np.isfinite(st.u_curr)) and np.all(np.isfinite(st.T_curr))):
            raise FloatingPointError(f"non-finite field at t={st.t}")

    state, log = stepper.advance(state, params, ops, cfg.cfl,
                                 steady_tol=cfg.steady_tol,
                                 max_steps=cfg.max_steps, on_step=track)

    u_avg = state.u_curr.sum(axis=0) / state.J
    T_avg = state.T_curr.sum(axis=0) / state.J
    nu_avg = observables.nusselt_avg(T_avg, ops.ctx)
    mu1, mu1_loc = observables.midline_max(u_avg, ops.ctx, 0, "x=0.5")
    mu2, mu2_loc = observables.midline_max(u_avg, ops.ctx, 1, "y=0.5")
    hot = observables.nusselt_local(T_avg, ops.ctx, BoundaryTag.HOT_WALL)
    cold = observables.nusselt_local(T_avg, ops.ctx, BoundaryTag.COLD_WALL)

    return BenchmarkReport(
        Ra=cfg.Ra, m=cfg.m, epsilon=eps, nu_avg=nu_avg,
        max_u1_x05=mu1, max_u1_loc=mu1_loc, max_u2_y05=mu2, max_u2_loc=mu2_loc,
        steps=state.step_index, final_t=state.t, final_dt=state.dt,
        halvings=log[-1].halvings if log else 0, max_energy=energy["max"],
        hot_profile=hot, cold_profile=cold, log=log), state, ops


def export_benchmark(report, state, ops, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    observables.write_benchmark_csv(
        os.path.join(out_dir, "benchmark.csv"),
        [(report.Ra, report.nu_avg, report.max_u1_x05, report.max_u2_y05)])
    observables.write_wall_profile_csv(
        os.path.join(out_dir, "nusselt_hot_wall.csv"), *report.hot_profile)
    observables.write_wall_profile_csv(
        os.path.join(out_dir, "nusselt_cold_wall.csv"), *report.cold_profile)
    stepper.write_step_log(os.path.join(out_dir, "step_log.csv"),
                           report.log, state.J)

    mesh = ops.mesh
    ns = ops.ctx.num_scalar_p2
    u_avg = state.u_curr.sum(axis=0) / state.J
    T_avg = state.T_curr.sum(axis=0) / state.J
    p_avg = state.p_curr.sum(axis=0) / state.J
    vtk_io.write_vtk(
        os.path.join(out_dir, "steady_fields.vtk"), mesh,
        point_scalars={
            "temperature": vtk_io.vertex_part_scalar(T_avg, mesh),
            "pressure": p_avg,
        },
        point_vectors={"velocity": vtk_io.vertex_part_vector(u_avg, mesh, ns)})
