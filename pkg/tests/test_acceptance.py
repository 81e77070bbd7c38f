"""Acceptance suite: one test per acceptance criterion, each printing a
single PASS/FAIL line (run with -s to see them as they happen).

Criteria 1 (rates), 2 (smoke variant), and 3-10 run in the default
selection. The m=64 cavity benchmark is desk scale (tens of minutes) and
carries the ``desk`` marker; the Ra=1e5/1e6 rows carry ``long``.
"""

import numpy as np
import pytest
import scipy.sparse as sp

from convens import linalg, stepper
from convens.breeding import (CHANNELS, BredVectorConfig,
                              TrajectoryIntegrator, benchmark_initial_conditions,
                              breed, control_path)
from convens.mesh import build_structured_mesh
from convens.mms import MmsExact, mms_forcing
from convens.scenarios import ScenarioConfig, run_benchmark, run_mms
from convens.stepper import (CflConfig, EnsembleState, Operators,
                             ProblemParams, advance, assemble_step_matrices,
                             mean_and_fluctuations, startup_step, step)

from test_mms import residual_momentum, residual_temperature


def report(criterion, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


# ---------------------------------------------------------------------------
# criterion 1: manufactured-solution convergence


@pytest.fixture(scope="module")
def mms_result():
    cfg = ScenarioConfig(scenario="mms", Ra=100.0, Pr=1.0,
                         m_list=(8, 16, 24), t_final=1.0, eps_mms=1e-2)
    return run_mms(cfg)


def test_criterion_1_convergence_rates(mms_result):
    checks = []
    for rates in mms_result.rates:
        checks.append(1.6 <= rates["u_2_h1"] <= 2.6)
        checks.append(1.6 <= rates["T_2_h1"] <= 2.6)
        checks.append(1.6 <= rates["p_2_l2"] <= 2.6)
        checks.append(rates["u_inf_l2"] >= 2.4)
        checks.append(rates["T_inf_l2"] >= 2.4)
    detail = "; ".join(
        f"m={a.m}->{b.m}: uH1 {r['u_2_h1']:.2f}, TH1 {r['T_2_h1']:.2f}, "
        f"p {r['p_2_l2']:.2f}, uL2 {r['u_inf_l2']:.2f}, TL2 {r['T_inf_l2']:.2f}"
        for (a, b), r in zip(zip(mms_result.levels, mms_result.levels[1:]),
                             mms_result.rates))
    report("1 (rates)", all(checks), detail)


# reference error magnitudes from an equivalent computation reported for an
# unstructured Delaunay mesh family with the same m and dt = 1/m; key order
# matches ErrorHistory.summary()
REFERENCE_ERRORS = {
    8: {"u_inf_l2": 5.600e-4, "u_2_h1": 2.06808e-2, "T_inf_l2": 6.96e-5,
        "T_2_h1": 3.0380e-3, "p_2_l2": 2.22107e-2},
    16: {"u_inf_l2": 6.28e-5, "u_2_h1": 4.6705e-3, "T_inf_l2": 6.81e-6,
         "T_2_h1": 6.157e-4, "p_2_l2": 5.0407e-3},
    24: {"u_inf_l2": 1.82e-5, "u_2_h1": 2.09424e-3, "T_inf_l2": 1.90e-6,
         "T_2_h1": 2.505e-4, "p_2_l2": 2.1921e-3},
}


def test_criterion_1_absolute_error_magnitudes(mms_result):
    # NOTE: expected to fail on this mesh family. The structured mesh with
    # m subdivisions per side is substantially coarser than the reference
    # Delaunay family at equal m, and the measured errors sit at the spatial
    # interpolation floor of that coarser mesh (verified against the P2/P1
    # interpolants of the exact solution), so no timestepping improvement
    # can close the gap. The rates criterion above is the meaningful check.
    worst = 0.0
    worst_key = ""
    for lev in mms_result.levels:
        for key, ref in REFERENCE_ERRORS[lev.m].items():
            ratio = lev.errors[key] / ref
            if ratio > worst:
                worst, worst_key = ratio, f"m={lev.m} {key}"
    report("1 (absolute errors)", worst <= 3.0,
           f"worst error ratio vs reference {worst:.1f}x at {worst_key} "
           f"(limit 3x)")


# ---------------------------------------------------------------------------
# criterion 2: cavity benchmark

BENCHMARK_TARGETS = {1e4: (2.25, 16.18, 19.60),
                     1e5: (4.53, 34.72, 68.53),
                     1e6: (8.89, 64.78, 215.89)}


def run_cavity(ra, m, dt, k_star=5, delta_t=None, max_steps=20000):
    cfg = ScenarioConfig(
        scenario="cavity", Ra=ra, Pr=0.71, m=m, dt0=dt,
        bred=BredVectorConfig(rng_seed=0, delta_t=delta_t or dt, k_star=k_star),
        steady_tol=1e-5, max_steps=max_steps)
    report_, state, ops = run_benchmark(cfg)
    return report_


def check_benchmark(report_, ra, tol, label):
    nu_t, u1_t, u2_t = BENCHMARK_TARGETS[ra]
    ok = (abs(report_.nu_avg - nu_t) <= tol * nu_t
          and abs(report_.max_u1_x05 - u1_t) <= tol * u1_t
          and abs(report_.max_u2_y05 - u2_t) <= tol * u2_t)
    report(label, ok,
           f"Ra={ra:g}: Nu {report_.nu_avg:.4f} (target {nu_t}), "
           f"max u1 {report_.max_u1_x05:.4f} (target {u1_t}), "
           f"max u2 {report_.max_u2_y05:.4f} (target {u2_t}), "
           f"tol {tol:.0%}, halvings {report_.halvings}")


def test_criterion_2_cavity_smoke():
    # CI variant: coarser mesh and larger dt; the steady state is
    # timestep-independent, so the targets still apply at 5%
    rep = run_cavity(1e4, m=32, dt=0.005, k_star=3)
    check_benchmark(rep, 1e4, 0.05, "2 (m=32 smoke)")


@pytest.mark.desk
def test_criterion_2_cavity_m64():
    rep = run_cavity(1e4, m=64, dt=0.001)
    check_benchmark(rep, 1e4, 0.05, "2 (m=64)")


@pytest.mark.long
@pytest.mark.parametrize("ra", [1e5, 1e6])
def test_criterion_2_cavity_high_rayleigh(ra):
    rep = run_cavity(ra, m=64, dt=0.001)
    check_benchmark(rep, ra, 0.07, f"2 (Ra={ra:g})")


# ---------------------------------------------------------------------------
# criterion 3: shared coefficient matrix


def test_criterion_3_shared_matrix():
    ops = Operators(build_structured_mesh(8))
    params = ProblemParams(Pr=0.71, Ra=1e4, J=2)
    gen = np.random.default_rng(5)
    state = EnsembleState(
        u_prev=np.zeros((2, ops.n_u)), u_curr=np.zeros((2, ops.n_u)),
        T_prev=np.zeros((2, ops.n_T)), T_curr=np.zeros((2, ops.n_T)),
        p_curr=np.zeros((2, ops.n_p)), t=0.0, dt=0.002)
    base = 1.0 - ops.ctx.p2_coords[:, 0]
    for j in range(2):
        T = base + 0.01 * gen.standard_normal(ops.n_T)
        T[ops.temp_dirichlet] = base[ops.temp_dirichlet]
        state.T_curr[j] = T
        state.T_prev[j] = T
    state = startup_step(state, params, ops)
    assert not np.array_equal(state.u_curr[0], state.u_curr[1])

    identical = True
    for _ in range(50):
        mean, fluct = mean_and_fluctuations(state)
        mats = [assemble_step_matrices(ops, mean.copy(), state.dt, params.Pr)
                for _ in range(state.J)]
        (s0, t0) = mats[0]
        for s_j, t_j in mats[1:]:
            identical &= (s0.data.tobytes() == s_j.data.tobytes()
                          and s0.indices.tobytes() == s_j.indices.tobytes()
                          and s0.indptr.tobytes() == s_j.indptr.tobytes()
                          and t0.data.tobytes() == t_j.data.tobytes()
                          and t0.indices.tobytes() == t_j.indices.tobytes())
        state = step(state, params, ops, precomputed=(mean, fluct))
    report(3, identical,
           "per-member step matrices byte-identical over 50 steps (J=2, "
           "distinct member states)")


# ---------------------------------------------------------------------------
# criterion 4: skew-symmetry


def test_criterion_4_skew_symmetry():
    ctx = Operators(build_structured_mesh(8)).ctx
    gen = np.random.default_rng(17)
    worst = 0.0
    for _ in range(100):
        w = gen.standard_normal(2 * ctx.num_scalar_p2)
        v = gen.standard_normal(ctx.num_scalar_p2)
        N = ctx.convection_scalar(w)
        worst = max(worst, abs(v @ (N @ v)) / (v @ v))
    report(4, worst < 1e-11,
           f"max |v^T N(w) v| / |v|^2 = {worst:.2e} over 100 random pairs "
           "(limit 1e-11)")


# ---------------------------------------------------------------------------
# criterion 5: discrete incompressibility every step


def test_criterion_5_divergence_constraint():
    ops = Operators(build_structured_mesh(16))
    params = ProblemParams(Pr=0.71, Ra=1e4, J=2)
    cfg = BredVectorConfig(rng_seed=0, delta_t=0.001, k_star=5)
    u0, T0, _ = benchmark_initial_conditions(cfg, params, ops, 0.001)
    state = EnsembleState(u_prev=u0.copy(), u_curr=u0,
                          T_prev=T0.copy(), T_curr=T0,
                          p_curr=np.zeros((2, ops.n_p)), t=0.0, dt=0.001)
    state = startup_step(state, params, ops)

    worst = {"v": 0.0}

    def track(st):
        for j in range(st.J):
            u = st.u_curr[j]
            rel = np.linalg.norm(ops.B @ u) / max(np.linalg.norm(u), 1e-300)
            worst["v"] = max(worst["v"], rel)

    advance(state, params, ops, CflConfig(), t_final=0.101, on_step=track)
    report(5, worst["v"] < 1e-8,
           f"max |B u|/|u| = {worst['v']:.2e} over a 100-step benchmark run "
           "(limit 1e-8)")


# ---------------------------------------------------------------------------
# criterion 6: CFL controller


def test_criterion_6_cfl_controller():
    ops = Operators(build_structured_mesh(8))
    params = ProblemParams(
        Pr=1.0, Ra=0.0, J=2,
        temperature_bc=lambda p, t, j: np.zeros(len(p)))
    g = ops.ctx.interpolate_vector(
        lambda p: np.column_stack(
            [p[:, 0] * (1 - p[:, 0]) * p[:, 1] * (1 - p[:, 1]),
             np.zeros(len(p))]))
    g *= 1e-3 / np.sqrt(ops.velocity_h1_seminorm_sq(g))
    dt0 = 1.5 * ops.mesh.h / ops.velocity_h1_seminorm_sq(g)
    state = EnsembleState(
        u_prev=np.stack([g, -g]), u_curr=np.stack([g, -g]),
        T_prev=np.zeros((2, ops.n_T)), T_curr=np.zeros((2, ops.n_T)),
        p_curr=np.zeros((2, ops.n_p)), t=0.0, dt=dt0)

    _, log = advance(state, params, ops, CflConfig(), t_final=5 * dt0)
    dts = [r.dt for r in log]
    ok = (log[0].halvings == 1 and log[0].dt == dt0 / 2.0
          and log[-1].halvings == 1
          and all(b <= a for a, b in zip(dts, dts[1:])))
    report(6, ok,
           f"injected fluctuation: one halving at step 1 (dt {dt0:.3g} -> "
           f"{log[0].dt:.3g}), {log[-1].halvings} halvings total, "
           "dt non-increasing")


# ---------------------------------------------------------------------------
# criterion 7: bred vectors


def test_criterion_7_bred_vectors():
    ops = Operators(build_structured_mesh(8))
    params = ProblemParams(Pr=0.71, Ra=1e4, J=1)
    cfg = BredVectorConfig(rng_seed=0, delta_t=0.001, k_star=5)
    eps = cfg.draw_epsilon()
    ns = ops.ctx.num_scalar_p2
    u0 = np.ones(2 * ns)
    T0 = np.ones(ops.n_T)
    u0[ops.vel_dirichlet] = 0.0
    T0[ops.temp_dirichlet] = 1.0 - ops.temp_bc_coords[:, 0]

    integ = TrajectoryIntegrator(params, ops, 0.001)
    path = control_path((u0, T0), cfg, integ)
    norm_devs = []
    for channel, e in zip(CHANNELS, eps):
        devs = []
        breed((u0, T0), channel, e, cfg, integ, path=path,
              on_cycle=lambda k, bv, e=e, d=devs: d.append(
                  abs(ops.ctx.l2_norm_scalar(bv) - e)))
        assert len(devs) == cfg.k_star
        norm_devs.extend(devs)

    p2 = ProblemParams(Pr=0.71, Ra=1e4, J=2)
    a = benchmark_initial_conditions(cfg, p2, ops, 0.001)
    b = benchmark_initial_conditions(cfg, p2, ops, 0.001)
    reproducible = (a[0].tobytes() == b[0].tobytes()
                    and a[1].tobytes() == b[1].tobytes()
                    and a[2] == b[2])

    worst = max(norm_devs)
    report(7, worst < 1e-12 and reproducible,
           f"max | |bv| - eps | = {worst:.2e} over every cycle of all "
           f"channels (limit 1e-12); fixed-seed rerun bit-identical: "
           f"{reproducible}")


# ---------------------------------------------------------------------------
# criterion 8: forcing-synthesis oracle


def test_criterion_8_forcing_residuals():
    params = ProblemParams(Pr=1.0, Ra=100.0, J=1)
    gen = np.random.default_rng(23)
    pts = gen.uniform(0.0, 1.0, size=(100, 2))
    ts = gen.uniform(0.0, 1.0, size=100)
    worst = 0.0
    for scale in (1.01, 0.99):
        ex = MmsExact(scale)
        f, gamma = mms_forcing(ex, params)
        for t in ts[:25]:
            worst = max(worst,
                        np.max(np.abs(residual_momentum(ex, f, pts, float(t),
                                                        params))),
                        np.max(np.abs(residual_temperature(ex, gamma, pts,
                                                           float(t)))))
    report(8, worst < 1e-10,
           f"max strong-form residual (derivatives via independent finite "
           f"differences) = {worst:.2e} at 100 random space-time samples "
           "(limit 1e-10)")


# ---------------------------------------------------------------------------
# criterion 9: degenerate-ensemble equivalence


def reference_bdf2_step(u_prev, u_curr, T_prev, T_curr, t, dt, params, ops):
    """Plain (non-ensemble) BDF2-IMEX step: convection matrix from the
    extrapolated velocity, no fluctuation terms anywhere."""
    t1 = t + dt
    u_extr = 2.0 * u_curr - u_prev
    N_s = ops.ctx.convection_scalar(u_extr)
    N_u = sp.block_diag((N_s, N_s), format="csr")
    A_u = ((3.0 / (2.0 * dt)) * ops.M_u + N_u + params.Pr * ops.K_u).tocsr()
    saddle = ops.saddle_matrix(A_u)
    fact_u = linalg.factorize(saddle)

    T_extr = 2.0 * T_curr - T_prev
    r = (ops.M_u @ (4.0 * u_curr - u_prev)) / (2.0 * dt)
    r += ops.ctx.buoyancy(T_extr, params.xi, params.Pr * params.Ra)
    ns = ops.ctx.num_scalar_p2
    vals = np.asarray(params.velocity_bc(ops.vel_bc_coords, t1, 0), dtype=float)
    r[ops.vel_dirichlet_scalar] = vals[:, 0]
    r[ns + ops.vel_dirichlet_scalar] = vals[:, 1]
    rhs = np.zeros(saddle.shape[0])
    rhs[:ops.n_u] = r
    sol = fact_u.solve(rhs)
    u_new = sol[:ops.n_u]
    p_new = sol[ops.n_u:ops.n_u + ops.n_p]

    A_T = ((3.0 / (2.0 * dt)) * ops.M_T + N_s + ops.K_T).tocsr()
    A_T = linalg.replace_rows_identity(A_T, ops.temp_dirichlet)
    fact_T = linalg.factorize(A_T)
    rT = (ops.M_T @ (4.0 * T_curr - T_prev)) / (2.0 * dt)
    rT[ops.temp_dirichlet] = params.temperature_bc(ops.temp_bc_coords, t1, 0)
    T_new = fact_T.solve(rT)
    return u_new, p_new, T_new


def test_criterion_9_degenerate_ensemble_equivalence():
    ops = Operators(build_structured_mesh(8))
    params = ProblemParams(Pr=0.71, Ra=1e4, J=1)
    gen = np.random.default_rng(9)
    base = 1.0 - ops.ctx.p2_coords[:, 0]
    T = base + 0.01 * gen.standard_normal(ops.n_T)
    T[ops.temp_dirichlet] = base[ops.temp_dirichlet]
    state = EnsembleState(
        u_prev=np.zeros((1, ops.n_u)), u_curr=np.zeros((1, ops.n_u)),
        T_prev=T[None, :].copy(), T_curr=T[None, :].copy(),
        p_curr=np.zeros((1, ops.n_p)), t=0.0, dt=0.002)
    state = startup_step(state, params, ops)

    u_prev = state.u_prev[0].copy()
    u_curr = state.u_curr[0].copy()
    T_prev = state.T_prev[0].copy()
    T_curr = state.T_curr[0].copy()
    t = state.t

    identical = True
    for _ in range(20):
        state = step(state, params, ops)
        u_new, p_new, T_new = reference_bdf2_step(
            u_prev, u_curr, T_prev, T_curr, t, state.dt, params, ops)
        identical &= (state.u_curr[0].tobytes() == u_new.tobytes()
                      and state.T_curr[0].tobytes() == T_new.tobytes()
                      and state.p_curr[0].tobytes() == p_new.tobytes())
        u_prev, u_curr = u_curr, u_new
        T_prev, T_curr = T_curr, T_new
        t += state.dt
    report(9, identical,
           "J=1 ensemble path bitwise-identical to the non-ensemble "
           "BDF2-IMEX reference over 20 steps")


# ---------------------------------------------------------------------------
# criterion 10: bounded discrete energy (qualitative stability)


@pytest.mark.parametrize("ra,dt", [(1e3, 0.02), (1e4, 0.01)])
def test_criterion_10_bounded_energy(ra, dt):
    cfg = ScenarioConfig(
        scenario="cavity", Ra=ra, Pr=0.71, m=16, dt0=dt,
        bred=BredVectorConfig(rng_seed=0, delta_t=dt, k_star=3),
        steady_tol=1e-5, max_steps=5000)
    rep, state, ops = run_benchmark(cfg)  # raises on any non-finite field
    ok = np.isfinite(rep.max_energy)
    report(f"10 (Ra={ra:g})", ok,
           f"no NaN/Inf over {rep.steps} steps; max discrete energy "
           f"{rep.max_energy:.4e}")
