"""Bred-vector perturbation generation for ensemble initial conditions.

A bred vector for a channel (u1, u2, or T) is grown by repeated
integrate / difference / rescale cycles against an unperturbed control
trajectory, then used to build the two-member benchmark initial state
chi_pm = chi0 + bv(chi; +-eps).
"""

from dataclasses import dataclass

import numpy as np

from . import stepper
from .errors import DegenerateBreedingError

CHANNELS = ("u1", "u2", "T")


@dataclass
class BredVectorConfig:
    epsilon: tuple | None = None   # (eps1, eps2, eps3); drawn from (0, 0.01) if None
    delta_t: float = 0.001         # reinitialization interval
    k_star: int = 5                # breeding cycles
    rng_seed: int = 0

    def __post_init__(self):
        if self.k_star < 1:
            raise ValueError("k_star must be >= 1")
        if self.delta_t <= 0:
            raise ValueError("delta_t must be positive")
        if self.epsilon is not None:
            if len(self.epsilon) != 3 or any(e <= 0 for e in self.epsilon):
                raise ValueError("epsilon must be three positive amplitudes")

    def draw_epsilon(self):
        if self.epsilon is not None:
            return tuple(float(e) for e in self.epsilon)
        rng = np.random.default_rng(self.rng_seed)
        return tuple(rng.uniform(0.0, 0.01, size=3))


class TrajectoryIntegrator:
    """Advances a single (J=1) coupled trajectory over one reinitialization
    interval with the same scheme as the ensemble runs: a trapezoidal
    startup step followed by BDF2 steps."""

    def __init__(self, params, ops, dt):
        if params.J != 1:
            params = stepper.ProblemParams(
                Pr=params.Pr, Ra=params.Ra, xi=tuple(params.xi), J=1,
                f=params.f, gamma=params.gamma,
                velocity_bc=params.velocity_bc,
                temperature_bc=params.temperature_bc)
        self.params = params
        self.ops = ops
        self.dt = dt

    def advance(self, u, T, t, interval):
        n_steps = max(1, int(round(interval / self.dt)))
        state = stepper.EnsembleState(
            u_prev=u[None, :].copy(), u_curr=u[None, :].copy(),
            T_prev=T[None, :].copy(), T_curr=T[None, :].copy(),
            p_curr=np.zeros((1, self.ops.n_p)), t=t, dt=self.dt)
        state = stepper.startup_step(state, self.params, self.ops)
        for _ in range(n_steps - 1):
            state = stepper.step(state, self.params, self.ops)
        return state.u_curr[0].copy(), state.T_curr[0].copy()


def _channel_get(u, T, channel, ns):
    if channel == "u1":
        return u[:ns]
    if channel == "u2":
        return u[ns:]
    if channel == "T":
        return T
    raise ValueError(f"unknown channel {channel!r}")


def _channel_set(u, T, channel, ns, values):
    if channel == "u1":
        u[:ns] = values
    elif channel == "u2":
        u[ns:] = values
    else:
        T[:] = values


def _interior_mask(channel, ops):
    if channel == "T":
        dirichlet = ops.temp_dirichlet
        n = ops.n_T
    else:
        dirichlet = ops.vel_dirichlet_scalar
        n = ops.ctx.num_scalar_p2
    mask = np.ones(n, dtype=bool)
    mask[dirichlet] = False
    return mask


def control_path(control_initial, config, integrator):
    """Control trajectory states at the cycle boundaries t^k, k = 0..k_star."""
    u, T = control_initial
    path = [(u.copy(), T.copy())]
    t = 0.0
    for _ in range(config.k_star):
        u, T = integrator.advance(u, T, t, config.delta_t)
        t += config.delta_t
        path.append((u, T))
    return path


def breed(control_initial, channel, epsilon, config, integrator, path=None,
          on_cycle=None):
    """Grow one bred vector of amplitude ``epsilon`` on the given channel.

    The control trajectory is never mutated; ``path`` may carry its
    precomputed cycle-boundary states to share across channels.
    The returned field has L2 norm |epsilon| by construction;
    ``on_cycle(k, bv)`` is called with each intermediate vector.
    """
    ops = integrator.ops
    ns = ops.ctx.num_scalar_p2
    if path is None:
        path = control_path(control_initial, config, integrator)

    mask = _interior_mask(channel, ops)
    u_p = path[0][0].copy()
    T_p = path[0][1].copy()
    chan = _channel_get(u_p, T_p, channel, ns).copy()
    chan[mask] += epsilon
    _channel_set(u_p, T_p, channel, ns, chan)

    bv = None
    t = 0.0
    for k in range(1, config.k_star + 1):
        u_p, T_p = integrator.advance(u_p, T_p, t, config.delta_t)
        t += config.delta_t
        u_c, T_c = path[k]
        diff = _channel_get(u_p, T_p, channel, ns) - _channel_get(u_c, T_c, channel, ns)
        norm = ops.ctx.l2_norm_scalar(diff)
        if norm == 0.0:
            raise DegenerateBreedingError(
                f"channel {channel}: trajectories coincide at cycle {k}")
        bv = (epsilon / norm) * diff
        if on_cycle is not None:
            on_cycle(k, bv)
        # reinitialize: perturbed = control with the channel offset by bv
        u_p = u_c.copy()
        T_p = T_c.copy()
        chan = _channel_get(u_p, T_p, channel, ns).copy()
        chan += bv
        _channel_set(u_p, T_p, channel, ns, chan)
    return bv


def benchmark_initial_conditions(config, params, ops, dt):
    """J=2 cavity initial state: u_pm = (1 + bv(u1; +-e1), 1 + bv(u2; +-e2)),
    T_pm = 1 + bv(T; +-e3), with Dirichlet dofs overwritten by the exact
    boundary values afterwards.

    Returns (u_members, T_members, epsilon) with arrays of shape (2, n).
    """
    eps = config.draw_epsilon()
    ns = ops.ctx.num_scalar_p2

    u0 = np.ones(2 * ns)
    T0 = np.ones(ops.n_T)
    _impose_cavity_bc(u0, T0, ops)

    integrator = TrajectoryIntegrator(params, ops, dt)
    path = control_path((u0, T0), config, integrator)

    bvs = {}
    for i, channel in enumerate(CHANNELS):
        for sign in (+1.0, -1.0):
            bvs[(channel, sign)] = breed((u0, T0), channel, sign * eps[i],
                                         config, integrator, path=path)

    u_members = np.empty((2, 2 * ns))
    T_members = np.empty((2, ops.n_T))
    for m, sign in enumerate((+1.0, -1.0)):
        u = np.concatenate([1.0 + bvs[("u1", sign)], 1.0 + bvs[("u2", sign)]])
        T = 1.0 + bvs[("T", sign)]
        _impose_cavity_bc(u, T, ops)
        u_members[m] = u
        T_members[m] = T
    return u_members, T_members, eps


def _impose_cavity_bc(u, T, ops):
    ns = ops.ctx.num_scalar_p2
    u[ops.vel_dirichlet_scalar] = 0.0
    u[ns + ops.vel_dirichlet_scalar] = 0.0
    T[ops.temp_dirichlet] = 1.0 - ops.temp_bc_coords[:, 0]
