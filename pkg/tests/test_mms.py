"""Closed-form manufactured solution checks.

The derivative evaluators and synthesized forcing are validated against
high-order central finite differences of the base evaluators only. The
fields are polynomials of degree <= 4 in each spatial variable and linear
in time, so the 7-point sixth-order stencils are exact up to rounding.
"""

import numpy as np
import pytest

from convens.mms import MmsExact, mms_forcing
from convens.stepper import ProblemParams

_D1 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_D2 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0
_OFF = np.arange(-3, 4)


def fd_x(fn, pts, t, h=0.1, order=1):
    coeffs = _D1 / h if order == 1 else _D2 / (h * h)
    acc = 0.0
    for k, c in zip(_OFF, coeffs):
        q = pts.copy()
        q[:, 0] += k * h
        acc = acc + c * np.asarray(fn(q, t), dtype=float)
    return acc


def fd_y(fn, pts, t, h=0.1, order=1):
    coeffs = _D1 / h if order == 1 else _D2 / (h * h)
    acc = 0.0
    for k, c in zip(_OFF, coeffs):
        q = pts.copy()
        q[:, 1] += k * h
        acc = acc + c * np.asarray(fn(q, t), dtype=float)
    return acc


def fd_t(fn, pts, t, h=0.05):
    return (np.asarray(fn(pts, t + h), dtype=float)
            - np.asarray(fn(pts, t - h), dtype=float)) / (2.0 * h)


@pytest.fixture(scope="module")
def samples(rng=None):
    gen = np.random.default_rng(7)
    pts = gen.uniform(0.0, 1.0, size=(100, 2))
    ts = gen.uniform(0.0, 1.0, size=100)
    return pts, ts


def test_divergence_free(samples):
    ex = MmsExact(1.013)
    pts, ts = samples
    for t in ts[:10]:
        div = (fd_x(lambda p, t: ex.u(p, t)[:, 0], pts, t)
               + fd_y(lambda p, t: ex.u(p, t)[:, 1], pts, t))
        assert np.max(np.abs(div)) < 1e-10


def test_velocity_zero_on_walls():
    ex = MmsExact(1.0)
    s = np.linspace(0, 1, 33)
    for wall in [np.column_stack([np.zeros(33), s]),
                 np.column_stack([np.ones(33), s]),
                 np.column_stack([s, np.zeros(33)]),
                 np.column_stack([s, np.ones(33)])]:
        assert np.max(np.abs(ex.u(wall, 0.7))) < 1e-14


def test_temperature_identity(samples):
    ex = MmsExact(0.99)
    pts, ts = samples
    u = ex.u(pts, ts[0])
    T = ex.T(pts, ts[0])
    assert np.allclose(T, u[:, 0] + u[:, 1] + 0.99 * (1 - pts[:, 0]), atol=1e-13)


def test_derivative_evaluators_match_finite_differences(samples):
    ex = MmsExact(1.01)
    pts, ts = samples
    t = float(ts[0])
    gu = ex.grad_u(pts, t)
    for i in range(2):
        ui = lambda p, t, i=i: ex.u(p, t)[:, i]
        assert np.allclose(gu[:, i, 0], fd_x(ui, pts, t), atol=1e-9)
        assert np.allclose(gu[:, i, 1], fd_y(ui, pts, t), atol=1e-9)
        lap = fd_x(ui, pts, t, order=2) + fd_y(ui, pts, t, order=2)
        assert np.allclose(ex.lap_u(pts, t)[:, i], lap, atol=1e-8)
    assert np.allclose(ex.u_t(pts, t), fd_t(ex.u, pts, t), atol=1e-9)

    gT = ex.grad_T(pts, t)
    assert np.allclose(gT[:, 0], fd_x(ex.T, pts, t), atol=1e-9)
    assert np.allclose(gT[:, 1], fd_y(ex.T, pts, t), atol=1e-9)
    assert np.allclose(ex.lap_T(pts, t),
                       fd_x(ex.T, pts, t, order=2) + fd_y(ex.T, pts, t, order=2),
                       atol=1e-8)
    assert np.allclose(ex.T_t(pts, t), fd_t(ex.T, pts, t), atol=1e-9)

    gp = ex.grad_p(pts, t)
    assert np.allclose(gp[:, 0], fd_x(ex.p, pts, t), atol=1e-10)
    assert np.allclose(gp[:, 1], fd_y(ex.p, pts, t), atol=1e-10)


def test_member_scaling_is_uniform(samples):
    pts, ts = samples
    base = MmsExact(1.0)
    scaled = MmsExact(1.25)
    t = float(ts[1])
    assert np.allclose(scaled.u(pts, t), 1.25 * base.u(pts, t), atol=1e-12)
    assert np.allclose(scaled.T(pts, t), 1.25 * base.T(pts, t), atol=1e-12)
    assert np.allclose(scaled.p(pts, t), 1.25 * base.p(pts, t), atol=1e-12)


def residual_momentum(ex, f, pts, t, params):
    """Strong-form momentum residual with every derivative from FD."""
    u = ex.u(pts, t)
    ut = fd_t(ex.u, pts, t)
    res = np.empty_like(u)
    prra = params.Pr * params.Ra
    xi = np.asarray(params.xi)
    T = ex.T(pts, t)
    px = fd_x(ex.p, pts, t)
    py = fd_y(ex.p, pts, t)
    for i in range(2):
        ui = lambda p, t, i=i: ex.u(p, t)[:, i]
        conv = u[:, 0] * fd_x(ui, pts, t) + u[:, 1] * fd_y(ui, pts, t)
        lap = fd_x(ui, pts, t, order=2) + fd_y(ui, pts, t, order=2)
        gp = px if i == 0 else py
        res[:, i] = (ut[:, i] + conv - params.Pr * lap + gp
                     - prra * xi[i] * T - f(pts, t)[:, i])
    return res


def residual_temperature(ex, gamma, pts, t):
    u = ex.u(pts, t)
    conv = u[:, 0] * fd_x(ex.T, pts, t) + u[:, 1] * fd_y(ex.T, pts, t)
    lap = fd_x(ex.T, pts, t, order=2) + fd_y(ex.T, pts, t, order=2)
    return fd_t(ex.T, pts, t) + conv - lap - gamma(pts, t)


@pytest.mark.parametrize("scale", [1.0, 1.01, 0.99])
def test_forcing_strong_residual(samples, scale):
    params = ProblemParams(Pr=1.0, Ra=100.0, J=1)
    ex = MmsExact(scale)
    f, gamma = mms_forcing(ex, params)
    pts, ts = samples
    for t in np.unique(ts)[:20]:
        assert np.max(np.abs(residual_momentum(ex, f, pts, float(t), params))) < 1e-10
        assert np.max(np.abs(residual_temperature(ex, gamma, pts, float(t)))) < 1e-10


def test_scaled_forcing_differs_from_scaling_the_forcing(samples):
    # convection is quadratic in the member scaling, so f(1.01 * fields)
    # is not 1.01 * f(fields)
    params = ProblemParams(Pr=1.0, Ra=100.0, J=1)
    f1, _ = mms_forcing(MmsExact(1.0), params)
    f2, _ = mms_forcing(MmsExact(1.01), params)
    pts, _ = samples
    assert np.max(np.abs(f2(pts, 0.5) - 1.01 * f1(pts, 0.5))) > 1e-3
