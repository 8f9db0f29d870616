import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from quasistep.problems import (commutator_apply, kdv_problem, manufactured, polynomial_target,
                                shifted_solve, sine_target, symmetric_system_problem,
                                transport_problem, zero_problem)
from quasistep.spaces import SpaceConfig


def all_problems(n=32):
    sp = SpaceConfig(n)
    return [transport_problem(sp, 1.0, 1.0), transport_problem(sp, 0.5, 0.0),
            symmetric_system_problem(sp), kdv_problem(sp, 0.01), zero_problem(sp, 1.0)]


@pytest.mark.parametrize("n", [64, 128])
def test_transport_constant_symbol(n):
    # centred difference of sin x is (sin h / h) cos x exactly
    sp = SpaceConfig(n)
    p = transport_problem(sp, 2.0, 1.0)
    got = p.apply_A(np.zeros(n), np.sin(sp.x))
    np.testing.assert_allclose(got, 2.0 * math.sin(sp.h) / sp.h * np.cos(sp.x), atol=1e-12)
    assert np.max(np.abs(got - 2.0 * np.cos(sp.x))) <= 2.0 * sp.h**2 / 6 * 1.01


def test_transport_second_order_in_h():
    errs = []
    for n in (64, 128, 256):
        sp = SpaceConfig(n)
        p = transport_problem(sp, 1.0, 1.0)
        y = 0.5 * np.sin(sp.x)
        w = np.cos(2 * sp.x)
        # continuum limit of (aD + Da)/2 is a w_x + a_x w / 2
        exact = (1 + 0.5 * np.sin(sp.x)) * (-2 * np.sin(2 * sp.x)) + 0.25 * np.cos(sp.x) * w
        errs.append(np.max(np.abs(p.apply_A(y, w) - exact)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 2.0) < 0.1)


@pytest.mark.parametrize("k", [1, 3, 5])
def test_kdv_dispersion_symbol(k):
    sp = SpaceConfig(64)
    delta = 0.05
    p = kdv_problem(sp, delta)
    h = sp.h
    sigma = (math.sin(2 * k * h) - 2 * math.sin(k * h)) / h**3
    got = p.apply_A(np.zeros(64), np.cos(k * sp.x))
    np.testing.assert_allclose(got, -delta * sigma * np.sin(k * sp.x), atol=1e-11)
    assert sigma == pytest.approx(-k**3, rel=0.1)


def test_system_travelling_wave():
    # u = v = sin(x - t) solves u_t + v_x = 0, v_t + u_x = 0 when c = 1
    sp = SpaceConfig(128, components=2)
    p = symmetric_system_problem(sp)
    u = sp.sample(lambda x: np.stack([np.sin(x), np.sin(x)]))
    a = p.apply_A(np.zeros(sp.dof), u)
    expected = sp.sample(lambda x: np.stack([np.cos(x), np.cos(x)]))
    assert np.max(np.abs(a - expected)) <= sp.h**2 / 6 * 1.01


def test_affine_dependence_on_state(rng):
    sp = SpaceConfig(32)
    p = transport_problem(sp, 0.7, 1.5)
    q = transport_problem(sp, 1.0, 1.0)
    y, z, w = rng.standard_normal((3, 32))
    d = p.apply_A(y, w) - p.apply_A(z, w)
    # (a D + D a)/2 with a = y - z is the a0 = 0, a1 = 1 operator at y - z
    ref = 1.5 * (q.apply_A(y - z, w) - q.apply_A(np.zeros(32), w))
    np.testing.assert_allclose(d, ref, atol=1e-12)


def test_zero_images(rng):
    sp = SpaceConfig(32)
    assert np.all(transport_problem(sp, 2.0, 0.0).apply_A(rng.standard_normal(32), np.full(32, 3.0)) == 0)
    assert np.all(symmetric_system_problem(sp).apply_A(np.zeros(64), np.zeros(64)) == 0)
    assert np.all(kdv_problem(sp, 0.0).apply_A(np.zeros(32), rng.standard_normal(32)) == 0)


def test_assemble_matches_apply(rng):
    for p in all_problems(24):
        y = 0.3 * rng.standard_normal(p.space.dof)
        w = rng.standard_normal(p.space.dof)
        np.testing.assert_allclose(p.assemble_A(y) @ w, p.apply_A(y, w), atol=1e-11)


@pytest.mark.parametrize("idx", range(5))
def test_skew(idx, rng):
    p = all_problems(32)[idx]
    sp = p.space
    for _ in range(20):
        y = rng.standard_normal(sp.dof)
        w = rng.standard_normal(sp.dof)
        assert abs(sp.inner_x(w, p.apply_A(y, w))) <= 1e-11 * sp.norm_x(w) ** 2
    m = p.assemble_A(rng.standard_normal(sp.dof))
    np.testing.assert_allclose(m, -m.T, atol=1e-12)


def test_shifted_solve_is_contraction(rng):
    for p in all_problems(32)[:4]:
        sp = p.space
        y = 0.5 * rng.standard_normal(sp.dof)
        r = rng.standard_normal(sp.dof)
        for gamma in (0.0, 0.01, 1.0):
            w = shifted_solve(p, y, gamma, r)
            np.testing.assert_allclose(w + gamma * p.apply_A(y, w), r, atol=1e-10)
            assert sp.norm_x(w) <= sp.norm_x(r) * (1 + 1e-12)
    with pytest.raises(ValueError):
        shifted_solve(p, y, -1.0, r)


def test_commutator_vanishes_for_constant_coefficients(rng):
    sp = SpaceConfig(32)
    cases = [(transport_problem(sp, 1.3, 0.0), rng.standard_normal(32)),
             (kdv_problem(sp, 0.02), np.full(32, 0.7)),
             (symmetric_system_problem(sp), np.full(64, 0.4))]
    for p, y in cases:
        w = p.space.band_limited(rng)
        assert p.space.norm_x(commutator_apply(p, y, w)) <= 1e-11


def test_commutator_nonzero_for_variable_coefficients(rng):
    sp = SpaceConfig(64)
    p = transport_problem(sp, 1.0, 1.0)
    w = sp.band_limited(rng)
    assert sp.norm_x(commutator_apply(p, np.sin(sp.x), w)) > 1e-3


def test_manufactured_forcing_consistent_with_continuum():
    # the discrete forcing converges at O(h^2) to u_t + a(u) u_x + a(u)_x u / 2
    errs = []
    for n in (64, 128):
        sp = SpaceConfig(n)
        p = manufactured(transport_problem(sp, 1.0, 1.0))
        t = 0.3
        x = sp.x
        e = 0.5 * math.exp(-0.25 * t)
        u = e * np.sin(x - t)
        ux = e * np.cos(x - t)
        ut = e * (-np.cos(x - t) - 0.25 * np.sin(x - t))
        cont = ut + (1 + u) * ux + 0.5 * ux * u
        errs.append(np.max(np.abs(p.forcing(t) - cont)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_manufactured_target_and_derivative():
    sp = SpaceConfig(32)
    p = manufactured(transport_problem(sp))
    t, dt = 0.4, 1e-6
    fd = (p.exact_solution(t + dt) - p.exact_solution(t - dt)) / (2 * dt)
    np.testing.assert_allclose(p.exact_derivative(t), fd, atol=1e-8)
    assert not p.is_pure
    assert transport_problem(sp).is_pure


def test_system_target_components():
    sp = SpaceConfig(16, components=2)
    tgt = sine_target(2)
    p = manufactured(symmetric_system_problem(sp), tgt)
    u, v = sp.split(p.exact_solution(0.0))
    np.testing.assert_allclose(u, 0.5 * np.sin(sp.x))
    np.testing.assert_allclose(v, 0.5 * np.cos(sp.x))


def test_polynomial_target():
    tgt = polynomial_target([1.0, 2.0, 3.0])
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(tgt.value(x, 2.0), 17.0 * np.sin(x))
    np.testing.assert_allclose(tgt.time_derivative(x, 2.0), 14.0 * np.sin(x))


def test_scalar_problems_reject_systems():
    sp2 = SpaceConfig(16, components=2)
    with pytest.raises(ValueError):
        transport_problem(sp2)
    with pytest.raises(ValueError):
        kdv_problem(sp2)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 16, elements=st.floats(-5, 5)), arrays(np.float64, 16, elements=st.floats(-5, 5)),
       st.floats(-2, 2), st.floats(-2, 2))
def test_skew_property(y, w, a0, a1):
    sp = SpaceConfig(16)
    for p in (transport_problem(sp, a0, a1), kdv_problem(sp, 0.1)):
        scale = max(1.0, float(np.max(np.abs(p.assemble_A(y)))))
        assert abs(sp.inner_x(w, p.apply_A(y, w))) <= 1e-12 * scale * (1 + sp.norm_x(w) ** 2)
