import numpy as np
import pytest
from hypothesis import given, strategies as st

from magtorus.errors import NonContractible, NotCritical
from magtorus.fields import MagneticField, trig2
from magtorus.loopspace import (FourierLoop, action, cz_index, descend, fourier_action,
                                gradient, hessian_index, hessian_matrix, l2_inner, magnetic_term)
from magtorus.potential import Potential, PotentialTerm
from magtorus.trig import TrigPoly

V0 = Potential.zero(1, 1.0)


def random_loop(rng, K=4, N=1, scale=0.05, tau=1.0, winding=None):
    d = 2 * N
    return FourierLoop(tau, rng.random(d), rng.normal(size=(K, d)) * scale,
                       rng.normal(size=(K, d)) * scale, winding)


def rough_field():
    return MagneticField((trig2(3 * np.pi, [(1, 0, 0.0, 0.5), (0, 2, 0.2, 0.1)]),))


def rough_V():
    return Potential(1, 1.0, (
        PotentialTerm(0, 0.0, TrigPoly.from_rows(2, 0.0, [(1, 0, 0.01, 0.0), (0, 1, 0.01, 0.0)])),
        PotentialTerm(1, 0.5, TrigPoly.from_rows(2, 0.0, [(1, 1, 0.02, 0.03)]))))


def test_fit_round_trip():
    rng = np.random.default_rng(0)
    loop = random_loop(rng, K=5, winding=[1, -2])
    fit = FourierLoop.fit(loop.samples(24), 1.0, 5)
    assert np.array_equal(fit.winding, [1, -2])
    assert np.max(np.abs(fit.samples(64) - loop.samples(64))) < 1e-10
    assert np.allclose(loop(1.3) - loop(0.3), [1, -2])


def test_constant_action_zero(cyclotron):
    assert action(cyclotron, V0, FourierLoop.constant([0.2, 0.4])).total == 0.0


@pytest.mark.parametrize("R", [0.1, 0.5, 1.0])
def test_circle_action(cyclotron, R):
    loop = FourierLoop.circle(R)
    S = action(cyclotron, V0, loop).total
    assert abs(S - np.pi * R ** 2 * (2 * np.pi - 3 * np.pi)) < 1e-7 * R ** 2
    assert abs(fourier_action(loop, 3 * np.pi) - S) < 1e-9


def test_circle_action_tau_scaling():
    # kinetic term 2 pi^2 R^2 / tau, magnetic -a pi R^2
    for tau in (0.5, 2.0):
        loop = FourierLoop.circle(0.3, tau=tau)
        S = action(MagneticField.constant(3 * np.pi), Potential.zero(1, tau), loop).total
        assert np.isclose(S, 2 * np.pi ** 2 * 0.09 / tau - 3 * np.pi * np.pi * 0.09)


@given(st.integers(1, 6), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5),
       st.floats(-0.5, 0.5), st.floats(-20, 20))
def test_fourier_formula_single_mode(k, c1, c2, s1, s2, a):
    cos = np.zeros((k, 2))
    sin = np.zeros((k, 2))
    cos[k - 1] = c1, c2
    sin[k - 1] = s1, s2
    loop = FourierLoop(1.0, [0.1, 0.2], cos, sin)
    S = action(MagneticField.constant(a), V0, loop).total
    assert abs(fourier_action(loop, a) - S) < 1e-9


def test_cap_independence():
    rng = np.random.default_rng(1)
    f = rough_field()
    for _ in range(5):
        loop = random_loop(rng, scale=0.1)
        m1 = magnetic_term(f, loop)
        m2 = magnetic_term(f, loop, center=rng.random(2))
        assert abs(m1 - m2) < 1e-8


def test_noncontractible_action():
    loop = FourierLoop(1.0, [0, 0], np.zeros((1, 2)), np.zeros((1, 2)), [1, 0])
    with pytest.raises(NonContractible):
        action(MagneticField.constant(1.0), V0, loop)
    with pytest.raises(NonContractible):
        gradient(MagneticField.constant(1.0), V0, loop)


def test_gradient_at_critical_constant():
    V = rough_V()
    Va = Potential.autonomous(V.terms[0].space, 1.0)
    g = gradient(rough_field(), Va, FourierLoop.constant([0.5, 0.5]))
    assert np.max(np.abs(g.params)) < 1e-14


def test_gradient_constant_noncritical():
    Va = Potential.autonomous(rough_V().terms[0].space, 1.0)
    x = np.array([0.2, 0.7])
    g = gradient(rough_field(), Va, FourierLoop.constant(x, K=3))
    assert np.allclose(g.cos, 0, atol=1e-14) and np.allclose(g.sin, 0, atol=1e-14)
    assert np.allclose(g.base, -Va.gradient(0.0, x))


def test_gradient_fd_fifty_loops():
    rng = np.random.default_rng(2)
    f, V = rough_field(), rough_V()
    for _ in range(50):
        loop = random_loop(rng)
        xi = random_loop(rng, scale=1.0)
        lhs = l2_inner(gradient(f, V, loop), xi)
        h = 1e-5
        fd = (action(f, V, loop + xi.scaled(h)).total
              - action(f, V, loop + xi.scaled(-h)).total) / (2 * h)
        assert abs(lhs - fd) <= 1e-6 * abs(fd)


def test_hessian_symmetric():
    H = hessian_matrix(rough_field(), rough_V(), random_loop(np.random.default_rng(3)), 8)
    assert np.allclose(H, H.T)


@pytest.mark.parametrize("m, index", [(1, 0), (3, 2), (5, 4), (7, 6)])
def test_constant_indices(m, index):
    f = MagneticField.constant(m * np.pi)
    loop = FourierLoop.constant([0.3, 0.8])
    res = hessian_index(f, V0, loop)
    assert (res.morse_index, res.nullity, res.converged) == (index, 2, True)
    assert cz_index(f, V0, loop, is_nondegenerate=False) == m


def test_index_not_critical():
    Va = Potential.autonomous(rough_V().terms[0].space, 1.0)
    with pytest.raises(NotCritical):
        hessian_index(MagneticField.constant(3 * np.pi), Va, FourierLoop.constant([0.2, 0.3]))


def test_perturbed_maximum_index(cyclotron, small_V):
    loop = FourierLoop.constant([0.5, 0.5])
    res = hessian_index(cyclotron, small_V, loop)
    assert res.nullity == 0
    assert cz_index(cyclotron, small_V, loop, is_nondegenerate=True) == res.morse_index == 4


def test_descent_bounded_regime():
    start = FourierLoop.circle(0.1, K=4)
    f = MagneticField.constant(np.pi)
    loop, rep = descend(f, V0, start)
    assert rep.converged and not rep.unbounded
    assert np.all(np.diff(rep.actions) <= 0)
    assert rep.actions[-1] < 1e-12
    assert np.max(np.abs(loop.cos)) < 1e-6


def test_descent_unbounded_regime(cyclotron):
    loop, rep = descend(cyclotron, V0, FourierLoop.circle(0.1, K=4))
    assert rep.unbounded and rep.actions[-1] < -1e6
    assert np.all(np.diff(rep.actions) <= 0)


def test_descent_at_critical(cyclotron):
    _, rep = descend(cyclotron, V0, FourierLoop.constant([0.1, 0.1]))
    assert rep.iterations == 0 and rep.converged
