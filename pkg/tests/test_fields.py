import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

from magtorus.errors import NotAlmostComplex, NotCompatible, Resonant
from magtorus.fields import (J2, MagneticField, certify_nonresonance, dlambda_matrix, kappa,
                             lorentz, running_field_integral, standard_J, tame_check, transport,
                             trig2)
from magtorus.torus import TorusLoop
from magtorus.trig import TrigPoly

unit = st.floats(0, 1, allow_nan=False, exclude_max=True)
coef = st.floats(-2, 2, allow_nan=False)


def perturbed():
    return MagneticField((trig2(3 * np.pi, [(1, 0, 0.0, 0.5)]),))


def random_loop(rng, N=1, tau=1.0, M=96):
    base = rng.random(2 * N)
    amp = rng.normal(size=(3, 2, 2 * N)) * 0.1

    def curve(t):
        th = 2 * np.pi * np.arange(1, 4) * t / tau
        return base + np.cos(th) @ amp[:, 0] + np.sin(th) @ amp[:, 1]

    return TorusLoop.from_function(curve, tau, M)


# trig polynomials -----------------------------------------------------------

def test_trig_evaluation():
    p = TrigPoly.from_rows(2, 1.0, [(1, 2, 0.5, -0.25)])
    x = np.array([0.1, 0.3])
    th = 2 * np.pi * (0.1 + 0.6)
    assert np.isclose(p(x), 1.0 + 0.5 * np.cos(th) - 0.25 * np.sin(th))


def test_trig_duplicate_modes():
    with pytest.raises(ValueError):
        TrigPoly.from_rows(2, 0.0, [(1, 0, 1.0, 0.0), (1, 0, 0.5, 0.0)])


@given(arrays(float, (3, 4), elements=coef), arrays(float, 2, elements=unit))
def test_trig_bounds_contain_values(c, x):
    rows = [(1, 0, c[0, 0], c[0, 1]), (0, 1, c[1, 0], c[1, 1]), (2, -1, c[2, 0], c[2, 1])]
    p = TrigPoly.from_rows(2, c[0, 2], rows)
    lo, hi = p.bounds()
    assert lo - 1e-12 <= p(x) <= hi + 1e-12


@given(arrays(float, (2, 2), elements=coef), arrays(float, 2, elements=unit))
def test_trig_gradient_fd(c, x):
    p = TrigPoly.from_rows(2, 0.0, [(1, 2, c[0, 0], c[0, 1]), (3, 0, c[1, 0], c[1, 1])])
    e = 1e-6
    fd = [(p(x + e * np.eye(2)[i]) - p(x - e * np.eye(2)[i])) / (2 * e) for i in range(2)]
    assert np.allclose(p.gradient(x), fd, atol=1e-6)


def test_gradient_norm_bound():
    p = TrigPoly.from_rows(2, 0.0, [(1, 0, 0.01, 0.0), (0, 1, 0.01, 0.0)])
    exact = 0.02 * np.pi * np.sqrt(2)
    g = p.gradient_norm_bound()
    assert exact <= g <= exact * (1 + 1e-3)


# Lorentz force ----------------------------------------------------------------

def test_lorentz_examples():
    assert np.allclose(lorentz(MagneticField.constant(2.0), [0.4, 0.1]), [[0, -2], [2, 0]])
    Y = lorentz(MagneticField.constant(1.0, 3.0), np.zeros(4))
    expect = np.zeros((4, 4))
    expect[:2, :2] = J2
    expect[2:, 2:] = 3 * J2
    assert np.allclose(Y, expect)
    a = 3 * np.pi + 0.5
    assert np.allclose(lorentz(perturbed(), [0.25, 0.0]), [[0, -a], [a, 0]])


@given(arrays(float, 4, elements=unit), arrays(float, 4, elements=coef))
def test_lorentz_antisymmetric(x, v):
    f = MagneticField((trig2(1.0, [(1, 1, 0.3, 0.2)]), trig2(-2.0, [(0, 2, 0.1, 0.0)])))
    Y = lorentz(f, x)
    assert np.array_equal(Y, -Y.T)
    assert abs(v @ Y @ v) < 1e-14


# transport ----------------------------------------------------------------

def test_transport_identity_and_half_turn():
    loop = random_loop(np.random.default_rng(0))
    f = MagneticField.constant(np.pi)
    assert np.allclose(transport(f, loop, 0.0), np.eye(2))
    assert np.allclose(transport(f, loop, 1.0), -np.eye(2), atol=1e-12)


def test_transport_constant_closed_form():
    a0 = 3 * np.pi
    loop = random_loop(np.random.default_rng(1), M=64)
    f = MagneticField.constant(a0)
    for t in loop.times:
        assert np.allclose(transport(f, loop, t), expm(a0 * t * J2), atol=1e-9)


def test_transport_orthogonal_random_loops():
    rng = np.random.default_rng(2)
    f = MagneticField((trig2(2.0, [(1, 0, 0.3, 0.4)]), trig2(5.0, [(1, 1, 0.0, 1.0)])))
    for _ in range(100):
        F = transport(f, random_loop(rng, N=2), rng.random())
        assert np.max(np.abs(F.T @ F - np.eye(4))) < 1e-10


def test_running_integral_quadrature_oracle():
    f = perturbed()
    loop = random_loop(np.random.default_rng(3), M=256)
    ts, b = running_field_integral(f, loop)
    fine = np.linspace(0, 1, 20001)
    th = 2 * np.pi * np.arange(1, 4)
    rng = np.random.default_rng(3)
    base = rng.random(2)
    amp = rng.normal(size=(3, 2, 2)) * 0.1
    pts = base + np.cos(np.outer(fine, th)) @ amp[:, 0] + np.sin(np.outer(fine, th)) @ amp[:, 1]
    vals = f.values(pts)[:, 0]
    exact = np.sum((vals[1:] + vals[:-1]) / 2) * (fine[1] - fine[0])
    assert abs(b[-1, 0] - exact) < 1e-6


# certificate ----------------------------------------------------------------

def test_certificate_constant():
    c = certify_nonresonance(MagneticField.constant(3 * np.pi), 1.0)
    assert c.k == (1,) and c.epsilon == 2.0
    assert c.b_lo == c.b_hi == (3 * np.pi,)


def test_certificate_two_and_a_half():
    c = certify_nonresonance(MagneticField.constant(2.5 * np.pi), 1.0)
    assert c.k == (1,)
    assert np.isclose(c.epsilon, np.sqrt(2))


def test_certificate_perturbed_vs_oracle():
    c = certify_nonresonance(perturbed(), 1.0)
    xs = np.linspace(0, 1, 1 << 16, endpoint=False)
    b = 3 * np.pi + 0.5 * np.sin(2 * np.pi * xs)
    oracle = 2 * np.min(np.abs(np.sin(b / 2)))
    assert c.k == (1,)
    assert c.b_lo[0] <= b.min() and c.b_hi[0] >= b.max()
    assert 2 * np.pi < c.b_lo[0] and c.b_hi[0] < 4 * np.pi
    assert abs(c.epsilon - oracle) / oracle < 0.01
    assert abs(c.epsilon - 1.938) < 0.01


@pytest.mark.parametrize("a", [2 * np.pi, 0.0, 4 * np.pi])
def test_resonant(a):
    with pytest.raises(Resonant):
        certify_nonresonance(MagneticField.constant(a), 1.0)


def test_resonant_when_range_crosses():
    f = MagneticField((trig2(2 * np.pi + 0.1, [(1, 0, 0.2, 0.0)]),))
    with pytest.raises(Resonant):
        certify_nonresonance(f, 1.0)


def test_negative_field():
    c = certify_nonresonance(MagneticField.constant(-3 * np.pi), 1.0)
    assert c.k == (-2,) and c.epsilon == 2.0


@given(st.floats(0.05, 0.95), st.floats(0, 0.04), st.integers(0, 3))
def test_rotation_gap(frac, amp, k):
    # field strictly inside (2 pi k, 2 pi (k+1)); F - I is bounded below by eps
    a0 = 2 * np.pi * (k + frac)
    f = MagneticField((trig2(a0, [(1, 1, amp, amp)]),))
    c = certify_nonresonance(f, 1.0)
    rng = np.random.default_rng(int(1000 * frac))
    for _ in range(20):
        F = transport(f, random_loop(rng), 1.0)
        v = rng.normal(size=2)
        assert np.linalg.norm((F - np.eye(2)) @ v) >= c.epsilon * (1 - 1e-6) * np.linalg.norm(v)


def test_gap_random_loops_perturbed():
    f = perturbed()
    c = certify_nonresonance(f, 1.0)
    rng = np.random.default_rng(4)
    for _ in range(1000):
        F = transport(f, random_loop(rng), 1.0)
        v = rng.normal(size=2)
        v /= np.linalg.norm(v)
        assert np.linalg.norm((F - np.eye(2)) @ v) >= c.epsilon * (1 - 1e-6)


# almost complex structures ----------------------------------------------------

def test_dlambda_sign():
    Om, J = dlambda_matrix(2), standard_J(2)
    xi = np.random.default_rng(5).normal(size=8)
    assert np.isclose((J @ xi) @ Om @ xi, xi @ xi)


def test_tame_zero_field():
    ok, margin = tame_check(MagneticField.constant(0.0), [0, 0], 1.0, standard_J(1))
    assert ok and np.isclose(margin, 0.75)


@pytest.mark.parametrize("A", [1.0, 3.0, 3 * np.pi, 20.0])
def test_tame_scaled(A):
    ok, _ = tame_check(MagneticField.constant(A), [0.2, 0.7], A, standard_J(1, A))
    assert ok


def test_tame_fails_large_field():
    ok, margin = tame_check(MagneticField.constant(10.0), [0, 0], 1.0, standard_J(1))
    assert not ok and margin < 0


def test_not_almost_complex():
    with pytest.raises(NotAlmostComplex):
        tame_check(MagneticField.constant(1.0), [0, 0], 1.0, np.eye(4))


@pytest.mark.parametrize("A, expect", [(1.0, 1.0), (4.0, 0.25), (1 / 9, 1 / 9)])
def test_kappa_examples(A, expect):
    assert np.isclose(kappa(standard_J(1, A)), expect)


@pytest.mark.parametrize("A", [1, 2, 4, 9, 16])
def test_kappa_times_A(A):
    assert np.isclose(kappa(standard_J(2, A)) * A, 1.0)


def test_kappa_incompatible():
    J = standard_J(1)
    R = np.eye(4)
    R[0, 1] = 0.5
    with pytest.raises(NotCompatible):
        kappa(np.linalg.inv(R) @ J @ R)
