"""Acceptance criteria, one test per criterion, each against an independent oracle.

A one-line PASS/FAIL verdict per criterion is printed at the end of the pytest
run (see conftest.py), or directly when this file is executed as a script.
"""

import time
from math import comb

import numpy as np
import pytest
from scipy.integrate import dblquad
from scipy.linalg import expm

from magtorus.atlas import SearchConfig, find_orbits, morse_audit, novikov_data, predict
from magtorus.cli import main
from magtorus.dynamics import integrate, momentum_bound, nondegeneracy
from magtorus.fields import J2, MagneticField, certify_nonresonance, transport, trig2
from magtorus.loopspace import FourierLoop, action, cz_index, gradient, hessian_index, l2_inner
from magtorus.potential import Potential, PotentialTerm
from magtorus.torus import TorusLoop, lift, torus_delta
from magtorus.trig import TrigPoly

RESULTS = {}
A0 = 3 * np.pi
V0 = Potential.zero(1, 1.0)


def record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    assert ok, line


def perturbed_field():
    return MagneticField((trig2(A0, [(1, 0, 0.0, 0.5)]),))


def small_potential():
    return Potential.autonomous(TrigPoly.from_rows(2, 0.0, [(1, 0, 0.01, 0.0), (0, 1, 0.01, 0.0)]), 1.0)


@pytest.fixture(scope="module")
def search():
    t0 = time.perf_counter()
    res = find_orbits(MagneticField.constant(A0), small_potential(), 1.0, (0, 0),
                      SearchConfig(seed=42, budget=200))
    return res, time.perf_counter() - t0


def test_criterion_01_certificate():
    c = certify_nonresonance(MagneticField.constant(A0), 1.0)
    t0 = time.perf_counter()
    c2 = certify_nonresonance(perturbed_field(), 1.0)
    dt = time.perf_counter() - t0
    # oracle: fine-grid extrema of tau*a and the endpoint sines
    xs = np.linspace(0, 1, 1 << 18, endpoint=False)
    b = A0 + 0.5 * np.sin(2 * np.pi * xs)
    oracle = 2 * min(abs(np.sin(b.min() / 2)), abs(np.sin(b.max() / 2)))
    rel = abs(c2.epsilon - oracle) / oracle
    ok = (c.k == (1,) and c.epsilon == 2 * abs(np.sin(A0 / 2)) == 2.0 and c2.k == (1,)
          and rel < 0.01 and dt < 1.0)
    record(1, ok, f"eps={c.epsilon}, perturbed eps {c2.epsilon:.5f} vs oracle {oracle:.5f}, {dt:.3f} s")


def test_criterion_02_transport_gap():
    field = perturbed_field()
    cert = certify_nonresonance(field, 1.0)
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst, oracle_err = np.inf, 0.0
    fine = np.linspace(0, 1, 4097)
    for _ in range(1000):
        base = rng.random(2)
        amp = rng.normal(size=(3, 2, 2)) * 0.15

        def curve(t):
            th = 2 * np.pi * np.arange(1, 4) * np.atleast_1d(t)[:, None]
            return (base + np.cos(th) @ amp[:, 0] + np.sin(th) @ amp[:, 1]).squeeze()

        loop = TorusLoop.from_function(curve, 1.0, 128)
        F = transport(field, loop, 1.0)
        v = rng.normal(size=2)
        v /= np.linalg.norm(v)
        worst = min(worst, np.linalg.norm((F - np.eye(2)) @ v))
        # oracle: trapezoid on a fine grid, then a matrix exponential
        vals = field.values(curve(fine))[:, 0]
        bfine = np.sum(vals[1:] + vals[:-1]) / 2 * (fine[1] - fine[0])
        oracle_err = max(oracle_err, np.max(np.abs(F - expm(bfine * J2))))
    dt = time.perf_counter() - t0
    ok = worst >= cert.epsilon * (1 - 1e-6) and dt < 10 and oracle_err < 1e-6
    record(2, ok, f"min |(F-I)v| {worst:.6f} >= eps {cert.epsilon:.6f}, "
                  f"oracle err {oracle_err:.1e}, {dt:.2f} s")


def test_criterion_03_closed_form_flow():
    p0 = np.array([1.0, 0.0])
    traj = integrate(MagneticField.constant(A0), V0, (np.zeros(2), p0), (0, 1), n_out=256)
    err = max(np.max(np.abs(p - expm(-A0 * t * J2) @ p0)) for t, p in zip(traj.times, traj.momenta))
    dx = torus_delta(traj.positions[-1, 1], -2 / A0)
    ok = err < 1e-8 and abs(dx) < 1e-8
    record(3, ok, f"max |p - exp(-a t J)p0| {err:.1e}, x2(1) off by {abs(dx):.1e}")


def test_criterion_04_flat_degeneracy():
    field = MagneticField.constant(A0)
    rng = np.random.default_rng(4)
    dets = []
    for x0 in rng.random((10, 2)):
        traj = integrate(field, V0, (x0, [0.0, 0.0]), (0, 1), True)
        dets.append(abs(nondegeneracy(traj)[0]))
    # oracle: closed-form monodromy [[I, C], [0, exp(-aJ)]] has det(M - I) = 0
    C = (np.sin(A0) * np.eye(2) + (np.cos(A0) - 1) * J2) / A0
    M = np.block([[np.eye(2), C], [np.zeros((2, 2)), expm(-A0 * J2)]])
    res = find_orbits(field, V0, 1.0, (1, 0), SearchConfig(seed=42))
    ok = max(dets) < 1e-6 and abs(np.linalg.det(M - np.eye(4))) < 1e-12 and len(res) == 0
    record(4, ok, f"max |det(M - I)| {max(dets):.1e}; class (1,0): {len(res)} orbits")


def test_criterion_05_momentum_bound(search):
    res, _ = search
    V = small_potential()
    cert = certify_nonresonance(MagneticField.constant(A0), 1.0)
    # oracle: (sqrt(tau) + sqrt(2 tau)/eps) (delta + sqrt(tau) |grad V|) by hand
    hand = (1 + np.sqrt(2) / 2) * 0.02 * np.sqrt(2) * np.pi
    excess = []
    for o in res.orbits:
        bound = (1 + np.sqrt(2) / 2) * (o.residual + 0.02 * np.sqrt(2) * np.pi)
        excess.append(np.max(np.abs(o.trajectory.momenta)) - bound)
    pkg = momentum_bound(cert, V, 0.0)
    ok = (len(res.orbits) > 0 and max(excess) <= 1e-9 and abs(hand - 0.1517) < 5e-5
          and abs(pkg - hand) < 1e-4)
    record(5, ok, f"{len(res.orbits)} orbits, bound {hand:.4f} (package {pkg:.4f})")


def _fourier_oracle(loop: FourierLoop, a: float) -> float:
    z = loop.samples(256) @ np.array([1.0, 1.0j])
    c = np.fft.fft(z) / 256  # c[j] multiplies exp(+2 pi i f_j t); clockwise modes have f_j < 0
    k = -np.fft.fftfreq(256, 1 / 256)
    return float(np.sum((2 * np.pi ** 2 * k ** 2 - a * np.pi * k) * np.abs(c) ** 2))


def test_criterion_06_fourier_action_and_indices():
    rng = np.random.default_rng(6)
    worst = 0.0
    for k in range(1, 7):
        for _ in range(4):
            cos, sin = np.zeros((k, 2)), np.zeros((k, 2))
            cos[k - 1], sin[k - 1] = rng.normal(size=2) * 0.3, rng.normal(size=2) * 0.3
            loop = FourierLoop(1.0, rng.random(2), cos, sin)
            worst = max(worst, abs(_fourier_oracle(loop, A0) - action(MagneticField.constant(A0), V0, loop).total))
    table = []
    for m in (1, 3, 5):
        f = MagneticField.constant(m * np.pi)
        loop = FourierLoop.constant([0.4, 0.1])
        res = hessian_index(f, V0, loop)
        table.append((m, res.morse_index, cz_index(f, V0, loop, False)))
    # oracle: two negative directions per mode k >= 1 with 2 pi k < a, plus half the nullity
    expect = [(m, 2 * sum(2 * k < m for k in range(1, 10)), 2 * sum(2 * k < m for k in range(1, 10)) + 1)
              for m in (1, 3, 5)]
    ok = worst < 1e-9 and table == expect == [(1, 0, 1), (3, 2, 3), (5, 4, 5)]
    record(6, ok, f"max |Fourier - quadrature| {worst:.1e}; (a/pi, index, mu0) {table}")


def test_criterion_07_unbounded():
    field = MagneticField.constant(A0)
    errs = {R: abs(action(field, V0, FourierLoop.circle(R)).total + np.pi ** 2 * R ** 2) for R in (0.1, 0.5, 1.0)}
    ok = all(e < 1e-7 * R ** 2 for R, e in errs.items())
    record(7, ok, "S(gamma_R) + pi^2 R^2: " + ", ".join(f"R={R}: {e:.1e}" for R, e in errs.items()))


def test_criterion_08_gradient():
    field = MagneticField((trig2(A0, [(1, 0, 0.0, 0.5), (1, 1, 0.2, -0.1)]),))
    V = Potential(1, 1.0, (small_potential().terms[0],
                           PotentialTerm(2, 0.3, TrigPoly.from_rows(2, 0.0, [(1, 2, 0.03, 0.01)]))))
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(50):
        loop = FourierLoop(1.0, rng.random(2), rng.normal(size=(5, 2)) * 0.05, rng.normal(size=(5, 2)) * 0.05)
        xi = FourierLoop(1.0, rng.normal(size=2), rng.normal(size=(5, 2)), rng.normal(size=(5, 2)))
        h = 1e-5
        fd = (action(field, V, loop + xi.scaled(h)).total - action(field, V, loop + xi.scaled(-h)).total) / (2 * h)
        worst = max(worst, abs(l2_inner(gradient(field, V, loop), xi) - fd) / abs(fd))
    record(8, worst < 1e-6, f"max rel. error {worst:.1e} over 50 loops")


def test_criterion_09_orbit_count(search):
    res, dt = search
    orbits = res.orbits
    pred = predict(MagneticField.constant(A0), 1.0)
    # oracle: Morse index at a constant orbit over a critical point x_c is
    # 2 (mode k=1) + #positive eigenvalues of Hess V(x_c); degree = 2 - index
    oracle = []
    for o in orbits:
        x = o.initial.x
        hess = -0.04 * np.pi ** 2 * np.cos(2 * np.pi * x)
        oracle.append(2 - (2 + int(np.sum(hess > 0))))
    cz = [o.cz_index for o in orbits]
    audit = morse_audit(orbits, pred)
    ok = (len(orbits) == 4 and all(o.nondegenerate for o in orbits) and sorted(cz) == [-2, -1, -1, 0]
          and cz == oracle and audit.passed and pred.hf_ranks == {-2: 1, -1: 2, 0: 1} and dt < 60)
    record(9, ok, f"{len(orbits)} orbits, cz {sorted(cz)}, audit {'PASS' if audit.passed else 'FAIL'}, {dt:.1f} s")


def test_criterion_10_prediction():
    p = predict(MagneticField.constant(A0, A0), 1.0)
    ok = (sum(p.hf_ranks.values()) == 16 == 2 ** 4 and p.min_count == 5
          and p.hf_ranks == {j: comb(4, j + 4) for j in range(-4, 1)})
    record(10, ok, f"ranks {p.hf_ranks}, sum {sum(p.hf_ranks.values())}, min {p.min_count}")


def test_criterion_11_novikov():
    field = MagneticField.constant(A0)
    phi0, r0 = novikov_data(field, (0, 0))
    phi, r = novikov_data(field, (1, 0))
    # oracle: integrate a over the swept torus f(s, t) = t h + s e_2, Jacobian mu(e_2, h) = -1
    val, _ = dblquad(lambda t, s: float(field.a[0](np.array([t, s]))), 0, 1, 0, 1, epsabs=1e-13)
    oracle = -val
    ok = (not np.any(phi0) and r0 == 0 and r == 1 and abs(abs(phi[1]) - A0) < 1e-12
          and abs(phi[1] - oracle) < 1e-8 and phi[0] == 0)
    record(11, ok, f"h=0: rank {r0}; h=(1,0): phi={phi.tolist()}, oracle {oracle:.12f}, rank {r}")


def test_criterion_12_determinism(tmp_path):
    codes = [main(["find", "--seed", "42", "--output-dir", str(tmp_path / d)]) for d in ("a", "b")]
    a, b = ((tmp_path / d / "catalog.json").read_bytes() for d in ("a", "b"))
    record(12, codes == [0, 0] and a == b, f"exit codes {codes}, {len(a)} bytes, identical={a == b}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
