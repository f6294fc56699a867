"""Acceptance checks executed by ``magtorus verify``."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import dblquad

from .atlas import find_orbits, novikov_data, predict
from .catalog import dumps, run_search
from .dynamics import integrate, momentum_bound, nondegeneracy
from .errors import MagtorusError, Resonant
from .fields import J2, MagneticField, certify_nonresonance, transport, trig2
from .loopspace import (FourierLoop, action, cz_index, fourier_action, gradient, hessian_index,
                        l2_inner)
from .potential import Potential
from .torus import TorusLoop

PASS, FAIL, SKIP = "PASS", "FAIL", "SKIP"


@dataclass
class CheckResult:
    number: int
    name: str
    status: str
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{self.status}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.2f} s)"


def _ok(flag: bool) -> str:
    return PASS if flag else FAIL


# fixed-instance checks -------------------------------------------------------

def check_certificate(cfg=None):
    c = certify_nonresonance(MagneticField.constant(3 * np.pi), 1.0)
    f = MagneticField((trig2(3 * np.pi, [(1, 0, 0.0, 0.5)]),))
    t0 = time.perf_counter()
    c2 = certify_nonresonance(f, 1.0)
    dt = time.perf_counter() - t0
    xs = np.linspace(0.0, 1.0, 1 << 16, endpoint=False)
    oracle = 2 * np.min(np.abs(np.sin((3 * np.pi + 0.5 * np.sin(2 * np.pi * xs)) / 2)))
    rel = abs(c2.epsilon - oracle) / oracle
    ok = c.k == (1,) and c.epsilon == 2.0 and c2.k == (1,) and rel < 0.01 and dt < 1.0
    return ok, f"k={c.k[0]} eps={c.epsilon!r}; perturbed k={c2.k[0]} eps rel.err {rel:.2e}"


def check_closed_form_flow(cfg=None):
    a0 = 3 * np.pi
    field = MagneticField.constant(a0)
    V = Potential.zero(1, 1.0)
    p0 = np.array([1.0, 0.0])
    traj = integrate(field, V, (np.zeros(2), p0), (0.0, 1.0), n_out=200)
    # exp(-a t J) = cos(a t) I - sin(a t) J
    exact = np.array([(np.cos(a0 * t) * np.eye(2) - np.sin(a0 * t) * J2) @ p0 for t in traj.times])
    err_p = float(np.max(np.abs(traj.momenta - exact)))
    x1 = traj.lifted[-1, 1]
    err_x = abs(((x1 - (-2 / (3 * np.pi))) + 0.5) % 1.0 - 0.5)
    return err_p < 1e-8 and err_x < 1e-8, f"max|p - exact| {err_p:.1e}, x2(1) err {err_x:.1e}"


def check_fourier_indices(cfg=None):
    rng = np.random.default_rng(7)
    a = 3 * np.pi
    field, V = MagneticField.constant(a), Potential.zero(1, 1.0)
    worst = 0.0
    for k in range(1, 5):
        for _ in range(3):
            K = k
            cos = np.zeros((K, 2))
            sin = np.zeros((K, 2))
            cos[k - 1], sin[k - 1] = rng.normal(size=2) * 0.2, rng.normal(size=2) * 0.2
            loop = FourierLoop(1.0, rng.random(2), cos, sin, np.zeros(2, dtype=int))
            worst = max(worst, abs(fourier_action(loop, a) - action(field, V, loop).total))
    table = []
    for m in (1, 3, 5):
        f = MagneticField.constant(m * np.pi)
        loop = FourierLoop.constant([0.3, 0.7])
        res = hessian_index(f, V, loop)
        mu0 = cz_index(f, V, loop, is_nondegenerate=False)
        table.append((m, res.morse_index, mu0))
    ok = worst < 1e-9 and table == [(1, 0, 1), (3, 2, 3), (5, 4, 5)]
    return ok, f"max action gap {worst:.1e}; (a/pi, index, mu0) {table}"


def check_unbounded(cfg=None):
    field, V = MagneticField.constant(3 * np.pi), Potential.zero(1, 1.0)
    errs = []
    for R in (0.1, 0.5, 1.0):
        S = action(field, V, FourierLoop.circle(R)).total
        errs.append(abs(S + np.pi ** 2 * R ** 2) / R ** 2)
    return max(errs) < 1e-7, f"max |S + pi^2 R^2| / R^2 = {max(errs):.1e}"


def check_prediction(cfg=None):
    pr = predict(MagneticField.constant(3 * np.pi, 3 * np.pi), 1.0)
    ok = (sum(pr.hf_ranks.values()) == 16 and pr.min_count == 5 and pr.k_total == 2
          and pr.hf_ranks == {-4: 1, -3: 4, -2: 6, -1: 4, 0: 1})
    return ok, f"ranks {pr.hf_ranks}, min {pr.min_count}, generic {pr.generic_count}"


def _flux_oracle(field: MagneticField, h, i) -> float:
    """Integral of the pulled-back field over f(s, t) = t h + s e_i, factor by factor."""
    h = np.asarray(h, dtype=float)
    total = 0.0
    for j, a in enumerate(field.a):
        e = np.zeros(2 * field.N)
        e[i] = 1.0
        ej, hj = e[2 * j:2 * j + 2], h[2 * j:2 * j + 2]
        jac = ej[0] * hj[1] - ej[1] * hj[0]
        if jac == 0.0:
            continue
        val, _ = dblquad(lambda t, s: float(a(np.array([t * hj[0] + s * ej[0],
                                                        t * hj[1] + s * ej[1]]))),
                         0.0, 1.0, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12)
        total += jac * val
    return total


def check_novikov(cfg=None):
    field = MagneticField.constant(3 * np.pi)
    phi0, r0 = novikov_data(field, (0, 0))
    phi, r = novikov_data(field, (1, 0))
    oracle = np.array([_flux_oracle(field, (1, 0), i) for i in range(2)])
    err = float(np.max(np.abs(phi - oracle)))
    ok = not np.any(phi0) and r0 == 0 and r == 1 and abs(abs(phi[1]) - 3 * np.pi) < 1e-12 and err < 1e-8
    return ok, f"h=0 rank {r0}; h=(1,0) phi={phi.tolist()} rank {r}, oracle err {err:.1e}"


# config-dependent checks -----------------------------------------------------

def _random_loop(rng, N, tau, modes=3) -> TorusLoop:
    base = rng.random(2 * N)
    amp = rng.normal(size=(modes, 2, 2 * N)) * 0.3 / np.arange(1, modes + 1)[:, None, None]

    def curve(t):
        th = 2 * np.pi * np.arange(1, modes + 1) * t / tau
        return base + np.cos(th) @ amp[:, 0] + np.sin(th) @ amp[:, 1]
    return TorusLoop.from_function(curve, tau, 96)


def check_transport(cfg, field, cert):
    rng = np.random.default_rng(11)
    worst = np.inf
    for _ in range(1000):
        loop = _random_loop(rng, field.N, cfg.tau)
        F = transport(field, loop, cfg.tau)
        v = rng.normal(size=2 * field.N)
        worst = min(worst, np.linalg.norm((F - np.eye(len(v))) @ v) / np.linalg.norm(v))
    return worst >= cert.epsilon * (1 - 1e-6), f"min |(F-I)v|/|v| = {worst:.6f} vs eps {cert.epsilon:.6f}"


def check_degeneracy(cfg, field, cert):
    rng = np.random.default_rng(5)
    V0 = Potential.zero(field.N, cfg.tau)
    dets = []
    for x0 in rng.random((8, 2 * field.N)):
        traj = integrate(field, V0, (x0, np.zeros(2 * field.N)), (0.0, cfg.tau), True)
        dets.append(abs(nondegeneracy(traj)[0]))
    h = np.zeros(2 * field.N, dtype=int)
    h[0] = 1
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = find_orbits(field, V0, cfg.tau, h, cfg.search)
    ok = max(dets) < 1e-6 and len(res) == 0
    return ok, f"max |det(M - I)| {max(dets):.1e} at constant orbits; class {h.tolist()}: {len(res)} orbits"


@dataclass
class _SearchCache:
    catalog: Optional[dict] = None
    results: Optional[list] = None
    seconds: float = 0.0


def _contractible(cache):
    for rec, res in zip(cache.catalog["classes"], cache.results):
        if not any(rec["h"]):
            return rec, res
    return None, None


def check_momentum(cfg, field, cert, cache):
    V = cfg.potential_model()
    g = V.grad_sup_bound()
    worst = -np.inf
    n = 0
    for res in cache.results:
        for o in res.orbits:
            n += 1
            bound = momentum_bound(cert, V, o.residual, g)
            worst = max(worst, float(np.max(np.abs(o.trajectory.momenta))) - bound)
    b0 = momentum_bound(cert, V, 0.0, g)
    return n > 0 and worst <= 1e-9, f"{n} orbits, bound {b0:.4f}, max excess {worst:.2e}"


def check_search(cfg, field, cert, cache):
    rec, res = _contractible(cache)
    if rec is None:
        return False, "no contractible class in config"
    pred = cache.catalog["prediction"]
    counts: dict = {}
    for o in rec["orbits"]:
        counts[o["cz_index"]] = counts.get(o["cz_index"], 0) + 1
    ranks = {int(j): r for j, r in pred["hf_ranks"].items()}
    nondeg = all(o["nondegenerate"] for o in rec["orbits"])
    audit = rec["audit"] is not None and rec["audit"]["passed"]
    ok = (len(rec["orbits"]) == pred["generic_count"] and nondeg and counts == ranks and audit
          and cache.seconds < 60.0)
    cz = sorted((o["cz_index"] for o in rec["orbits"]), key=lambda v: (v is None, v))
    return ok, (f"{len(rec['orbits'])} orbits, cz {cz}, ranks {ranks}, audit "
                f"{'PASS' if audit else 'FAIL'}, {cache.seconds:.1f} s")


def check_determinism(cfg, field, cert, cache):
    again, _ = run_search(cfg)
    same = dumps(again) == dumps(cache.catalog)
    return same, "byte-identical catalogs" if same else "catalogs differ"


def check_gradient(cfg, field):
    rng = np.random.default_rng(3)
    V = cfg.potential_model()
    worst = 0.0
    n2 = 2 * field.N
    for _ in range(50):
        K = 4
        loop = FourierLoop(cfg.tau, rng.random(n2), rng.normal(size=(K, n2)) * 0.05,
                           rng.normal(size=(K, n2)) * 0.05, np.zeros(n2, dtype=int))
        xi = FourierLoop(cfg.tau, rng.normal(size=n2), rng.normal(size=(K, n2)),
                         rng.normal(size=(K, n2)), np.zeros(n2, dtype=int))
        g = gradient(field, V, loop)
        lhs = l2_inner(g, xi)
        eps = 1e-5
        fd = (action(field, V, loop + xi.scaled(eps)).total
              - action(field, V, loop + xi.scaled(-eps)).total) / (2 * eps)
        worst = max(worst, abs(lhs - fd) / max(abs(fd), 1e-12))
    return worst < 1e-6, f"max rel. error {worst:.1e} over 50 loops"


FIXED = [
    (1, "non-resonance certificate", check_certificate),
    (3, "closed-form constant-field flow", check_closed_form_flow),
    (6, "Fourier action and constant-loop indices", check_fourier_indices),
    (7, "action unbounded below on circles", check_unbounded),
    (10, "rank table arithmetic for N=2", check_prediction),
    (11, "Novikov flux bookkeeping", check_novikov),
]


def run_suite(cfg, quick: bool = False, emit: Callable[[str], None] = print) -> list:
    """Run the checks; returns CheckResult rows (emitted as they finish)."""
    results: list = []

    def record(num, name, fn, *args):
        t0 = time.perf_counter()
        try:
            ok, detail = fn(*args)
            status = _ok(ok)
        except MagtorusError as exc:
            status, detail = FAIL, f"{type(exc).__name__}: {exc}"
        r = CheckResult(num, name, status, detail, time.perf_counter() - t0)
        results.append(r)
        emit(r.line())

    def skip(num, name, why):
        r = CheckResult(num, name, SKIP, why)
        results.append(r)
        emit(r.line())

    for num, name, fn in FIXED:
        record(num, name, fn, cfg)

    field = cfg.magnetic_field()
    try:
        cert = certify_nonresonance(field, cfg.tau)
    except Resonant as exc:
        cert, why = None, f"field is resonant ({exc})"
    record(8, "action gradient vs central differences", check_gradient, cfg, field)

    dependent = [
        (2, "transport bounded away from identity", check_transport, False),
        (4, "degeneracy and emptiness at V = 0", check_degeneracy, True),
        (5, "a priori momentum bound", check_momentum, True),
        (9, "orbit count and Morse audit", check_search, True),
        (12, "determinism", check_determinism, True),
    ]
    cache = _SearchCache()
    for num, name, fn, needs_search in dependent:
        if cert is None:
            skip(num, name, why)
            continue
        if needs_search and quick:
            skip(num, name, "quick mode: no orbit search")
            continue
        if num in (5, 9, 12) and cache.catalog is None:
            t0 = time.perf_counter()
            cache.catalog, cache.results = run_search(cfg)
            cache.seconds = time.perf_counter() - t0
        if num in (5, 9, 12):
            record(num, name, fn, cfg, field, cert, cache)
        else:
            record(num, name, fn, cfg, field, cert)
    results.sort(key=lambda r: r.number)
    return results


def summary_table(results: list) -> str:
    w = max(len(r.name) for r in results)
    lines = [f"{'#':>3}  {'check':<{w}}  status"]
    lines += [f"{r.number:>3}  {r.name:<{w}}  {r.status}" for r in results]
    return "\n".join(lines)


def exit_code(results: list) -> int:
    if any(r.status == FAIL for r in results):
        return 3
    if any(r.status == SKIP and r.detail.startswith("field is resonant") for r in results):
        return 2
    return 0
