"""Periodic-orbit search per homotopy class and the Floer-rank bookkeeping."""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from math import comb
from typing import Optional, Sequence

import mpmath
import numpy as np
from scipy.stats import qmc

from .dynamics import (DEFAULT_TOL, PhasePoint, PhaseTrajectory, endpoint_gap, flow_map,
                       integrate, momentum_bound, nondegeneracy, trajectory_residual)
from .errors import DegenerateOrbitPresent, MagtorusError, Resonant
from .fields import MagneticField, NonResCertificate, certify_nonresonance
from .loopspace import FourierLoop, action, hessian_index
from .potential import Potential
from .torus import torus_delta, wrap


@dataclass(frozen=True)
class SearchConfig:
    seed: int = 42
    budget: int = 200
    orbit_tol: float = 1e-8
    integrator_tol: float = DEFAULT_TOL
    momentum_margin: float = 0.25
    newton_iters: int = 40
    damping_halvings: int = 20
    dedup_tol: float = 1e-4
    n_samples: int = 128
    threads: Optional[int] = None


@dataclass(eq=False)
class Orbit:
    """A periodic orbit found by shooting.

    ``mu_cz`` is the Conley-Zehnder index in the Lagrangian normalisation
    (equal to the Morse index of the action for nondegenerate orbits).
    ``cz_index`` is the degree used by the Floer rank table, 2N - mu_cz.
    """

    initial: PhasePoint
    winding: np.ndarray
    action_total: Optional[float]
    residual: float
    det_m: float
    nondegenerate: bool
    trajectory: PhaseTrajectory
    gap: float
    seed_index: int
    morse_index: Optional[int] = None
    nullity: Optional[int] = None
    mu_cz: Optional[int] = None
    cz_index: Optional[int] = None
    max_p: float = 0.0
    within_momentum_bound: Optional[bool] = None


@dataclass
class SearchResult:
    h: np.ndarray
    orbits: list
    critical_manifold: bool = False
    n_seeds: int = 0
    n_converged: int = 0
    certified: bool = True
    notes: list = dc_field(default_factory=list)

    def __len__(self):
        return len(self.orbits)

    def __iter__(self):
        return iter(self.orbits)


def worker_count(cfg: SearchConfig) -> int:
    n = cfg.threads if cfg.threads is not None else (os.cpu_count() or 1)
    env = os.environ.get("MAGTORUS_THREADS")
    if env:
        n = min(n, max(1, int(env)))
    return max(1, n)


def seeds(N: int, budget: int, seed: int, radius: float) -> np.ndarray:
    """Scrambled Halton points in T^{2N} x {|p| <= radius}; shape (budget, 4N)."""
    u = qmc.Halton(d=4 * N, scramble=True, seed=seed).random(budget)
    x = u[:, :2 * N]
    v = 2.0 * u[:, 2 * N:] - 1.0
    nrm = np.linalg.norm(v, axis=1)
    sup = np.max(np.abs(v), axis=1)
    scale = np.divide(sup, nrm, out=np.zeros_like(nrm), where=nrm > 0)
    p = radius * v * scale[:, None]
    return np.hstack([x, p])


def _shoot(field, V, tau, h, z0, cfg: SearchConfig):
    """Damped Newton on G(x, p) = phi^tau(x, p) - (x + h, p) over the universal cover."""
    n2 = 2 * field.N
    z = z0.copy()

    def residual_of(z):
        xe, pe, M = flow_map(field, V, z[:n2], z[n2:], tau, cfg.integrator_tol)
        return np.concatenate([xe - z[:n2] - h, pe - z[n2:]]), M

    try:
        G, M = residual_of(z)
        nG = np.linalg.norm(G)
        for _ in range(cfg.newton_iters):
            if nG < cfg.orbit_tol:
                return z
            step = np.linalg.lstsq(M - np.eye(2 * n2), -G, rcond=1e-12)[0]
            lam = 1.0
            for _ in range(cfg.damping_halvings):
                trial = z + lam * step
                Gt, Mt = residual_of(trial)
                nt = np.linalg.norm(Gt)
                if nt < nG:
                    break
                lam *= 0.5
            else:
                return None
            z, G, M, nG = trial, Gt, Mt, nt
        return z if nG < cfg.orbit_tol else None
    except MagtorusError:
        return None


def orbit_distance(a: Orbit, b: Orbit, shifts: int = 64) -> float:
    """Min over time shifts of the max phase-space distance between sample sets."""
    xa, pa = a.trajectory.positions[:-1], a.trajectory.momenta[:-1]
    xb, pb = b.trajectory.positions[:-1], b.trajectory.momenta[:-1]
    M = xa.shape[0]
    stride = max(1, M // shifts)
    best = np.inf
    for s in range(0, M, stride):
        xs, ps = np.roll(xb, -s, axis=0), np.roll(pb, -s, axis=0)
        d = np.sqrt(np.sum(torus_delta(xa, xs) ** 2, axis=1) + np.sum((pa - ps) ** 2, axis=1))
        best = min(best, float(d.max()))
    return best


def _fill_torus(points: np.ndarray, occupancy: float = 0.9) -> bool:
    n, d = points.shape
    cells = max(2, int(n ** (1.0 / d) / 2))
    idx = np.floor(wrap(points) * cells).astype(int)
    occupied = len({tuple(r) for r in idx})
    return occupied >= occupancy * cells ** d


def _build_orbit(field, V, tau, h, z, seed_index, cfg, cert, grad_sup=None) -> Orbit:
    n2 = 2 * field.N
    x0 = z[:n2]
    z = np.concatenate([np.where(np.abs(x0 - np.rint(x0)) < 1e-12, np.rint(x0), x0), z[n2:]])
    traj = integrate(field, V, (wrap(z[:n2]), z[n2:]), (0.0, tau), True, cfg.integrator_tol,
                     n_out=cfg.n_samples, lifted_start=wrap(z[:n2]))
    gap = endpoint_gap(traj)
    res = trajectory_residual(field, V, traj)
    try:
        det, nondeg = nondegeneracy(traj, periodic_tol=max(1e-6, 10 * cfg.orbit_tol))
    except MagtorusError:
        det, nondeg = float("nan"), False
    max_p = float(np.max(np.linalg.norm(traj.momenta, axis=1)))
    within = None
    if cert is not None:
        within = bool(np.max(np.abs(traj.momenta)) <= momentum_bound(cert, V, res, grad_sup) + 1e-9)
    return Orbit(PhasePoint(z[:n2], z[n2:]), np.asarray(h, dtype=np.int64).copy(), None, res,
                 det, nondeg, traj, gap, seed_index, max_p=max_p, within_momentum_bound=within)


def orbit_loop(orbit: Orbit) -> FourierLoop:
    traj = orbit.trajectory
    M = traj.lifted.shape[0] - 1
    tau = traj.times[-1] - traj.times[0]
    return FourierLoop.fit(traj.lifted[:-1], tau, M // 4 - 1, winding=orbit.winding)


def classify(field, V, orbit: Orbit, grad_tol: float = 1e-6) -> Orbit:
    """Attach the action (contractible orbits) and the indices."""
    loop = orbit_loop(orbit)
    if not np.any(orbit.winding):
        orbit.action_total = action(field, V, loop).total
    try:
        res = hessian_index(field, V, loop, grad_tol=grad_tol)
    except MagtorusError:
        return orbit
    orbit.morse_index, orbit.nullity = res.morse_index, res.nullity
    if orbit.nondegenerate and res.nullity == 0:
        orbit.mu_cz = res.morse_index
        orbit.cz_index = 2 * field.N - orbit.mu_cz
    elif not orbit.nondegenerate and res.nullity == 2 * field.N:
        orbit.mu_cz = res.morse_index + res.nullity // 2
    return orbit


def _sort_key(o: Orbit):
    act = (0, round(o.action_total, 10)) if o.action_total is not None else (1, 0.0)
    return act + tuple(np.round(o.initial.x, 10)) + tuple(np.round(o.initial.p, 10))


def find_orbits(field: MagneticField, V: Potential, tau: float, h: Sequence[int],
                cfg: SearchConfig = SearchConfig()) -> SearchResult:
    """Multi-start shooting for tau-periodic orbits in the homotopy class h."""
    N = field.N
    h = np.asarray(h, dtype=float)
    if h.shape != (2 * N,):
        raise ValueError(f"class must have {2 * N} entries")
    notes = []
    try:
        cert = certify_nonresonance(field, tau)
        grad_sup = V.grad_sup_bound()
        radius = momentum_bound(cert, V, 0.0, grad_sup) + cfg.momentum_margin
    except Resonant as exc:
        warnings.warn(f"searching without a non-resonance certificate: {exc}")
        notes.append("field not certified non-resonant; momentum bound unavailable")
        cert = grad_sup = None
        radius = 1.0 + cfg.momentum_margin
    starts = seeds(N, cfg.budget, cfg.seed, radius)
    with ThreadPoolExecutor(max_workers=worker_count(cfg)) as pool:
        roots = list(pool.map(lambda z: _shoot(field, V, tau, h, z, cfg), starts))
    hits = [(i, z) for i, z in enumerate(roots) if z is not None]
    result = SearchResult(h.astype(np.int64), [], n_seeds=len(starts), n_converged=len(hits),
                          certified=cert is not None, notes=notes)
    if not hits:
        return result

    orbits = [_build_orbit(field, V, tau, h, z, i, cfg, cert, grad_sup) for i, z in hits]
    degenerate = [o for o in orbits if not o.nondegenerate]
    if (len(degenerate) > 0.25 * len(orbits)
            and _fill_torus(np.array([o.initial.x for o in degenerate]))):
        result.critical_manifold = True
        result.notes.append(
            f"{len(degenerate)} of {len(orbits)} converged seeds are degenerate and fill the torus: "
            "Morse-Bott critical manifold, one representative kept")
        orbits = [o for o in orbits if o.nondegenerate] + [min(degenerate, key=_sort_key)]

    kept: list[Orbit] = []
    for o in orbits:
        if all(orbit_distance(o, k) >= cfg.dedup_tol for k in kept):
            kept.append(o)
    for o in kept:
        classify(field, V, o)
    result.orbits = sorted(kept, key=_sort_key)
    return result


# predictions --------------------------------------------------------------

def _abs_k(k: int) -> int:
    """Index with 2 pi k < |b| < 2 pi (k + 1) from the signed bracket."""
    return k if k >= 0 else -k - 1


@dataclass(frozen=True)
class Prediction:
    cert: NonResCertificate
    k_total: int
    hf_ranks: dict
    min_count: int
    generic_count: int
    novikov: dict = dc_field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.cert.N

    def rank(self, degree: int, h=None) -> int:
        if h is not None and np.any(np.asarray(h) != 0):
            return 0
        return self.hf_ranks.get(degree, 0)


def hf_ranks(N: int, k_total: int) -> dict:
    return {j: comb(2 * N, j + 2 * k_total) for j in range(-2 * k_total, 2 * N - 2 * k_total + 1)}


def predict(field: MagneticField, tau: float, N: Optional[int] = None,
            classes: Sequence[Sequence[int]] = ()) -> Prediction:
    """Floer rank table and orbit-count lower bounds for a non-resonant field."""
    if N is not None and N != field.N:
        raise ValueError("N does not match the field")
    cert = certify_nonresonance(field, tau)
    N = field.N
    k_total = sum(_abs_k(k) for k in cert.k)
    nov = {tuple(int(v) for v in h): novikov_data(field, h) for h in classes}
    return Prediction(cert, k_total, hf_ranks(N, k_total), 2 * N + 1, 2 ** (2 * N), nov)


def _rational_rank(values, tol: float = 1e-9, maxcoeff: int = 10_000) -> int:
    basis: list = []
    for v in values:
        if abs(v) <= tol:
            continue
        if not basis:
            basis.append(v)
            continue
        with mpmath.workdps(30):
            rel = mpmath.pslq([mpmath.mpf(b) for b in basis] + [mpmath.mpf(v)],
                              tol=mpmath.mpf(tol), maxcoeff=maxcoeff, maxsteps=10_000)
        if rel is None or rel[-1] == 0:
            basis.append(v)
    return len(basis)


def novikov_data(field: MagneticField, h: Sequence[int]) -> tuple[np.ndarray, int]:
    """Flux homomorphism on the translation generators of pi_1 of the class-h loop space.

    Generator i is the torus f_i(s, t) = gamma_h(t) + s e_i; its value is
    sum_j flux_j * mu_j(e_i, h).
    """
    h = np.asarray(h, dtype=float)
    n2 = 2 * field.N
    if h.shape != (n2,):
        raise ValueError(f"class must have {n2} entries")
    phi = np.zeros(n2)
    for i in range(n2):
        j = i // 2
        e = np.zeros(2)
        e[i % 2] = 1.0
        hj = h[2 * j:2 * j + 2]
        phi[i] = field.fluxes[j] * (e[0] * hj[1] - e[1] * hj[0])
    return phi, _rational_rank(phi)


# audits --------------------------------------------------------------------

@dataclass
class AuditReport:
    per_degree: dict
    total_count: int
    total_rank: int
    passed: bool

    def failures(self) -> list:
        return [j for j, (_, _, ok) in sorted(self.per_degree.items()) if not ok]

    def as_dict(self) -> dict:
        return {"passed": self.passed, "total_count": self.total_count,
                "total_rank": self.total_rank,
                "per_degree": {str(j): {"count": c, "rank": r, "pass": ok}
                               for j, (c, r, ok) in sorted(self.per_degree.items())}}


def audit_counts(counts: dict, ranks: dict) -> AuditReport:
    """Weak Morse inequalities c_j >= rank_j per degree, and in total."""
    degrees = sorted(set(counts) | set(ranks))
    per = {}
    for j in degrees:
        c, r = int(counts.get(j, 0)), int(ranks.get(j, 0))
        per[j] = (c, r, c >= r)
    tc, tr = sum(counts.values()), sum(ranks.values())
    return AuditReport(per, int(tc), int(tr), all(ok for _, _, ok in per.values()) and tc >= tr)


def morse_audit(orbits: Sequence[Orbit], prediction: Prediction) -> AuditReport:
    counts: dict = {}
    for o in orbits:
        if not o.nondegenerate or o.cz_index is None:
            raise DegenerateOrbitPresent("audit needs nondegenerate orbits with indices")
        counts[o.cz_index] = counts.get(o.cz_index, 0) + 1
    return audit_counts(counts, prediction.hf_ranks)


def theorem_b_check(orbits: Sequence[Orbit], h: Sequence[int]) -> dict:
    """Flag a lone nondegenerate orbit in a class h != 0 (a second one must exist)."""
    if not np.any(np.asarray(h)):
        raise ValueError("the check applies to non-contractible classes only")
    orbits = list(orbits)
    if len(orbits) == 1 and orbits[0].nondegenerate:
        return {"status": "VIOLATION",
                "reason": "one nondegenerate orbit found but at least two must exist; "
                          "the search is incomplete"}
    if not orbits:
        reason = "no orbits found; hypothesis not met"
    elif len(orbits) == 1:
        reason = "single orbit is degenerate; hypothesis not met"
    else:
        reason = f"{len(orbits)} orbits found"
    return {"status": "consistent", "reason": reason}
