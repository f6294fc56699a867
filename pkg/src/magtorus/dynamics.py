"""Twisted Hamiltonian flow of H = |p|^2/2 + V(t, x) on T^*T^{2N}.

Equations of motion: x' = p, p' = -Y(x) p - grad V(t, x).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import NotPeriodic, StepSizeUnderflow
from .fields import MagneticField, NonResCertificate, apply_lorentz
from .potential import Potential
from .torus import torus_delta, wrap

DEFAULT_TOL = 1e-10
DEG_THRESHOLD = 1e-6


def _packed_field(field: MagneticField) -> tuple[np.ndarray, np.ndarray]:
    fconst = np.array([p.constant for p in field.a], dtype=float)
    rows = [[j, *k, c, s] for j, p in enumerate(field.a) for k, c, s in p.modes]
    fmodes = np.array(rows, dtype=float) if rows else np.zeros((0, 5))
    return fconst, fmodes


@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", wrap(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float).copy())


@dataclass(frozen=True, eq=False)
class PhaseTrajectory:
    """Integrated path. ``lifted`` keeps the unwrapped positions."""

    times: np.ndarray
    lifted: np.ndarray
    momenta: np.ndarray
    monodromy: Optional[np.ndarray] = None
    steps: int = 0

    @property
    def positions(self) -> np.ndarray:
        return wrap(self.lifted)

    @property
    def states(self) -> list:
        return [PhasePoint(x, p) for x, p in zip(self.positions, self.momenta)]

    @property
    def final_monodromy(self) -> np.ndarray:
        if self.monodromy is None:
            raise ValueError("trajectory was integrated without monodromy")
        return self.monodromy[-1]


def vector_field(field: MagneticField, V: Potential, t: float, w: PhasePoint):
    """Returns (dx, dp) at time t."""
    x, p = np.asarray(w.x, dtype=float), np.asarray(w.p, dtype=float)
    dp = -apply_lorentz(field, x, p) - V.gradient(t, x)
    return p.copy(), dp


def integrate(field: MagneticField, V: Potential, w0, t_span, with_monodromy: bool = False,
              tol: float = DEFAULT_TOL, n_out: int = 64, max_step: Optional[float] = None,
              lifted_start=None, max_steps: int = 2_000_000) -> PhaseTrajectory:
    """Dormand-Prince 5(4) integration with output on a uniform grid.

    ``w0`` is a PhasePoint or a (x, p) pair. ``lifted_start`` overrides the
    starting position without wrapping (used by shooting on the universal cover).
    """
    if not 1e-13 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-13, 1e-6]")
    if isinstance(w0, PhasePoint):
        x0, p0 = w0.x, w0.p
    else:
        x0, p0 = (np.asarray(v, dtype=float) for v in w0)
    if lifted_start is not None:
        x0 = np.asarray(lifted_start, dtype=float)
    n2 = 2 * field.N
    if x0.shape != (n2,) or p0.shape != (n2,):
        raise ValueError(f"state must have {n2} position and momentum entries")
    t0, t1 = map(float, t_span)
    if max_step is None:
        max_step = V.tau / 64
    t_out = np.linspace(t0, t1, n_out + 1)
    y0 = np.concatenate([x0, p0])
    if with_monodromy:
        y0 = np.concatenate([y0, np.eye(2 * n2).ravel()])
    fconst, fmodes = _packed_field(field)
    Y, status, steps = _kernels.dopri_path(y0, t_out, tol, max_step, fconst, fmodes, V.packed(),
                                           V.tau, n2, with_monodromy, max_steps)
    if status != 0:
        raise StepSizeUnderflow(f"integration failed with status {status} after {steps} steps")
    mono = None
    if with_monodromy:
        mono = Y[:, 2 * n2:].reshape(-1, 2 * n2, 2 * n2)
    return PhaseTrajectory(t_out, Y[:, :n2].copy(), Y[:, n2:2 * n2].copy(), mono, steps)


def flow_map(field, V, x0, p0, tau, tol=DEFAULT_TOL, with_monodromy=True):
    """Lifted time-tau map and (optionally) its Jacobian."""
    n2 = 2 * field.N
    y0 = np.concatenate([x0, p0])
    if with_monodromy:
        y0 = np.concatenate([y0, np.eye(2 * n2).ravel()])
    fconst, fmodes = _packed_field(field)
    Y, status, steps = _kernels.dopri_path(y0, np.array([0.0, tau]), tol, V.tau / 64, fconst,
                                           fmodes, V.packed(), V.tau, n2, with_monodromy,
                                           2_000_000)
    if status != 0:
        raise StepSizeUnderflow(f"integration failed with status {status}")
    end = Y[-1]
    M = end[2 * n2:].reshape(2 * n2, 2 * n2) if with_monodromy else None
    return end[:n2], end[n2:2 * n2], M


def endpoint_gap(traj: PhaseTrajectory) -> float:
    """Phase-space distance between the start and end states, positions mod 1."""
    dx = torus_delta(traj.lifted[-1], traj.lifted[0])
    dp = traj.momenta[-1] - traj.momenta[0]
    return float(np.sqrt(np.sum(dx ** 2) + np.sum(dp ** 2)))


def nondegeneracy(traj: PhaseTrajectory, threshold: float = DEG_THRESHOLD,
                  periodic_tol: float = 1e-6) -> tuple[float, bool]:
    """(det(M(tau) - Id), |det| > threshold) for a periodic trajectory."""
    if traj.monodromy is None:
        raise ValueError("trajectory carries no monodromy")
    gap = endpoint_gap(traj)
    if gap >= periodic_tol:
        raise NotPeriodic(f"endpoint gap {gap:.3g} exceeds {periodic_tol:g}")
    M = traj.final_monodromy
    det = float(np.linalg.det(M - np.eye(M.shape[0])))
    return det, abs(det) > threshold


def _spectral_derivative(samples: np.ndarray, tau: float) -> np.ndarray:
    M = samples.shape[0]
    freqs = np.fft.fftfreq(M, d=tau / M) * 2 * np.pi
    if M % 2 == 0:
        freqs[M // 2] = 0.0
    return np.real(np.fft.ifft(1j * freqs[:, None] * np.fft.fft(samples, axis=0), axis=0))


def residual(field: MagneticField, V: Potential, lifted_x, p, tau: float,
             winding=None) -> float:
    """L^2 norm over [0, tau] of (x' - p, p' + Y(x) p + grad V(t, x)).

    ``lifted_x`` and ``p`` hold M >= 64 uniform samples on [0, tau) (no closing
    sample). Derivatives are spectral; the winding part h t / tau of the lift is
    handled separately.
    """
    x = np.asarray(lifted_x, dtype=float)
    p = np.asarray(p, dtype=float)
    M = x.shape[0]
    if M < 64:
        raise ValueError("residual needs at least 64 samples")
    if winding is None:
        step = torus_delta(x[0], x[-1])
        winding = np.rint(x[-1] + step - x[0])
    h = np.asarray(winding, dtype=float)
    ts = tau * np.arange(M) / M
    periodic = x - np.outer(ts, h) / tau
    dx = _spectral_derivative(periodic, tau) + h / tau
    dp = _spectral_derivative(p, tau)
    r1 = dx - p
    r2 = dp + apply_lorentz(field, x, p) + V.gradient(ts, x)
    return float(np.sqrt(tau / M * (np.sum(r1 ** 2) + np.sum(r2 ** 2))))


def trajectory_residual(field, V, traj: PhaseTrajectory) -> float:
    """Residual of a one-period trajectory (its closing sample is dropped)."""
    tau = traj.times[-1] - traj.times[0]
    h = np.rint(traj.lifted[-1] - traj.lifted[0])
    return residual(field, V, traj.lifted[:-1], traj.momenta[:-1], tau, winding=h)


def momentum_bound(cert: NonResCertificate, V: Potential, delta: float,
                   grad_sup: Optional[float] = None) -> float:
    """A priori sup-norm bound on p for delta-approximate periodic orbits."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    tau = cert.tau
    g = V.grad_sup_bound() if grad_sup is None else grad_sup
    return (np.sqrt(tau) + np.sqrt(2 * tau) / cert.epsilon) * (delta + np.sqrt(tau) * g)


def energy(V: Potential, t, x, p) -> np.ndarray:
    return 0.5 * np.sum(np.asarray(p) ** 2, axis=-1) + V.value(t, x)
