"""Flat torus T^{2N} = R^{2N} / Z^{2N}: wrapping, lifting and winding classes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import AmbiguousLift


def wrap(v) -> np.ndarray:
    """Reduce coordinates mod 1 into [0, 1)."""
    v = np.asarray(v, dtype=float)
    out = np.mod(v, 1.0)
    # np.mod can return exactly 1.0 for tiny negative inputs
    out[out >= 1.0] = 0.0
    return out


def torus_delta(a, b) -> np.ndarray:
    """Shortest displacement from b to a on the torus, entries in [-1/2, 1/2)."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return d - np.floor(d + 0.5)


def torus_distance(a, b) -> np.ndarray:
    return np.linalg.norm(torus_delta(a, b), axis=-1)


@dataclass(frozen=True, eq=False)
class TorusLoop:
    """A tau-periodic loop sampled at t_i = i*tau/M, i = 0..M-1.

    ``positions`` are points of the torus (wrapped on construction). ``momenta``
    is optional and only needed by the phase-space routines (residuals).
    """

    tau: float
    positions: np.ndarray
    momenta: Optional[np.ndarray] = None
    winding: np.ndarray = field(init=False)

    def __post_init__(self):
        pos = wrap(np.atleast_2d(np.asarray(self.positions, dtype=float)))
        if pos.shape[0] < 8:
            raise ValueError("a TorusLoop needs at least 8 samples")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        object.__setattr__(self, "positions", pos)
        if self.momenta is not None:
            mom = np.asarray(self.momenta, dtype=float).reshape(pos.shape)
            object.__setattr__(self, "momenta", mom)
        lifted = _lift_samples(pos)
        object.__setattr__(self, "winding", np.rint(lifted[-1] - lifted[0]).astype(np.int64))

    @classmethod
    def from_function(cls, curve: Callable[[float], np.ndarray], tau: float, M: int,
                      momentum: Optional[Callable[[float], np.ndarray]] = None) -> "TorusLoop":
        ts = tau * np.arange(M) / M
        pos = np.array([curve(t) for t in ts], dtype=float)
        mom = None if momentum is None else np.array([momentum(t) for t in ts], dtype=float)
        return cls(tau, pos, mom)

    @property
    def M(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.tau * np.arange(self.M) / self.M

    def reversed(self) -> "TorusLoop":
        idx = (-np.arange(self.M)) % self.M
        mom = None if self.momenta is None else -self.momenta[idx]
        return TorusLoop(self.tau, self.positions[idx], mom)

    def refined(self) -> "TorusLoop":
        """Double the sample count by linear interpolation of the lift."""
        lifted = lift(self)
        mids = 0.5 * (lifted[:-1] + lifted[1:])
        pos = np.empty((2 * self.M, self.dim))
        pos[0::2] = lifted[:-1]
        pos[1::2] = mids
        mom = None
        if self.momenta is not None:
            nxt = np.roll(self.momenta, -1, axis=0)
            mom = np.empty_like(pos)
            mom[0::2] = self.momenta
            mom[1::2] = 0.5 * (self.momenta + nxt)
        return TorusLoop(self.tau, pos, mom)


def _lift_samples(pos: np.ndarray) -> np.ndarray:
    closed = np.vstack([pos, pos[:1]])
    jumps = np.diff(closed, axis=0)
    steps = jumps - np.rint(jumps)
    if np.any(np.abs(steps) >= 0.5):
        raise AmbiguousLift("consecutive samples differ by >= 1/2 in some coordinate")
    out = np.empty_like(closed)
    out[0] = closed[0]
    out[1:] = closed[0] + np.cumsum(steps, axis=0)
    return out


def lift(loop: TorusLoop) -> np.ndarray:
    """Continuous lift of the samples, with the closing sample appended.

    Returns an (M+1, 2N) array whose last row equals first row + winding.
    """
    return _lift_samples(loop.positions)


def winding_class(loop: TorusLoop) -> np.ndarray:
    return loop.winding.copy()
