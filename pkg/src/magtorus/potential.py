"""Time-periodic potentials V(t, x) on S_tau x T^{2N}."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trig import TWO_PI, TrigPoly


@dataclass(frozen=True)
class PotentialTerm:
    """cos(2 pi time_m t / tau + phase) * space(x)."""

    time_m: int
    phase: float
    space: TrigPoly

    @property
    def autonomous(self) -> bool:
        return self.time_m == 0


@dataclass(frozen=True)
class Potential:
    N: int
    tau: float
    terms: tuple = ()

    def __post_init__(self):
        terms = tuple(self.terms)
        for term in terms:
            if term.space.dim != 2 * self.N:
                raise ValueError("potential term dimension does not match 2N")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "tau", float(self.tau))

    @classmethod
    def zero(cls, N: int, tau: float) -> "Potential":
        return cls(N, tau, ())

    @classmethod
    def autonomous(cls, space: TrigPoly, tau: float) -> "Potential":
        return cls(space.dim // 2, tau, (PotentialTerm(0, 0.0, space),))

    @property
    def is_zero(self) -> bool:
        return all(t.space.is_constant for t in self.terms)

    @property
    def is_autonomous(self) -> bool:
        return all(t.autonomous for t in self.terms)

    def _time_factor(self, term: PotentialTerm, t):
        return np.cos(TWO_PI * term.time_m * np.asarray(t, dtype=float) / self.tau + term.phase)

    def value(self, t, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.broadcast_shapes(np.shape(t), x.shape[:-1]))
        for term in self.terms:
            out = out + self._time_factor(term, t) * term.space(x)
        return out

    def gradient(self, t, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.broadcast_shapes(np.shape(t) + (1,), x.shape))
        for term in self.terms:
            out = out + np.asarray(self._time_factor(term, t))[..., None] * term.space.gradient(x)
        return out

    def hessian(self, t, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        out = np.zeros(np.broadcast_shapes(np.shape(t) + (1, 1), x.shape[:-1] + (d, d)))
        for term in self.terms:
            out = out + np.asarray(self._time_factor(term, t))[..., None, None] * term.space.hessian(x)
        return out

    def grad_sup_bound(self) -> float:
        """Certified upper bound of |grad V| over S_tau x T^{2N}.

        Autonomous terms are merged and bounded by grid refinement; each
        time-dependent term adds the sum of its mode gradient amplitudes.
        """
        merged = {}
        extra = 0.0
        for term in self.terms:
            if term.autonomous:
                w = np.cos(term.phase)
                for k, c, s in term.space.modes:
                    c0, s0 = merged.get(k, (0.0, 0.0))
                    merged[k] = (c0 + w * c, s0 + w * s)
            else:
                kv = term.space.wavevectors
                if len(kv):
                    extra += TWO_PI * float(np.sum(np.linalg.norm(kv, axis=1)
                                                   * np.hypot(*term.space.coefficients.T)))
        auto = TrigPoly(2 * self.N, 0.0, tuple((k, c, s) for k, (c, s) in merged.items()))
        return auto.gradient_norm_bound() + extra

    def packed(self) -> np.ndarray:
        """Rows [time_m, phase, c_cos, c_sin, k_1..k_2N] for the compiled kernels.

        Spatial constants are dropped (no force).
        """
        rows = []
        for term in self.terms:
            for k, c, s in term.space.modes:
                rows.append([term.time_m, term.phase, c, s, *k])
        if not rows:
            return np.zeros((0, 4 + 2 * self.N))
        return np.array(rows, dtype=float)
