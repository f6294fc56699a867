"""Real trigonometric polynomials on the unit torus and certified extrema."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TrigPoly:
    """c0 + sum c_cos cos(2 pi k.x) + c_sin sin(2 pi k.x) over integer wave vectors k.

    ``modes`` is a tuple of (k, c_cos, c_sin) with k a tuple of ints, k != 0,
    keys unique.
    """

    dim: int
    constant: float = 0.0
    modes: tuple = ()

    def __post_init__(self):
        norm = []
        seen = set()
        for k, c, s in self.modes:
            k = tuple(int(v) for v in k)
            if len(k) != self.dim:
                raise ValueError(f"wave vector {k} does not have length {self.dim}")
            if not any(k):
                raise ValueError("the zero mode belongs in `constant`")
            if k in seen:
                raise ValueError(f"duplicate mode {k}")
            seen.add(k)
            norm.append((k, float(c), float(s)))
        object.__setattr__(self, "modes", tuple(norm))
        object.__setattr__(self, "constant", float(self.constant))

    @classmethod
    def from_rows(cls, dim: int, constant: float, rows: Sequence[Sequence[float]]) -> "TrigPoly":
        """Build from rows [k_1, ..., k_dim, c_cos, c_sin]."""
        modes = [(tuple(int(v) for v in r[:dim]), r[dim], r[dim + 1]) for r in rows]
        return cls(dim, constant, tuple(modes))

    def rows(self) -> list:
        return [list(k) + [c, s] for k, c, s in self.modes]

    @property
    def wavevectors(self) -> np.ndarray:
        if not self.modes:
            return np.zeros((0, self.dim))
        return np.array([k for k, _, _ in self.modes], dtype=float)

    @property
    def coefficients(self) -> np.ndarray:
        if not self.modes:
            return np.zeros((0, 2))
        return np.array([(c, s) for _, c, s in self.modes], dtype=float)

    @property
    def is_constant(self) -> bool:
        return all(c == 0.0 and s == 0.0 for _, c, s in self.modes)

    def _phases(self, x):
        x = np.asarray(x, dtype=float)
        return TWO_PI * (x @ self.wavevectors.T)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape[:-1], self.constant)
        if not self.modes:
            return out
        th = self._phases(x)
        cs = self.coefficients
        return out + np.cos(th) @ cs[:, 0] + np.sin(th) @ cs[:, 1]

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.modes:
            return np.zeros(x.shape)
        th = self._phases(x)
        cs = self.coefficients
        amp = -np.sin(th) * cs[:, 0] + np.cos(th) * cs[:, 1]
        return TWO_PI * (amp @ self.wavevectors)

    def hessian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        kv = self.wavevectors
        if not self.modes:
            return np.zeros(x.shape + (self.dim,))
        th = self._phases(x)
        cs = self.coefficients
        amp = -(np.cos(th) * cs[:, 0] + np.sin(th) * cs[:, 1]) * TWO_PI ** 2
        return np.einsum("...m,mi,mj->...ij", amp, kv, kv)

    def lipschitz(self) -> float:
        """Euclidean Lipschitz constant of the polynomial."""
        if not self.modes:
            return 0.0
        kv = np.linalg.norm(self.wavevectors, axis=1)
        return float(TWO_PI * np.sum(kv * np.hypot(*self.coefficients.T)))

    def gradient_lipschitz(self) -> float:
        """Lipschitz constant of x -> |grad f(x)| (bound on the Hessian norm)."""
        if not self.modes:
            return 0.0
        kv = np.sum(self.wavevectors ** 2, axis=1)
        return float(TWO_PI ** 2 * np.sum(kv * np.hypot(*self.coefficients.T)))

    def bounds(self, grid: int = 256, refine_rounds: int = 0) -> tuple[float, float]:
        """Certified (lower, upper) bounds of the polynomial over the torus.

        With the default ``refine_rounds=0`` this is plain grid evaluation plus
        the Lipschitz slack of a grid cell.
        """
        if self.is_constant:
            return self.constant, self.constant
        lip = self.lipschitz()
        lo = -certified_max(lambda x: -self(x), lip, self.dim, grid, max_rounds=refine_rounds)
        hi = certified_max(self, lip, self.dim, grid, max_rounds=refine_rounds)
        return lo, hi

    def gradient_norm_bound(self, grid: int = 256) -> float:
        """Certified upper bound of |grad f| over the torus."""
        if self.is_constant:
            return 0.0
        return certified_max(lambda x: np.linalg.norm(self.gradient(x), axis=-1),
                             self.gradient_lipschitz(), self.dim, grid)


def default_grid(dim: int) -> int:
    if dim <= 2:
        return 256
    return max(8, int((2.0 ** 22) ** (1.0 / dim)))


def certified_max(f: Callable[[np.ndarray], np.ndarray], lipschitz: float, dim: int,
                  grid: int, abs_tol: float = 1e-6, max_rounds: int = 60,
                  chunk: int = 1 << 18) -> float:
    """Upper bound of a Lipschitz function on the unit torus.

    Starts from a uniform grid of cells, bounds each cell by its centre value
    plus ``lipschitz * half-diagonal``, and bisects the cells that may still
    contain the maximum until the slack drops below ``abs_tol``. The returned
    value is always >= the true supremum.
    """
    if dim > 2:
        grid = min(grid, default_grid(dim))
    h = 1.0 / grid
    total = grid ** dim
    vals_all = np.empty(total)
    idx = np.arange(total)
    for start in range(0, total, chunk):
        sub = idx[start:start + chunk]
        pts = np.stack(np.unravel_index(sub, (grid,) * dim), axis=-1) * h + 0.5 * h
        vals_all[start:start + chunk] = f(pts)
    best_lo = float(vals_all.max())
    radius = 0.5 * h * np.sqrt(dim)
    slack = lipschitz * radius
    cand = np.nonzero(vals_all + slack >= best_lo)[0]
    centres = np.stack(np.unravel_index(cand, (grid,) * dim), axis=-1) * h + 0.5 * h
    vals = vals_all[cand]
    del vals_all

    offsets = np.array(np.meshgrid(*([[-0.25, 0.25]] * dim), indexing="ij")).reshape(dim, -1).T
    for _ in range(max_rounds):
        upper = float(np.max(vals)) + slack
        if slack <= abs_tol or len(centres) > 250_000:
            return upper
        h *= 0.5
        radius *= 0.5
        slack = lipschitz * radius
        centres = (centres[:, None, :] + 2.0 * h * offsets[None, :, :]).reshape(-1, dim)
        vals = f(centres)
        best_lo = max(best_lo, float(vals.max()))
        mask = vals + slack >= best_lo
        centres, vals = centres[mask], vals[mask]
    return float(np.max(vals)) + slack
