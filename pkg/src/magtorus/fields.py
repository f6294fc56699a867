"""Product magnetic forms sigma = sum_j p_j^*(a_j mu) on T^{2N}.

Coordinates of factor j are (x_{2j}, x_{2j+1}) (zero-based). The rotation
generator on each factor is ``J2 = [[0, -1], [1, 0]]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import NotAlmostComplex, NotCompatible, Resonant
from .torus import TorusLoop, lift
from .trig import TrigPoly

J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def trig2(constant: float, modes: Sequence[Sequence[float]] = ()) -> TrigPoly:
    """Field coefficient on one T^2 factor from rows (m, n, c_cos, c_sin)."""
    return TrigPoly.from_rows(2, constant, modes)


@dataclass(frozen=True)
class MagneticField:
    a: tuple

    def __post_init__(self):
        a = tuple(self.a)
        if not a:
            raise ValueError("need at least one factor")
        for p in a:
            if not isinstance(p, TrigPoly) or p.dim != 2:
                raise TypeError("each factor coefficient must be a 2-d TrigPoly")
        object.__setattr__(self, "a", a)

    @classmethod
    def constant(cls, *values: float) -> "MagneticField":
        return cls(tuple(trig2(v) for v in values))

    @property
    def N(self) -> int:
        return len(self.a)

    @property
    def fluxes(self) -> np.ndarray:
        """Integral of sigma_j over the unit-area factor torus (= mean of a_j)."""
        return np.array([p.constant for p in self.a])

    @property
    def is_constant(self) -> bool:
        return all(p.is_constant for p in self.a)

    def values(self, x) -> np.ndarray:
        """a_j(p_j(x)) for each factor; shape (..., N)."""
        x = np.asarray(x, dtype=float)
        return np.stack([p(x[..., 2 * j:2 * j + 2]) for j, p in enumerate(self.a)], axis=-1)

    def gradients(self, x) -> np.ndarray:
        """Gradient of a_j w.r.t. its own two coordinates; shape (..., N, 2)."""
        x = np.asarray(x, dtype=float)
        return np.stack([p.gradient(x[..., 2 * j:2 * j + 2]) for j, p in enumerate(self.a)],
                        axis=-2)


def lorentz(field: MagneticField, x) -> np.ndarray:
    """Lorentz force Y(x): block diagonal with blocks a_j(p_j(x)) * J2.

    Broadcasts over leading axes of ``x``.
    """
    vals = field.values(x)
    n = field.N
    out = np.zeros(vals.shape[:-1] + (2 * n, 2 * n))
    for j in range(n):
        out[..., 2 * j + 1, 2 * j] = vals[..., j]
        out[..., 2 * j, 2 * j + 1] = -vals[..., j]
    return out


def apply_lorentz(field: MagneticField, x, v) -> np.ndarray:
    """Y(x) v without forming the matrix."""
    vals = field.values(x)
    v = np.asarray(v, dtype=float)
    out = np.empty(np.broadcast_shapes(vals.shape[:-1] + (2 * field.N,), v.shape))
    out[..., 0::2] = -vals * v[..., 1::2]
    out[..., 1::2] = vals * v[..., 0::2]
    return out


def rotation_blocks(angles) -> np.ndarray:
    """Block-diagonal matrix of planar rotations exp(b_j J2)."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    n = angles.shape[-1]
    out = np.zeros(angles.shape[:-1] + (2 * n, 2 * n))
    c, s = np.cos(angles), np.sin(angles)
    for j in range(n):
        out[..., 2 * j, 2 * j] = c[..., j]
        out[..., 2 * j, 2 * j + 1] = -s[..., j]
        out[..., 2 * j + 1, 2 * j] = s[..., j]
        out[..., 2 * j + 1, 2 * j + 1] = c[..., j]
    return out


def running_field_integral(field: MagneticField, loop: TorusLoop) -> tuple[np.ndarray, np.ndarray]:
    """b_j(t) = int_0^t a_j(p_j(gamma(s))) ds at the sample times plus t = tau.

    Composite Simpson on the closed sample sequence.
    """
    pts = lift(loop)
    ts = loop.tau * np.arange(loop.M + 1) / loop.M
    vals = field.values(pts)
    b = cumulative_simpson(vals, x=ts, axis=0, initial=0.0)
    return ts, b


def transport(field: MagneticField, loop: TorusLoop, t: float) -> np.ndarray:
    """Transport operator F(t) solving F' = F Y(gamma), F(0) = Id."""
    if not 0.0 <= t <= loop.tau * (1 + 1e-12):
        raise ValueError("t must lie in [0, tau]")
    ts, b = running_field_integral(field, loop)
    angles = np.array([np.interp(t, ts, b[:, j]) for j in range(field.N)])
    return rotation_blocks(angles)


@dataclass(frozen=True)
class NonResCertificate:
    tau: float
    k: tuple
    b_lo: tuple
    b_hi: tuple
    epsilon: float

    @property
    def N(self) -> int:
        return len(self.k)

    def as_dict(self) -> dict:
        return {"tau": self.tau, "k": list(self.k), "b_lo": list(self.b_lo),
                "b_hi": list(self.b_hi), "epsilon": self.epsilon}


def certify_nonresonance(field: MagneticField, tau: float, grid: int = 256) -> NonResCertificate:
    """Certify 2 pi k_j < tau a_j < 2 pi (k_j + 1) on every factor.

    Bounds of tau * a_j come from ``TrigPoly.bounds`` (grid plus Lipschitz slack),
    so a returned certificate is rigorous up to floating point; failure only
    means the bracket could not be established.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    ks, los, his, eps = [], [], [], []
    for j, p in enumerate(field.a):
        lo, hi = p.bounds(grid)
        b_lo, b_hi = tau * lo, tau * hi
        k = int(np.floor(b_lo / (2 * np.pi)))
        if not (2 * np.pi * k < b_lo and b_hi < 2 * np.pi * (k + 1)):
            raise Resonant(
                f"factor {j}: tau*a ranges over [{b_lo:.6g}, {b_hi:.6g}], which is not "
                f"strictly inside an interval (2 pi k, 2 pi (k+1))")
        ks.append(k)
        los.append(float(b_lo))
        his.append(float(b_hi))
        eps.append(min(abs(np.sin(b_lo / 2)), abs(np.sin(b_hi / 2))))
    return NonResCertificate(float(tau), tuple(ks), tuple(los), tuple(his), 2.0 * float(min(eps)))


def standard_J(N: int, A: float = 1.0) -> np.ndarray:
    """Rescaled complex structure (h, v) -> (-v / A, A h) on T T^*T^{2N}."""
    n = 2 * N
    out = np.zeros((2 * n, 2 * n))
    out[:n, n:] = -np.eye(n) / A
    out[n:, :n] = A * np.eye(n)
    return out


def dlambda_matrix(N: int) -> np.ndarray:
    """Matrix of d lambda in the (horizontal, vertical) splitting.

    Sign fixed by d lambda(J xi, xi) = |xi|^2 for the unscaled structure.
    """
    n = 2 * N
    out = np.zeros((2 * n, 2 * n))
    out[:n, n:] = -np.eye(n)
    out[n:, :n] = np.eye(n)
    return out


def omega_matrix(field: MagneticField, x) -> np.ndarray:
    """Matrix of the twisted form d lambda + pi^* sigma at the point x."""
    n = 2 * field.N
    out = dlambda_matrix(field.N)
    # sigma(u, w) = <Y u, w> = u^T Y^T w on horizontal parts
    out[:n, :n] += lorentz(field, x).T
    return out


def tame_check(field: MagneticField, x, A: float, J, tol: float = 1e-8) -> tuple[bool, float]:
    """Uniform taming test omega(J xi, xi) > 1/4 d lambda(J xi, xi).

    Returns (holds, margin) where margin is the least eigenvalue of the
    symmetric part of the quadratic form.
    """
    J = np.asarray(J, dtype=float)
    dim = 4 * field.N
    if J.shape != (dim, dim):
        raise ValueError(f"J must be {dim}x{dim}")
    if np.max(np.abs(J @ J + np.eye(dim))) > tol:
        raise NotAlmostComplex("J^2 != -Id")
    form = J.T @ omega_matrix(field, x) - 0.25 * J.T @ dlambda_matrix(field.N)
    margin = float(np.linalg.eigvalsh(0.5 * (form + form.T))[0])
    return margin > 0.0, margin


def kappa(J, tol: float = 1e-8) -> float:
    """Least eigenvalue of -Jstd J for a d lambda-compatible J."""
    J = np.asarray(J, dtype=float)
    dim = J.shape[0]
    if dim % 4 or J.shape != (dim, dim):
        raise ValueError("J must be a square matrix of size 4N")
    Om = dlambda_matrix(dim // 4)
    g = J.T @ Om
    if np.max(np.abs(g - g.T)) > tol:
        raise NotCompatible("d lambda(J., .) is not symmetric")
    S = -standard_J(dim // 4) @ J
    lam = np.linalg.eigvalsh(0.5 * (S + S.T))
    if lam[0] <= 0:
        raise NotCompatible("-Jstd J is not positive")
    return float(lam[0])
