"""Fourier discretisation of the Lagrangian action on the loop space of T^{2N}.

S(gamma) = int_0^tau |gamma'|^2 / 2 - V(t, gamma) dt + A(gamma), where the
magnetic term A is the integral of sigma over a radial cap of the lifted loop.
A counts area swept counter-clockwise as positive, so that critical points of
S are exactly the projections of solutions of x' = p, p' = -Y(x) p - grad V.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import NamedTuple, Optional

import numpy as np

from .errors import InconsistentNullity, LineSearchStall, NonContractible, NotConverged, NotCritical
from .fields import J2, MagneticField, apply_lorentz, lorentz
from .potential import Potential

GL_NODES = 32
NULL_TOL = 1e-7
K_LADDER = (8, 16, 32, 64)


@dataclass(frozen=True, eq=False)
class FourierLoop:
    """gamma(t) = base + t h / tau + sum_k cos_k cos(w_k t) + sin_k sin(w_k t), w_k = 2 pi k / tau.

    ``cos`` and ``sin`` have shape (K, 2N); row k-1 holds mode k.
    """

    tau: float
    base: np.ndarray
    cos: np.ndarray
    sin: np.ndarray
    winding: np.ndarray = dc_field(default=None)

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float).copy()
        cos = np.atleast_2d(np.asarray(self.cos, dtype=float)).copy()
        sin = np.atleast_2d(np.asarray(self.sin, dtype=float)).copy()
        if cos.shape != sin.shape or cos.shape[1] != base.shape[0]:
            raise ValueError("inconsistent coefficient shapes")
        if cos.shape[0] < 1:
            raise ValueError("truncation order K must be >= 1")
        h = np.zeros(base.shape[0], dtype=np.int64) if self.winding is None else \
            np.asarray(self.winding, dtype=np.int64).copy()
        for name, val in (("base", base), ("cos", cos), ("sin", sin), ("winding", h)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "tau", float(self.tau))

    # construction -----------------------------------------------------
    @classmethod
    def constant(cls, x0, tau: float = 1.0, K: int = 1) -> "FourierLoop":
        x0 = np.asarray(x0, dtype=float)
        z = np.zeros((K, x0.shape[0]))
        return cls(tau, x0, z, z)

    @classmethod
    def circle(cls, R: float, tau: float = 1.0, center=(0.0, 0.0), K: int = 1,
               sense: int = -1) -> "FourierLoop":
        """Round circle of radius R in the first factor, one turn per period.

        ``sense=-1`` is clockwise, the direction in which a positive field
        turns the velocity.
        """
        center = np.asarray(center, dtype=float)
        cos = np.zeros((K, center.shape[0]))
        sin = np.zeros_like(cos)
        cos[0, 0] = R
        sin[0, 1] = sense * R
        return cls(tau, center, cos, sin)

    @classmethod
    def from_params(cls, theta, like: "FourierLoop") -> "FourierLoop":
        d = like.dim
        K = like.K
        theta = np.asarray(theta, dtype=float)
        return cls(like.tau, theta[:d], theta[d:d + K * d].reshape(K, d),
                   theta[d + K * d:].reshape(K, d), like.winding)

    @classmethod
    def fit(cls, lifted, tau: float, K: int, winding=None) -> "FourierLoop":
        """Least-squares (FFT) fit to M uniform samples on [0, tau) of a lifted curve."""
        y = np.asarray(lifted, dtype=float)
        M, d = y.shape
        if K > M // 2 - 1:
            raise ValueError(f"K={K} too large for {M} samples")
        if winding is None:
            # extrapolate one sample past the end to reach gamma(tau) = gamma(0) + h
            winding = np.rint(2 * y[-1] - y[-2] - y[0])
        h = np.asarray(winding, dtype=float)
        ts = tau * np.arange(M) / M
        per = y - np.outer(ts, h) / tau
        Y = np.fft.rfft(per, axis=0)
        base = Y[0].real / M
        cos = 2.0 * Y[1:K + 1].real / M
        sin = -2.0 * Y[1:K + 1].imag / M
        return cls(tau, base, cos, sin, h.astype(np.int64))

    # evaluation -------------------------------------------------------
    @property
    def K(self) -> int:
        return self.cos.shape[0]

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.base, self.cos.ravel(), self.sin.ravel()])

    def _omega(self):
        return 2 * np.pi * np.arange(1, self.K + 1) / self.tau

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        w = self._omega()
        ph = np.outer(t, w)
        return (self.base + np.outer(t, self.winding) / self.tau
                + np.cos(ph) @ self.cos + np.sin(ph) @ self.sin)

    def velocity(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        w = self._omega()
        ph = np.outer(t, w)
        return (self.winding / self.tau
                + (-np.sin(ph) * w) @ self.cos + (np.cos(ph) * w) @ self.sin)

    def acceleration(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        w = self._omega()
        ph = np.outer(t, w)
        return (-np.cos(ph) * w ** 2) @ self.cos + (-np.sin(ph) * w ** 2) @ self.sin

    def samples(self, M: int) -> np.ndarray:
        return self(self.tau * np.arange(M) / M)

    def with_order(self, K: int) -> "FourierLoop":
        """Truncate or zero-pad to order K."""
        cos = np.zeros((K, self.dim))
        sin = np.zeros((K, self.dim))
        k = min(K, self.K)
        cos[:k] = self.cos[:k]
        sin[:k] = self.sin[:k]
        return FourierLoop(self.tau, self.base, cos, sin, self.winding)

    def __add__(self, other: "FourierLoop") -> "FourierLoop":
        K = max(self.K, other.K)
        a, b = self.with_order(K), other.with_order(K)
        return FourierLoop(self.tau, a.base + b.base, a.cos + b.cos, a.sin + b.sin,
                           self.winding + other.winding)

    def scaled(self, c: float) -> "FourierLoop":
        """Multiply the oscillating and base parts by c (winding untouched)."""
        return FourierLoop(self.tau, c * self.base, c * self.cos, c * self.sin, self.winding)


def l2_inner(u: FourierLoop, v: FourierLoop) -> float:
    """L^2([0, tau]) pairing of the periodic parts of two band-limited loops."""
    K = max(u.K, v.K)
    a, b = u.with_order(K), v.with_order(K)
    return float(u.tau * a.base @ b.base
                 + 0.5 * u.tau * (np.sum(a.cos * b.cos) + np.sum(a.sin * b.sin)))


class ActionReport(NamedTuple):
    kinetic: float
    magnetic: float
    potential: float
    total: float


def _nodes(loop: FourierLoop, M: Optional[int]) -> tuple[np.ndarray, float]:
    if M is None:
        M = max(256, 8 * loop.K)
    return loop.tau * np.arange(M) / M, loop.tau / M


def magnetic_term(field: MagneticField, loop: FourierLoop, center=None,
                  M: Optional[int] = None) -> float:
    """Integral of sigma over the radial cap s -> center + s (gamma(t) - center)."""
    if np.any(loop.winding != 0):
        raise NonContractible("the magnetic action is only defined on contractible loops")
    ts, w = _nodes(loop, M)
    g = loop(ts)
    dg = loop.velocity(ts)
    c = loop.base if center is None else np.asarray(center, dtype=float)
    s, ws = np.polynomial.legendre.leggauss(GL_NODES)
    s = 0.5 * (s + 1.0)
    ws = 0.5 * ws
    total = 0.0
    for j, a in enumerate(field.a):
        rel = g[:, 2 * j:2 * j + 2] - c[2 * j:2 * j + 2]
        vel = dg[:, 2 * j:2 * j + 2]
        cross = rel[:, 0] * vel[:, 1] - rel[:, 1] * vel[:, 0]
        if a.is_constant:
            total += a.constant * 0.5 * w * np.sum(cross)
            continue
        z = c[2 * j:2 * j + 2] + s[:, None, None] * rel[None, :, :]
        vals = a(z)
        total += w * np.sum(ws[:, None] * s[:, None] * vals * cross[None, :])
    return float(total)


def action(field: MagneticField, V: Potential, loop: FourierLoop, M: Optional[int] = None,
           center=None) -> ActionReport:
    ts, w = _nodes(loop, M)
    dg = loop.velocity(ts)
    kinetic = 0.5 * w * float(np.sum(dg ** 2))
    pot = w * float(np.sum(V.value(ts, loop(ts))))
    mag = magnetic_term(field, loop, center, M)
    return ActionReport(kinetic, mag, pot, kinetic + mag - pot)


def fourier_action(loop: FourierLoop, a) -> float:
    """Closed-form action of a contractible loop for constant fields, V = 0.

    Sum over modes of (2 pi^2 k^2 / tau - a pi k) |gamma_k|^2, where gamma_k is
    the coefficient of exp(-2 pi k t J / tau) and k runs over nonzero integers.
    """
    a = np.broadcast_to(np.asarray(a, dtype=float), (loop.dim // 2,))
    total = 0.0
    for j in range(loop.dim // 2):
        sl = slice(2 * j, 2 * j + 2)
        for k in range(1, loop.K + 1):
            ck, sk = loop.cos[k - 1, sl], loop.sin[k - 1, sl]
            fwd = 0.5 * (ck + J2 @ sk)   # coefficient of exp(-w t J)
            bwd = 0.5 * (ck - J2 @ sk)   # coefficient of exp(+w t J)
            kin = 2 * np.pi ** 2 * k ** 2 / loop.tau
            total += (kin - a[j] * np.pi * k) * fwd @ fwd + (kin + a[j] * np.pi * k) * bwd @ bwd
    return float(total)


# first variation --------------------------------------------------------

def _basis(K: int, tau: float, ts: np.ndarray):
    """Scalar basis 1, cos(w_k t), sin(w_k t) and derivatives; shape (M, 2K+1)."""
    w = 2 * np.pi * np.arange(1, K + 1) / tau
    ph = np.outer(ts, w)
    F = np.hstack([np.ones((ts.shape[0], 1)), np.cos(ph), np.sin(ph)])
    dF = np.hstack([np.zeros((ts.shape[0], 1)), -np.sin(ph) * w, np.cos(ph) * w])
    return F, dF


def euler_lagrange(field: MagneticField, V: Potential, loop: FourierLoop, ts) -> np.ndarray:
    """-gamma'' - Y(gamma) gamma' - grad V(t, gamma) at the times ``ts``."""
    g = loop(ts)
    dg = loop.velocity(ts)
    return -loop.acceleration(ts) - apply_lorentz(field, g, dg) - V.gradient(ts, g)


def _covector(field, V, loop: FourierLoop, M=None) -> np.ndarray:
    """dS/dtheta in the parameter layout of ``loop``."""
    ts, w = _nodes(loop, M)
    el = euler_lagrange(field, V, loop, ts)
    F, _ = _basis(loop.K, loop.tau, ts)
    G = w * F.T @ el          # (2K+1, 2N)
    return G.ravel()


def _l2_gradient(field, V, loop, precondition=False, M=None) -> FourierLoop:
    G = _covector(field, V, loop, M).reshape(2 * loop.K + 1, loop.dim)
    tau = loop.tau
    base = G[0] / tau
    cos = G[1:loop.K + 1] / (0.5 * tau)
    sin = G[loop.K + 1:] / (0.5 * tau)
    if precondition:
        wk = (2 * np.pi * np.arange(1, loop.K + 1) / tau) ** 2
        cos = cos / (1 + wk)[:, None]
        sin = sin / (1 + wk)[:, None]
    return FourierLoop(tau, base, cos, sin)


def gradient(field: MagneticField, V: Potential, loop: FourierLoop,
             precondition: bool = False, M: Optional[int] = None) -> FourierLoop:
    """L^2 gradient of the action projected on the modes |k| <= K.

    The result pairs with a variation xi through ``l2_inner`` to give dS[xi].
    ``precondition`` divides mode k by 1 + (2 pi k / tau)^2.
    """
    if np.any(loop.winding != 0):
        raise NonContractible("the action gradient is only defined on contractible loops")
    return _l2_gradient(field, V, loop, precondition, M)


def gradient_norm(field, V, loop: FourierLoop, M=None) -> float:
    g = _l2_gradient(field, V, loop, False, M)
    return float(np.sqrt(l2_inner(g, g)))


# second variation -------------------------------------------------------

def hessian_matrix(field: MagneticField, V: Potential, loop: FourierLoop, K: int,
                   M: Optional[int] = None) -> np.ndarray:
    """Second variation on the L^2-orthonormal real Fourier basis of order K.

    Rows and columns are ordered (basis function, coordinate) as in
    ``FourierLoop.params``. Cap independent, so any winding is allowed.
    """
    tau = loop.tau
    if M is None:
        M = max(256, 8 * K, 8 * loop.K)
    ts = tau * np.arange(M) / M
    w = tau / M
    d = loop.dim
    g = loop(ts)
    dg = loop.velocity(ts)
    F, dF = _basis(K, tau, ts)
    Y = lorentz(field, g)                                # (M, d, d)
    da = field.gradients(g)                              # (M, N, 2)
    T = np.zeros((M, d, d))
    for j in range(field.N):
        for q in range(2):
            T[:, 2 * j, 2 * j + q] = -da[:, j, q] * dg[:, 2 * j + 1]
            T[:, 2 * j + 1, 2 * j + q] = da[:, j, q] * dg[:, 2 * j]
    S = T + V.hessian(ts, g)
    nb = F.shape[1]
    H = np.zeros((nb, d, nb, d))
    kin = w * dF.T @ dF
    for c in range(d):
        H[:, c, :, c] += kin
    H -= w * np.einsum("mb,mcd,me->bced", F, Y, dF, optimize=True)
    H -= w * np.einsum("mb,mcd,me->bced", F, S, F, optimize=True)
    H = H.reshape(nb * d, nb * d)
    scale = np.repeat(np.concatenate([[1 / np.sqrt(tau)], np.full(nb - 1, np.sqrt(2 / tau))]), d)
    H = scale[:, None] * H * scale[None, :]
    return 0.5 * (H + H.T)


class IndexResult(NamedTuple):
    morse_index: int
    nullity: int
    converged: bool
    K: int


def hessian_index(field: MagneticField, V: Potential, loop: FourierLoop, K_max: int = 64,
                  null_tol: float = NULL_TOL, grad_tol: float = 1e-8,
                  strict: bool = True) -> IndexResult:
    """Morse index and nullity of the action at a critical loop.

    The Fourier order runs through 8, 16, 32, 64 (capped by ``K_max``); the
    counts are converged once they agree at three consecutive orders.
    """
    gn = gradient_norm(field, V, loop)
    if gn >= grad_tol:
        raise NotCritical(f"gradient norm {gn:.3g} >= {grad_tol:g}")
    ladder = [K for K in K_LADDER if K <= K_max] or [K_max]
    history = []
    for K in ladder:
        lam = np.linalg.eigvalsh(hessian_matrix(field, V, loop, K))
        history.append((int(np.sum(lam < -null_tol)), int(np.sum(np.abs(lam) <= null_tol))))
        if len(history) >= 3 and history[-1] == history[-2] == history[-3]:
            return IndexResult(*history[-1], True, K)
    if strict:
        raise NotConverged(f"index counts did not stabilise: {history}")
    return IndexResult(*history[-1], False, ladder[-1])


def cz_index(field: MagneticField, V: Potential, loop: FourierLoop, is_nondegenerate: bool,
             manifold_dim: Optional[int] = None, **kwargs) -> int:
    """Conley-Zehnder index from the Morse index of the Lagrangian action.

    Nondegenerate orbits: mu = index. Along a critical manifold of dimension
    ``manifold_dim`` (default 2N, the torus of constant loops):
    mu = index + nullity / 2.
    """
    res = hessian_index(field, V, loop, **kwargs)
    if is_nondegenerate:
        if res.nullity != 0:
            raise InconsistentNullity(f"nondegenerate orbit has nullity {res.nullity}")
        return res.morse_index
    dim = loop.dim if manifold_dim is None else manifold_dim
    if res.nullity != dim:
        raise InconsistentNullity(f"nullity {res.nullity} differs from manifold dimension {dim}")
    return res.morse_index + res.nullity // 2


# descent ----------------------------------------------------------------

@dataclass
class DescentReport:
    iterations: int = 0
    actions: list = dc_field(default_factory=list)
    grad_norms: list = dc_field(default_factory=list)
    converged: bool = False
    unbounded: bool = False


def _w12_diag(loop: FourierLoop) -> np.ndarray:
    """Diagonal of the W^{1,2} metric in parameter coordinates."""
    tau, K, d = loop.tau, loop.K, loop.dim
    wk = (2 * np.pi * np.arange(1, K + 1) / tau) ** 2
    diag = np.concatenate([[tau], 0.5 * tau * (1 + wk), 0.5 * tau * (1 + wk)])
    return np.repeat(diag, d)


def descend(field: MagneticField, V: Potential, start: FourierLoop, max_iters: int = 500,
            grad_tol: float = 1e-8, armijo: float = 1e-4,
            unbounded_below: float = -1e6) -> tuple[FourierLoop, DescentReport]:
    """W^{1,2}-preconditioned gradient descent with halving Armijo backtracking."""
    if np.any(start.winding != 0):
        raise NonContractible("descent runs on the contractible component")
    loop = start
    report = DescentReport()
    S = action(field, V, loop).total
    report.actions.append(S)
    P = 1.0 / _w12_diag(loop)
    for it in range(max_iters):
        G = _covector(field, V, loop)
        gnorm2 = float(G @ (P * G))
        report.grad_norms.append(np.sqrt(gnorm2))
        if np.sqrt(gnorm2) < grad_tol:
            report.converged = True
            return loop, report
        direction = -P * G
        step = 1.0
        theta = loop.params
        while True:
            trial = FourierLoop.from_params(theta + step * direction, loop)
            S_new = action(field, V, trial).total
            if S_new <= S - armijo * step * gnorm2:
                break
            step *= 0.5
            if step < 1e-20:
                raise LineSearchStall(f"no Armijo step at iteration {it}")
        loop, S = trial, S_new
        report.actions.append(S)
        report.iterations = it + 1
        if S < unbounded_below:
            report.unbounded = True
            return loop, report
    return loop, report
