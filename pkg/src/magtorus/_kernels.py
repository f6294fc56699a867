"""Compiled right-hand side and Dormand-Prince 5(4) stepper.

Field rows: [factor j, m, n, c_cos, c_sin]. Potential rows:
[time_m, phase, c_cos, c_sin, k_1..k_2N]. State layout: [x, p] followed by the
row-major (4N x 4N) variational matrix when ``mono`` is set.
"""

import numpy as np
from numba import njit

TWO_PI = 2.0 * np.pi

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1 = 71 / 57600
E3 = -71 / 16695
E4 = 71 / 1920
E5 = -17253 / 339200
E6 = 22 / 525
E7 = -1 / 40


@njit(cache=True, nogil=True)
def rhs(t, y, fconst, fmodes, pmodes, tau, n2, mono, out):
    N = n2 // 2
    a = fconst.copy()
    da = np.zeros((N, 2))
    for r in range(fmodes.shape[0]):
        j = int(fmodes[r, 0])
        m = fmodes[r, 1]
        n = fmodes[r, 2]
        c = fmodes[r, 3]
        s = fmodes[r, 4]
        th = TWO_PI * (m * y[2 * j] + n * y[2 * j + 1])
        cth = np.cos(th)
        sth = np.sin(th)
        a[j] += c * cth + s * sth
        g = TWO_PI * (-c * sth + s * cth)
        da[j, 0] += g * m
        da[j, 1] += g * n

    gV = np.zeros(n2)
    HV = np.zeros((n2, n2))
    for r in range(pmodes.shape[0]):
        tf = np.cos(TWO_PI * pmodes[r, 0] * t / tau + pmodes[r, 1])
        c = pmodes[r, 2]
        s = pmodes[r, 3]
        th = 0.0
        for i in range(n2):
            th += pmodes[r, 4 + i] * y[i]
        th *= TWO_PI
        cth = np.cos(th)
        sth = np.sin(th)
        g = tf * TWO_PI * (-c * sth + s * cth)
        for i in range(n2):
            gV[i] += g * pmodes[r, 4 + i]
        if mono:
            h = -tf * TWO_PI * TWO_PI * (c * cth + s * sth)
            for i in range(n2):
                for k in range(n2):
                    HV[i, k] += h * pmodes[r, 4 + i] * pmodes[r, 4 + k]

    for i in range(n2):
        out[i] = y[n2 + i]
    for j in range(N):
        p0 = y[n2 + 2 * j]
        p1 = y[n2 + 2 * j + 1]
        out[n2 + 2 * j] = a[j] * p1 - gV[2 * j]
        out[n2 + 2 * j + 1] = -a[j] * p0 - gV[2 * j + 1]

    if mono:
        d = 2 * n2
        A = np.zeros((d, d))
        for i in range(n2):
            A[i, n2 + i] = 1.0
        for j in range(N):
            A[n2 + 2 * j, n2 + 2 * j + 1] = a[j]
            A[n2 + 2 * j + 1, n2 + 2 * j] = -a[j]
            p0 = y[n2 + 2 * j]
            p1 = y[n2 + 2 * j + 1]
            for q in range(2):
                A[n2 + 2 * j, 2 * j + q] += da[j, q] * p1
                A[n2 + 2 * j + 1, 2 * j + q] -= da[j, q] * p0
        for i in range(n2):
            for k in range(n2):
                A[n2 + i, k] -= HV[i, k]
        base = d
        for i in range(d):
            for k in range(d):
                acc = 0.0
                for l in range(d):
                    acc += A[i, l] * y[base + l * d + k]
                out[base + i * d + k] = acc


@njit(cache=True, nogil=True)
def _err_norm(y, ynew, err, tol):
    acc = 0.0
    for i in range(y.shape[0]):
        sc = tol * (1.0 + max(abs(y[i]), abs(ynew[i])))
        acc += (err[i] / sc) ** 2
    return np.sqrt(acc / y.shape[0])


@njit(cache=True, nogil=True)
def dopri_path(y0, t_out, tol, hmax, fconst, fmodes, pmodes, tau, n2, mono, max_steps):
    """Integrate through the increasing times ``t_out`` (t_out[0] is the start).

    Returns (states at t_out, status, accepted steps). Status 0 ok,
    1 step-size underflow, 2 step budget exhausted.
    """
    ny = y0.shape[0]
    Y = np.empty((t_out.shape[0], ny))
    Y[0] = y0
    y = y0.copy()
    t = t_out[0]
    k1 = np.empty(ny)
    k2 = np.empty(ny)
    k3 = np.empty(ny)
    k4 = np.empty(ny)
    k5 = np.empty(ny)
    k6 = np.empty(ny)
    k7 = np.empty(ny)
    tmp = np.empty(ny)
    ynew = np.empty(ny)
    err = np.empty(ny)
    rhs(t, y, fconst, fmodes, pmodes, tau, n2, mono, k1)
    h = hmax * 0.25
    steps = 0
    for idx in range(1, t_out.shape[0]):
        t_end = t_out[idx]
        while t < t_end:
            last = False
            if t + h >= t_end:
                hh = t_end - t
                last = True
            else:
                hh = h
            if hh < 1e-14 * max(1.0, abs(t)):
                if last:
                    t = t_end
                    break
                return Y, 1, steps
            for i in range(ny):
                tmp[i] = y[i] + hh * A21 * k1[i]
            rhs(t + C2 * hh, tmp, fconst, fmodes, pmodes, tau, n2, mono, k2)
            for i in range(ny):
                tmp[i] = y[i] + hh * (A31 * k1[i] + A32 * k2[i])
            rhs(t + C3 * hh, tmp, fconst, fmodes, pmodes, tau, n2, mono, k3)
            for i in range(ny):
                tmp[i] = y[i] + hh * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            rhs(t + C4 * hh, tmp, fconst, fmodes, pmodes, tau, n2, mono, k4)
            for i in range(ny):
                tmp[i] = y[i] + hh * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            rhs(t + C5 * hh, tmp, fconst, fmodes, pmodes, tau, n2, mono, k5)
            for i in range(ny):
                tmp[i] = y[i] + hh * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i]
                                      + A65 * k5[i])
            rhs(t + hh, tmp, fconst, fmodes, pmodes, tau, n2, mono, k6)
            for i in range(ny):
                ynew[i] = y[i] + hh * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i]
                                       + B6 * k6[i])
            rhs(t + hh, ynew, fconst, fmodes, pmodes, tau, n2, mono, k7)
            for i in range(ny):
                err[i] = hh * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                               + E7 * k7[i])
            en = _err_norm(y, ynew, err, tol)
            if en <= 1.0:
                t = t_end if last else t + hh
                for i in range(ny):
                    y[i] = ynew[i]
                    k1[i] = k7[i]
                steps += 1
                if steps > max_steps:
                    return Y, 2, steps
                fac = 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
                if not last:
                    h = min(hmax, hh * fac)
                else:
                    h = min(hmax, max(h, hh * fac)) if hh < h else min(hmax, hh * fac)
            else:
                h = hh * max(0.2, 0.9 * en ** -0.2)
        Y[idx] = y
    return Y, 0, steps
