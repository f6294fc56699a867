"""Flux values on the translation generators vs direct quadrature over the swept tori."""

import numpy as np
from scipy.integrate import dblquad

from magtorus import MagneticField, novikov_data
from magtorus.fields import trig2

field = MagneticField((trig2(3 * np.pi, [(1, 0, 0.0, 0.5), (1, 1, 0.3, -0.2)]),))


def swept(h, i):
    e = np.eye(2)[i]
    jac = e[0] * h[1] - e[1] * h[0]
    if jac == 0:
        return 0.0
    val, _ = dblquad(lambda t, s: float(field.a[0](np.array([t * h[0] + s * e[0], t * h[1] + s * e[1]]))),
                     0, 1, 0, 1, epsabs=1e-12)
    return jac * val


for h in [(0, 0), (1, 0), (0, 1), (1, 1), (2, -1)]:
    phi, rank = novikov_data(field, h)
    oracle = [swept(np.array(h, float), i) for i in range(2)]
    print(f"h={h}: phi={np.round(phi, 10).tolist()} oracle={np.round(oracle, 10).tolist()} rank={rank}")
