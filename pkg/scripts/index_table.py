"""Morse index, nullity and mu_0 of constant loops for a = pi, 3 pi, ..., at tau = 1."""

import numpy as np

from magtorus import FourierLoop, MagneticField, Potential, cz_index, hessian_index

V = Potential.zero(1, 1.0)
loop = FourierLoop.constant([0.25, 0.5])
print(f"{'a/pi':>5} {'index':>6} {'nullity':>8} {'mu0':>4} {'K':>3}")
for m in (1, 3, 5, 7, 9):
    f = MagneticField.constant(m * np.pi)
    res = hessian_index(f, V, loop)
    print(f"{m:5d} {res.morse_index:6d} {res.nullity:8d} {cz_index(f, V, loop, False):4d} {res.K:3d}")
