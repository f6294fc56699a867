"""Periodic orbits of magnetic Hamiltonian systems on flat tori."""

from .atlas import (Orbit, Prediction, SearchConfig, SearchResult, find_orbits, morse_audit,
                    novikov_data, predict, theorem_b_check)
from .dynamics import PhasePoint, PhaseTrajectory, flow_map, integrate, momentum_bound
from .fields import MagneticField, NonResCertificate, certify_nonresonance, transport
from .loopspace import FourierLoop, action, cz_index, gradient, hessian_index
from .potential import Potential, PotentialTerm
from .torus import TorusLoop, lift, winding_class, wrap
from .trig import TrigPoly

__version__ = "0.1.0"
