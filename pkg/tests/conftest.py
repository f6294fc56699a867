import numpy as np
import pytest
from hypothesis import settings

from magtorus.fields import MagneticField
from magtorus.potential import Potential
from magtorus.trig import TrigPoly

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def cyclotron():
    return MagneticField.constant(3 * np.pi)


@pytest.fixture(scope="session")
def small_V():
    return Potential.autonomous(TrigPoly.from_rows(2, 0.0, [[1, 0, 0.01, 0.0], [0, 1, 0.01, 0.0]]), 1.0)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
