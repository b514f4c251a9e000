import numpy as np
import pytest

from plateio.media import ConstantComplex
from plateio.stack import Layer, LayerStack
from plateio.units import NATURAL


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def lossy_two_layer():
    """Two absorbing layers between unequal lossless exteriors (c = 1 units)."""
    return LayerStack(ConstantComplex(1.0),
                      (Layer(ConstantComplex(2 + 0.5j), 0.4), Layer(ConstantComplex(4 + 0.1j), 0.3)),
                      ConstantComplex(1.5), NATURAL)



ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(number, passed, measured, tolerance, note)``."""
    def add(number, passed, measured, tolerance, note=""):
        line = (f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  "
                f"measured={measured:.3e}  tolerance={tolerance:.1e}" + (f"  ({note})" if note else ""))
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
