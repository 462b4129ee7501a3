import math

import numpy as np
import pytest

from opuc_spectra import sequences as S
from opuc_spectra.arcs import arc
from opuc_spectra.diagonalization import detect_sign_constants

ARC_I = arc(2 * math.pi / 5, 8 * math.pi / 5)


@pytest.fixture(scope="session")
def rotating():
    return S.rotating_phase(0.5, 0.25)


@pytest.fixture(scope="session")
def free():
    return S.constant(0.0)


@pytest.fixture(scope="session")
def bernstein_szego():
    return S.explicit([0.5])


@pytest.fixture(scope="session")
def arc_i():
    return ARC_I


@pytest.fixture(scope="session")
def rotating_sc(rotating):
    return detect_sign_constants(rotating, 1, ARC_I, m_window=(0, 1000))


@pytest.fixture(scope="session")
def free_sc(free):
    return detect_sign_constants(free, 1, arc(math.pi / 2, 3 * math.pi / 2))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    lines = []
    for mod in list(sys.modules.values()):
        lines.extend(getattr(mod, "ACCEPTANCE_LINES", None) or [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
