import numpy as np
import pytest
from scipy.stats import unitary_group

from qrepeater.fock import ModeId, create_photon, make_vacuum


def photons(state, *modes):
    for m in modes:
        state = create_photon(state, m)
    return state


def singlet(a="a", b="b"):
    ha, va, hb, vb = ModeId(a, "H"), ModeId(a, "V"), ModeId(b, "H"), ModeId(b, "V")
    vac = make_vacuum([ha, va, hb, vb], [])
    return (photons(vac, ha, vb) - photons(vac, va, hb)).scaled(1 / np.sqrt(2))


def random_unitary(n, rng):
    return unitary_group.rvs(n, random_state=rng) if n > 1 else np.array([[np.exp(2j * np.pi * rng.random())]])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
