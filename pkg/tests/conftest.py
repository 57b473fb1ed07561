import math

import numpy as np
import pytest
from scipy.integrate import quad

from sawphoton.mc import DetectorModel, Experiment, PumpModel
from sawphoton.physics import InjectionSpec, RecombinationModel, SawParams

# device numbers used throughout: 3 GHz SAW, 30 mV, 1 um wavelength, 100 ps radiative time
F_SAW = 3e9
GAMMA = 1e10


@pytest.fixture
def saw():
    return SawParams(F_SAW, 3000.0, 0.03)


def ideal_pump(n=1, divider=1, f=F_SAW, **kw):
    kw.setdefault("p_miss", 0.0)
    kw.setdefault("p_extra", 0.0)
    return PumpModel(InjectionSpec(n, divider, f), **kw)


def experiment_at(gamma_t, n=1, n_cycles=10_000, f=1e9, beta=1.0, detector=None, **pump_kw):
    """Experiment with injection period 1/f and total recombination rate gamma_t * f."""
    pump = ideal_pump(n, 1, f, **pump_kw)
    gamma = gamma_t * f
    recomb = RecombinationModel(gamma * beta, gamma * (1 - beta))
    return Experiment(pump, recomb, detector or DetectorModel(), n_cycles)


MINIMAL_CONFIG = {
    "saw": {"frequency": 3e9, "amplitude": 0.03},
    "pump": {"electrons_per_packet": 1, "divider": 1},
    "recombination": {"radiative_rate": 1e10},
    "run": {"n_cycles": 1000},
}


def wrapped_exponential_masses(gamma_t, n_bins):
    """Bin masses of an exponential delay folded onto one period (period = 1), by quadrature."""
    wraps = int(60 / gamma_t) + 2

    def density(phi):
        return sum(gamma_t * math.exp(-gamma_t * (phi + k)) for k in range(wraps))

    edges = np.linspace(0, 1, n_bins + 1)
    return np.array([quad(density, a, b, epsabs=1e-14, epsrel=1e-12)[0] for a, b in zip(edges, edges[1:])])


_criteria = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line; all lines are echoed at the end of the run."""
    lines = request.config.stash.setdefault(_criteria, [])

    def record(number, name, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number:>2}: {name}: {detail}"
        lines.append(line)
        print(line)
        assert passed, line
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_criteria, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
