import numpy as np
import pytest

from lcsdyn import (Chart, ConformalAtlas, StepperConfig, System,
                    harmonic_1d)
from lcsdyn.systems import _free_particle


def free_line_system(c: float = 0.1, box: float = 50.0) -> System:
    """Free particle on an interval with sigma = c q (1 DOF)."""
    chart = Chart(id=0, dim=1, lower=[-box], upper=[box],
                  sigma=lambda q: c * float(np.atleast_1d(q)[0]),
                  sigma_grad=lambda q: np.array([c]),
                  sigma_hess=lambda q: np.zeros((1, 1)))
    L, H = _free_particle(1)
    return System(name="free_line", n=1, atlas=ConformalAtlas(charts=(chart,)),
                  lagrangian=L, hamiltonian=H, start_chart=0, sigma_params=(c,))


@pytest.fixture
def free_line():
    return free_line_system()


@pytest.fixture
def free_line_flat():
    return free_line_system(0.0)


@pytest.fixture
def harmonic():
    return harmonic_1d(0.1)


@pytest.fixture
def harmonic_flat():
    return harmonic_1d(0.0)


@pytest.fixture
def tight_cfg():
    return StepperConfig(tol=1e-12)
