import os

import numpy as np
import pytest

from apps.marchenko.models import ExponentialWell, Kinematics, PhaseShiftSample
from apps.marchenko.services import forward_oracle


@pytest.fixture
def kinematics():
    return Kinematics()


@pytest.fixture(scope="session")
def exponential_well():
    return ExponentialWell(v0_re=-3.0, a=1.5)


@pytest.fixture(scope="session")
def exponential_samples(exponential_well):
    """Forward scan of the reference well on 0.1..8 fm^-1."""
    q = 0.1 + 0.1 * np.arange(80)
    return forward_oracle.scan_smatrix(exponential_well, q)


@pytest.fixture
def null_samples():
    return [PhaseShiftSample(q=q, delta=0.0) for q in (0.5, 1.0, 1.5, 2.0, 2.5)]


@pytest.fixture(autouse=True)
def _isolate_env(monkeypatch):
    for key in list(os.environ):
        if key.startswith("MARCHENKO_"):
            monkeypatch.delenv(key, raising=False)
