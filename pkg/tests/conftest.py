import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qoscell.model import BaseStation, PhysicalConstants, RateQos, Scenario, Tier, User


@pytest.fixture
def scenario_3x2():
    """Hand-built 3-user / 2-BS rate scenario used by the channel oracle
    tests: one macro at the origin corner, one femto 300 m away."""
    constants = PhysicalConstants()
    stations = (
        BaseStation(0, Tier.MACRO, (0.0, 0.0), 46.0, 20),
        BaseStation(1, Tier.FEMTO, (300.0, 0.0), 20.0, 10),
    )
    users = (
        User(0, (100.0, 0.0), RateQos(2.0)),
        User(1, (250.0, 50.0), RateQos(2.0)),
        User(2, (40.0, 150.0), RateQos(2.0)),
    )
    return Scenario(stations, users, constants, (400.0, 400.0), rng_seed=7)


@pytest.fixture
def outage_link():
    """One signal BS plus two interferers with hand-picked parameters, as
    (lam_row, powers, noise, serving_index)."""
    gains = np.array([3.0e-12, 8.0e-13, 2.5e-13])
    powers = np.array([39.81, 3.162, 3.162])
    noise = 7.161434102129027e-15
    return 1.0 / gains, powers, noise, 0
