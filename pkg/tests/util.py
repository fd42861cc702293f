"""Shared helpers for the test suite: small random instances and checks."""

import numpy as np

from qoscell.association import UNSERVED
from qoscell.model import (BaseStation, PhysicalConstants, RateQos, Scenario, Tier, User)

TIER_POWER = {Tier.MACRO: 46.0, Tier.MICRO: 35.0, Tier.FEMTO: 20.0}


def mini_scenario(rng, max_users=8, max_bs=3, area=600.0, budget_range=(2, 13),
                  gamma_range=(0.5, 3.0)):
    """Small random deployment through the real channel model.

    These are the randomized association instances: score and demand get
    the problem's own structure (good links are cheap links) instead of
    adversarial independent draws.
    """
    n_b = int(rng.integers(1, max_bs + 1))
    n_u = int(rng.integers(2, max_users + 1))
    tiers = (Tier.MACRO, Tier.MICRO, Tier.FEMTO)
    stations = []
    for j in range(n_b):
        tier = tiers[int(rng.integers(0, 3))]
        stations.append(BaseStation(j, tier, tuple(rng.uniform(0, area, 2)),
                                    TIER_POWER[tier], int(rng.integers(*budget_range))))
    gamma = float(rng.uniform(*gamma_range))
    users = [User(i, tuple(rng.uniform(0, area, 2)), RateQos(gamma)) for i in range(n_u)]
    return Scenario(tuple(stations), tuple(users), PhysicalConstants(),
                    (area, area), int(rng.integers(0, 2 ** 31)))


def check_assignment_feasible(assignment, qos, budgets):
    """(RC) and (AC): integer loads within budgets, one BS per user,
    only feasible links used."""
    n_bs = len(budgets)
    loads = np.zeros(n_bs)
    for i, j in enumerate(assignment):
        if j == UNSERVED:
            continue
        assert 0 <= j < n_bs
        assert np.isfinite(qos.score[i, j]), f"user {i} on infeasible link {j}"
        loads[j] += qos.min_rbs[i, j]
    assert np.all(loads <= budgets), f"loads {loads} exceed budgets {budgets}"
