import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qoscell.channel import build_link_table, outage_probability
from qoscell.model import (BaseStation, OutageQos, PhysicalConstants, RateQos, Scenario,
                           Tier, User)
from qoscell.qos import (INFEASIBLE, LOG_UTILITY, build_qos_table, min_rbs_outage,
                         min_rbs_rate)


def test_min_rbs_rate_examples():
    assert min_rbs_rate(3.0, 1.2) == 3
    assert min_rbs_rate(1.7, 1.7) == 1
    assert min_rbs_rate(2.0, 1.0) == 2  # exact division: no extra RB
    assert min_rbs_rate(1.0, 0.0) == INFEASIBLE
    assert min_rbs_rate(1.0, -0.5) == INFEASIBLE


@given(st.floats(min_value=0.05, max_value=10.0), st.floats(min_value=0.01, max_value=8.0))
def test_min_rbs_rate_tightness(gamma, c_bar):
    n = min_rbs_rate(gamma, c_bar)
    assert n >= 1
    assert n * c_bar >= gamma or math.isclose(n * c_bar, gamma, rel_tol=1e-12)
    assert (n - 1) * c_bar < gamma


def _scan_min_rbs_outage(gamma, t_max, lam, powers, noise, j, n_cap):
    """Unit-increment oracle straight off the definition."""
    for n in range(1, n_cap + 1):
        if float(outage_probability(lam, powers, noise, j, n, gamma)) <= t_max:
            return float(n)
    return INFEASIBLE


def test_min_rbs_outage_matches_linear_scan(outage_link):
    lam, powers, noise, j = outage_link
    rng = np.random.default_rng(4)
    for _ in range(25):
        gamma = float(rng.uniform(0.5, 3.0))
        t_max = float(rng.uniform(0.02, 0.5))
        n_cap = int(rng.integers(1, 60))
        fast = min_rbs_outage(gamma, t_max, lam, powers, noise, j, n_cap)
        slow = _scan_min_rbs_outage(gamma, t_max, lam, powers, noise, j, n_cap)
        assert fast == slow


def test_min_rbs_outage_boundary_is_exact(outage_link):
    # t_max set to P_out(5) exactly must return 5 (monotone boundary)
    lam, powers, noise, j = outage_link
    gamma = 2.0
    t5 = float(outage_probability(lam, powers, noise, j, 5, gamma))
    t4 = float(outage_probability(lam, powers, noise, j, 4, gamma))
    assert t4 > t5
    assert min_rbs_outage(gamma, t5, lam, powers, noise, j, 50) == 5


def test_min_rbs_outage_slack_constraint(outage_link):
    lam, powers, noise, j = outage_link
    p1 = float(outage_probability(lam, powers, noise, j, 1, 1.0))
    assert p1 < 1.0
    assert min_rbs_outage(1.0, 1.0 - 1e-12, lam, powers, noise, j, 50) == 1


def test_min_rbs_outage_infeasible_marker(outage_link):
    lam, powers, noise, j = outage_link
    # cap of zero can never satisfy anything
    assert min_rbs_outage(1.0, 0.1, lam, powers, noise, j, 0) == INFEASIBLE
    # an absurdly strict target within a small cap
    p_cap = float(outage_probability(lam, powers, noise, j, 3, 3.0))
    assert min_rbs_outage(3.0, p_cap / 10.0, lam, powers, noise, j, 3) == INFEASIBLE


def _symmetric_scenario(variant):
    constants = PhysicalConstants()
    stations = (
        BaseStation(0, Tier.MICRO, (100.0, 200.0), 35.0, 30),
        BaseStation(1, Tier.MICRO, (300.0, 200.0), 35.0, 30),
    )
    qos = OutageQos(1.0, 0.2) if variant == "outage" else RateQos(1.0)
    users = (
        User(0, (200.0, 100.0), qos),  # on the axis of symmetry
        User(1, (200.0, 300.0), qos),
    )
    return Scenario(stations, users, constants, (400.0, 400.0), rng_seed=0)


@pytest.mark.parametrize("variant", ["rate", "outage"])
def test_qos_table_symmetry_under_bs_swap(variant):
    s = _symmetric_scenario(variant)
    table = build_qos_table(s, build_link_table(s))
    assert np.allclose(table.score[:, 0], table.score[:, 1], rtol=1e-9)
    assert np.array_equal(table.min_rbs[:, 0], table.min_rbs[:, 1])


def test_qos_table_rate_identity_case(scenario_3x2):
    # gamma equal to the spectral efficiency on every link: one RB each
    link = build_link_table(scenario_3x2)
    from dataclasses import replace
    users = tuple(replace(u, qos=RateQos(float(link.spec_eff[u.id, 0])))
                  for u in scenario_3x2.users)
    # per-user gamma equals c on BS 0, so min_rbs there must be exactly 1
    s = replace(scenario_3x2, users=users)
    table = build_qos_table(s, build_link_table(s))
    assert np.all(table.min_rbs[:, 0] == 1)
    for i in range(3):
        assert table.score[i, 0] == pytest.approx(
            float(LOG_UTILITY.value(link.spec_eff[i, 0])), rel=1e-12)


def test_qos_table_outage_scores_recomputed(scenario_3x2):
    from dataclasses import replace
    users = tuple(replace(u, qos=OutageQos(1.0, 0.25)) for u in scenario_3x2.users)
    s = replace(scenario_3x2, users=users)
    link = build_link_table(s)
    table = build_qos_table(s, link)
    assert table.variant == "outage"
    noise = s.constants.noise_power_w
    for i in range(s.n_users):
        for j in range(s.n_bs):
            n = table.min_rbs[i, j]
            if not np.isfinite(n):
                assert table.score[i, j] == -np.inf
                continue
            p = float(outage_probability(link.lam[i], s.powers, noise, j, n, 1.0))
            assert p <= 0.25
            if n > 1:
                p_prev = float(outage_probability(link.lam[i], s.powers, noise, j,
                                                  n - 1, 1.0))
                assert p_prev > 0.25
            assert table.score[i, j] == pytest.approx(math.log1p(-p), rel=1e-9)


def test_qos_table_marks_over_budget_links_infeasible(scenario_3x2):
    # the femto has 10 RBs; a gamma too high for its weak links must yield -inf
    from dataclasses import replace
    users = tuple(replace(u, qos=RateQos(80.0)) for u in scenario_3x2.users)
    s = replace(scenario_3x2, users=users)
    link = build_link_table(s)
    table = build_qos_table(s, link)
    raw = np.ceil(80.0 / link.spec_eff)
    over = raw > s.budgets[None, :]
    assert np.all(np.isneginf(table.score[over]))
    assert np.all(np.isfinite(table.score[~over]))
