import numpy as np
import pytest

from qoscell import scenario as scn
from qoscell.association import UNSERVED
from qoscell.runner import evaluate

from util import mini_scenario


@pytest.fixture(scope="module")
def small_rate_scenario():
    return scn.generate(scn.DeploymentConfig(users_per_macro=30, seed=8, gamma=2.0))


@pytest.fixture(scope="module")
def small_outage_scenario():
    return scn.generate(scn.DeploymentConfig(users_per_macro=20, seed=8,
                                             qos_variant="outage", gamma=1.0))


def test_evaluate_rejects_unknown_inputs(small_rate_scenario):
    with pytest.raises(ValueError):
        evaluate(small_rate_scenario, algo="magic")
    with pytest.raises(ValueError):
        evaluate(small_rate_scenario, phase="later")
    with pytest.raises(ValueError):
        evaluate(small_rate_scenario, mode="sideways")
    with pytest.raises(ValueError):
        evaluate(small_rate_scenario, algo="lp-optimal", phase="rb")


def test_evaluate_distributed_static(small_rate_scenario):
    res = evaluate(small_rate_scenario, algo="distributed", mode="static")
    r = res.report
    assert r.served + r.unserved == small_rate_scenario.n_users
    assert r.qos_violations == 0
    assert r.converged
    # every reported rate respects the threshold
    assert np.all(r.rates >= 2.0 - 1e-9)


def test_evaluate_stochastic_is_reproducible(small_rate_scenario):
    a = evaluate(small_rate_scenario, algo="distributed", mode="stochastic")
    b = evaluate(small_rate_scenario, algo="distributed", mode="stochastic")
    assert np.array_equal(a.report.rates, b.report.rates)


def test_evaluate_same_fading_for_all_algorithms(small_rate_scenario):
    # paired comparison: identical channel realization across algorithms
    da = evaluate(small_rate_scenario, algo="distributed", mode="stochastic")
    mb = evaluate(small_rate_scenario, algo="max-sinr", mode="stochastic")
    i = int(np.flatnonzero(da.association.assignment ==
                           mb.association.assignment)[0])
    j = int(da.association.assignment[i])
    n_d = da.allocation.n[i]
    n_m = mb.allocation.n[i]
    if n_d == n_m and mb.report.scaled_users == 0:
        served_d = np.flatnonzero(da.association.assignment != UNSERVED)
        served_m = np.flatnonzero(mb.association.assignment != UNSERVED)
        rd = da.report.rates[list(served_d).index(i)]
        rm = mb.report.rates[list(served_m).index(i)]
        assert rd == pytest.approx(rm)


def test_evaluate_outage_reports_global_outage(small_outage_scenario):
    res = evaluate(small_outage_scenario, algo="distributed")
    r = res.report
    assert r.global_outage_prob is not None
    assert 0.0 <= r.global_outage_prob <= 1.0
    assert r.log10_no_outage <= 0.0
    assert r.qos_violations == 0


def test_evaluate_rb_phase_improves_objective(small_rate_scenario, small_outage_scenario):
    for s in (small_rate_scenario, small_outage_scenario):
        base = evaluate(s, algo="distributed", phase="association")
        plus = evaluate(s, algo="distributed", phase="rb")
        has_leftover = np.any((base.allocation.leftover_before > 0)
                              & (np.bincount(
                                  base.association.assignment[
                                      base.association.assignment != UNSERVED],
                                  minlength=s.n_bs) > 0))
        if has_leftover:
            assert plus.report.objective > base.report.objective


def test_evaluate_lp_optimal_bounds_everyone(small_rate_scenario):
    lp = evaluate(small_rate_scenario, algo="lp-optimal")
    for algo in ("distributed", "lp-rounded"):
        other = evaluate(small_rate_scenario, algo=algo)
        assert other.association.objective <= lp.report.objective + 1e-6


def test_evaluate_max_sinr_scaling_reported():
    rng = np.random.default_rng(2)
    # tight budgets make overload likely
    s = scn.generate(scn.DeploymentConfig(users_per_macro=60, seed=3, gamma=3.0,
                                          rb_budgets=(20, 10, 5)))
    res = evaluate(s, algo="max-sinr", mode="static")
    assert res.report.scaled_users > 0
    assert res.report.qos_violations > 0
    assert res.report.extras == {}
