"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Every tolerance is pinned here.  All randomness is seeded, so reruns are
bit-identical; run with `pytest tests/test_acceptance.py -v -s` to see the
per-criterion lines.
"""

import itertools
import json
import math
import time

import numpy as np
import pytest

from qoscell import scenario as scn
from qoscell.association import UNSERVED, associate_distributed, associate_max_sinr
from qoscell.channel import build_link_table, outage_probability
from qoscell.cli import EXIT_OK, EXIT_UNSERVED, main
from qoscell.lp import solve_lp
from qoscell.metrics import brute_force_assignment, monte_carlo_outage, rate_cdf
from qoscell.qos import build_qos_table
from qoscell.rballoc import distribute_outage, distribute_rate
from qoscell.runner import evaluate

from util import check_assignment_feasible, mini_scenario

NOISE_W = 7.161434102129027e-15


def _report(criterion, ok, detail):
    line = f"[criterion {criterion}] {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    assert ok, line


def test_criterion_1_outage_formula_vs_monte_carlo():
    """Closed-form outage matches the Monte-Carlo event frequency within
    3 binomial standard errors on 50 randomized links (1e6 samples)."""
    t0 = time.time()
    rng = np.random.default_rng(2024)
    misses = []
    for k in range(50):
        n_int = int(rng.integers(1, 16))
        gains = 10.0 ** rng.uniform(-14.0, -10.0, size=n_int + 1)
        gains[0] = 10.0 ** rng.uniform(-13.0, -10.5)
        powers = rng.choice([39.81, 3.162, 0.1], size=n_int + 1)
        lam = 1.0 / gains
        n = int(rng.integers(1, 21))
        gamma = float(rng.uniform(0.5, 3.0))
        closed = float(outage_probability(lam, powers, NOISE_W, 0, n, gamma))
        p_mc, se = monte_carlo_outage(lam, powers, NOISE_W, 0, n, gamma,
                                      samples=1_000_000, seed=9000 + k)
        if abs(closed - p_mc) >= 3 * se:
            misses.append((k, closed, p_mc, se))
    elapsed = time.time() - t0
    _report(1, not misses and elapsed < 120.0,
            f"50 links, {len(misses)} outside 3 SE, {elapsed:.1f}s")


def test_criterion_2_qos_floor_tightness():
    """Every served user sits exactly at its QoS floor: rate floors give
    n*c >= gamma with (n-1)*c < gamma; outage floors give P_out(n) <= T
    with P_out(n-1) > T when n > 1.  Zero violations allowed."""
    violations = 0
    checked = 0
    for gamma in (1.0, 2.0, 3.0):
        for seed in (1, 2, 3):
            s = scn.generate(scn.preset("sec6-rate", seed=seed, gamma=gamma))
            link = build_link_table(s)
            qos = build_qos_table(s, link)
            a = associate_distributed(qos, s.budgets)
            for i, j in enumerate(a.assignment):
                if j == UNSERVED:
                    continue
                checked += 1
                n = qos.min_rbs[i, j]
                c = link.spec_eff[i, j]
                if not (n * c >= gamma and (n - 1) * c < gamma):
                    violations += 1
    for gamma in (0.8, 1.0, 1.2):
        for seed in (1, 2, 3):
            s = scn.generate(scn.preset("sec6-outage", seed=seed, gamma=gamma))
            link = build_link_table(s)
            qos = build_qos_table(s, link)
            a = associate_distributed(qos, s.budgets)
            for i, j in enumerate(a.assignment):
                if j == UNSERVED:
                    continue
                checked += 1
                n = qos.min_rbs[i, j]
                p = float(outage_probability(link.lam[i], s.powers, NOISE_W, int(j),
                                             n, gamma))
                ok = p <= 0.10
                if n > 1:
                    p_prev = float(outage_probability(link.lam[i], s.powers, NOISE_W,
                                                      int(j), n - 1, gamma))
                    ok = ok and p_prev > 0.10
                if not ok:
                    violations += 1
    _report(2, violations == 0,
            f"{checked} served users across both presets, {violations} violations")


def test_criterion_3_optimality_sandwich():
    """On 200 random small instances: brute force <= LP bound (1e-6),
    distributed <= LP bound, and distributed >= 0.95x brute force in at
    least 90% of instances."""
    t0 = time.time()
    rng = np.random.default_rng(42)
    sandwich_bad = 0
    near = 0
    for _ in range(200):
        s = mini_scenario(rng)
        qos = build_qos_table(s, build_link_table(s))
        d = associate_distributed(qos, s.budgets)
        check_assignment_feasible(d.assignment, qos, s.budgets)
        _, bf = brute_force_assignment(qos, s.budgets)
        lp = solve_lp(qos, s.budgets)
        if bf > lp.objective + 1e-6 or d.objective > lp.objective + 1e-6:
            sandwich_bad += 1
        if d.objective >= 0.95 * bf - 1e-12:
            near += 1
    elapsed = time.time() - t0
    _report(3, sandwich_bad == 0 and near >= 180 and elapsed < 60.0,
            f"sandwich violations {sandwich_bad}, near-optimal {near}/200, "
            f"{elapsed:.1f}s")


def test_criterion_4_convergence():
    """Distributed association on 50 seeds of the rate preset: median
    convergence round <= 25 and max <= 100."""
    rounds = []
    for seed in range(1, 51):
        s = scn.generate(scn.preset("sec6-rate", seed=seed))
        qos = build_qos_table(s, build_link_table(s))
        a = associate_distributed(qos, s.budgets)
        rounds.append(a.converged_at if a.converged else math.inf)
    med = float(np.median(rounds))
    worst = max(rounds)
    _report(4, med <= 25 and worst <= 100,
            f"median convergence round {med:.0f}, max {worst}")


def _static_gain(gamma, seed, p=0.10):
    s = scn.generate(scn.preset("sec6-rate", seed=seed, gamma=gamma))
    rd = evaluate(s, algo="distributed", mode="static").report
    rm = evaluate(s, algo="max-sinr", mode="static").report
    return rd.cdf.percentile(p) / rm.cdf.percentile(p)


def test_criterion_5_cell_edge_rate_gain():
    """Static 10th-percentile gain over Max-SINR, medians over 20 seeds:
    gamma=3 in [1.5, 3.5], gamma=1 in [1.0, 1.4], and medians increase
    with the threshold."""
    medians = {}
    for gamma in (1.0, 2.0, 3.0):
        gains = [_static_gain(gamma, seed) for seed in range(1, 21)]
        medians[gamma] = float(np.median(gains))
    ok = (1.5 <= medians[3.0] <= 3.5 and 1.0 <= medians[1.0] <= 1.4
          and medians[3.0] > medians[2.0] > medians[1.0])
    _report(5, ok, "alpha medians " + ", ".join(
        f"gamma={g}: {m:.3f}" for g, m in sorted(medians.items())))


def test_criterion_6_cdf_dominance():
    """Distributed rate percentiles >= Max-SINR percentiles at p in
    {0.05, 0.10, 0.25, 0.50}, medians over 20 seeds, on both presets."""
    ps = (0.05, 0.10, 0.25, 0.50)
    failures = []
    for preset, mode in (("sec6-rate", "static"), ("sec6-outage", "stochastic")):
        per_p = {p: ([], []) for p in ps}
        for seed in range(1, 21):
            s = scn.generate(scn.preset(preset, seed=seed))
            rd = evaluate(s, algo="distributed", mode=mode).report
            rm = evaluate(s, algo="max-sinr", mode=mode).report
            for p in ps:
                per_p[p][0].append(rd.cdf.percentile(p))
                per_p[p][1].append(rm.cdf.percentile(p))
        for p, (dist, base) in per_p.items():
            if np.median(dist) < np.median(base):
                failures.append((preset, p, float(np.median(dist)),
                                 float(np.median(base))))
    _report(6, not failures, f"4 percentiles x 2 presets, failures: {failures}")


def test_criterion_7_rb_distribution():
    """Phase two strictly improves the objective whenever leftover RBs
    exist at a serving BS; the rate distributor stays within 1% of the
    exhaustive integer optimum; the outage greedy gap is reported."""
    improve_ok = True
    improve_checked = 0
    for preset in ("sec6-rate", "sec6-outage"):
        for seed in (1, 2, 3):
            s = scn.generate(scn.preset(preset, seed=seed))
            base = evaluate(s, algo="distributed", phase="association")
            plus = evaluate(s, algo="distributed", phase="rb")
            assign = base.association.assignment
            served_bs = np.bincount(assign[assign != UNSERVED], minlength=s.n_bs)
            has_leftover = np.any((base.allocation.leftover_before > 0) & (served_bs > 0))
            if has_leftover:
                improve_checked += 1
                if not plus.report.objective > base.report.objective:
                    improve_ok = False

    rng = np.random.default_rng(77)
    rate_worst = 1.0
    for _ in range(100):
        k = int(rng.integers(1, 5))
        c = rng.uniform(0.2, 5.0, size=k)
        floors = rng.integers(1, 4, size=k)
        budget = int(rng.integers(floors.sum(), 21))
        n = distribute_rate(c, floors, budget)
        got = sum(math.log1p(ni * ci) for ni, ci in zip(n, c))
        best = -math.inf
        spare = budget - int(floors.sum())
        for extra in itertools.product(range(spare + 1), repeat=k):
            if sum(extra) != spare:
                continue
            val = sum(math.log1p((f + e) * ci) for f, e, ci in zip(floors, extra, c))
            best = max(best, val)
        rate_worst = min(rate_worst, got / best if best > 0 else 1.0)

    greedy_gaps = []
    for trial in range(30):
        k = int(rng.integers(1, 4))
        gains = 10.0 ** rng.uniform(-13.0, -11.0, size=(k, 3))
        powers = np.array([39.81, 3.162, 3.162])
        lam = 1.0 / gains
        gammas = rng.uniform(0.5, 2.0, size=k)
        floors = rng.integers(1, 3, size=k)
        budget = int(rng.integers(floors.sum(), floors.sum() + 8))

        def pout(u, n):
            return float(outage_probability(lam[u], powers, NOISE_W, 0, n, gammas[u]))

        greedy = distribute_outage(pout, floors, budget)
        got = sum(math.log1p(-pout(u, int(nu))) for u, nu in enumerate(greedy))
        best = -math.inf
        spare = budget - int(floors.sum())
        for extra in itertools.product(range(spare + 1), repeat=k):
            if sum(extra) != spare:
                continue
            val = sum(math.log1p(-pout(u, int(f + e)))
                      for u, (f, e) in enumerate(zip(floors, extra)))
            best = max(best, val)
        greedy_gaps.append(best - got)

    ok = improve_ok and improve_checked > 0 and rate_worst >= 0.99
    _report(7, ok,
            f"phase-2 improved {improve_checked} runs; rate ratio worst "
            f"{rate_worst:.4f}; outage greedy gap max {max(greedy_gaps):.3e} "
            f"(median {np.median(greedy_gaps):.3e}, no threshold)")


def _cell(preset_name, seed, gamma=None, **overrides):
    from dataclasses import replace
    cfg = scn.preset(preset_name, seed=seed, gamma=gamma)
    if overrides:
        cfg = replace(cfg, **overrides)
    return scn.generate(cfg)


def test_criterion_8_trend_reproduction():
    """User-count sweep: distributed per-user utility stays flat (relative
    spread < 20%) and the no-outage log-probability decreases; femto-count
    sweep: distributed beats Max-SINR at every point, both variants."""
    seeds = (1, 2, 3, 4, 5)

    # user sweep, rate problem: flat per-user utility
    med_avg = []
    for count in (100, 150, 200):
        vals = []
        for seed in seeds:
            s = _cell("sec6-rate", seed, users_per_macro=count)
            vals.append(evaluate(s, algo="distributed", mode="stochastic").report.avg_utility)
        med_avg.append(float(np.median(vals)))
    spread = (max(med_avg) - min(med_avg)) / np.mean(med_avg)

    # user sweep, outage problem: log10(1 - global outage) decreasing
    med_log = []
    for count in (100, 150, 200):
        vals = []
        for seed in seeds:
            s = _cell("sec6-outage", seed, users_per_macro=count)
            vals.append(evaluate(s, algo="distributed").report.log10_no_outage)
        med_log.append(float(np.median(vals)))
    decreasing = med_log[0] > med_log[1] > med_log[2]

    # femto sweep: distributed >= Max-SINR at every point
    femto_ok = True
    for count in (5, 10, 15):
        for preset, metric in (("sec6-rate", "avg_utility"),
                               ("sec6-outage", "log10_no_outage")):
            dist, base = [], []
            for seed in seeds:
                s = _cell(preset, seed, femto_per_macro=count)
                dist.append(getattr(evaluate(s, algo="distributed").report, metric))
                base.append(getattr(evaluate(s, algo="max-sinr").report, metric))
            if np.median(dist) < np.median(base):
                femto_ok = False

    ok = spread < 0.20 and decreasing and femto_ok
    _report(8, ok,
            f"user-sweep utility spread {spread:.1%}, outage trend "
            f"{' > '.join(f'{v:.2f}' for v in med_log)}, femto dominance "
            f"{'ok' if femto_ok else 'violated'}")


def test_criterion_9_determinism(tmp_path, capsys):
    """Re-running an identical manifest produces byte-identical outputs."""
    gen_out = tmp_path / "scenario"
    rc = main(["generate", "--preset", "sec6-rate", "--seed", "1",
               "--out", str(gen_out)])
    assert rc == EXIT_OK
    scenario_path = json.loads(capsys.readouterr().out)["scenario"]

    outs = (tmp_path / "a", tmp_path / "b")
    for out in outs:
        rc = main(["run", scenario_path, "--algo", "distributed", "--phase", "rb",
                   "--mode", "stochastic", "--no-figures", "--out", str(out)])
        assert rc in (EXIT_OK, EXIT_UNSERVED)
    identical = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()
                    for n in ("report.json", "cdf.csv", "trace.csv"))
    with capsys.disabled():
        _report(9, identical, "report.json, cdf.csv, trace.csv byte-identical")
