"""Pipeline orchestration: scenario -> association -> RB allocation -> report.

One evaluate() call runs a single algorithm on a scenario and produces an
EvalReport.  The fading realization used for stochastic rates is derived
from the scenario seed alone, so every algorithm is compared on the same
channel draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .association import (UNSERVED, Association, MaxSinrResult, associate_distributed,
                          associate_max_sinr)
from .channel import LinkTable, build_link_table, draw_fading, instantaneous_sinr
from .lp import LpSolution, round_lp, solve_lp
from .metrics import EvalReport, global_outage, served_log_no_outage
from .model import OutageQos, Scenario
from .qos import LOG_UTILITY, QosTable, UtilityBundle, build_qos_table
from .rballoc import RbAllocation, distribute_leftover, floors_allocation

ALGORITHMS = ("distributed", "max-sinr", "lp-optimal", "lp-rounded")
PHASES = ("association", "rb")
MODES = ("static", "stochastic")

_FADING_STREAM = 0xFAD1


@dataclass
class RunResult:
    """EvalReport plus the intermediate artifacts a caller may want."""

    report: EvalReport
    association: Association | None
    allocation: RbAllocation | None
    lp: LpSolution | None
    link: LinkTable
    qos: QosTable


def fading_rng(scenario: Scenario):
    return np.random.default_rng(np.random.SeedSequence((scenario.rng_seed, _FADING_STREAM)))


def _qos_violations(scenario: Scenario, link: LinkTable, assignment: np.ndarray,
                    n_alloc: np.ndarray, scale: np.ndarray | None) -> int:
    """Count served users whose QoS is not met at their allocation.

    Rate users need (scaled) long-term rate >= gamma; outage users need
    the effective outage probability <= t_max.
    """
    from .channel import outage_probability

    bad = 0
    noise = scenario.constants.noise_power_w
    for i, j in enumerate(assignment):
        if j == UNSERVED:
            continue
        q = scenario.users[i].qos
        f = 1.0 if scale is None else float(scale[i])
        if isinstance(q, OutageQos):
            p = float(outage_probability(link.lam[i], scenario.powers, noise,
                                         int(j), n_alloc[i], q.gamma))
            if 1.0 - f * (1.0 - p) > q.t_max + 1e-12:
                bad += 1
        else:
            if f * n_alloc[i] * link.spec_eff[i, int(j)] < q.gamma - 1e-9:
                bad += 1
    return bad


def evaluate(scenario: Scenario, algo: str = "distributed", phase: str = "association",
             mode: str = "static", utility: UtilityBundle = LOG_UTILITY,
             max_iters: int = 100, stall_window: int = 3, beta0: float = 0.5) -> RunResult:
    """Run one algorithm end to end on a scenario.

    phase 'rb' distributes each BS's leftover RBs after association (not
    available for the fractional lp-optimal output).  mode 'static'
    reports long-term rates; 'stochastic' draws one fading realization
    per user.  Outage scenarios are always evaluated stochastically.
    """
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}")
    if phase not in PHASES:
        raise ValueError(f"unknown phase {phase!r}")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if algo == "lp-optimal" and phase == "rb":
        raise ValueError("rb distribution needs an integral assignment; "
                         "use lp-rounded instead of lp-optimal")
    outage_variant = scenario.qos_variant == "outage"
    if outage_variant:
        mode = "stochastic"

    link = build_link_table(scenario)
    qos = build_qos_table(scenario, link, utility)
    budgets = scenario.budgets

    association = None
    allocation = None
    lp = None
    scale = None

    if algo == "distributed":
        association = associate_distributed(qos, budgets, max_iters=max_iters,
                                            stall_window=stall_window, beta0=beta0)
    elif algo == "max-sinr":
        res: MaxSinrResult = associate_max_sinr(link, qos, budgets)
        association = res.association
        scale = res.scale
    elif algo in ("lp-optimal", "lp-rounded"):
        lp = solve_lp(qos, budgets)
        if algo == "lp-rounded":
            association = round_lp(lp, qos, budgets)

    if mode == "stochastic":
        h = draw_fading(link.gains, fading_rng(scenario))
        c_inst = np.log2(1.0 + instantaneous_sinr(h, scenario.powers,
                                                  scenario.constants.noise_power_w))
    else:
        c_inst = link.spec_eff

    if algo == "lp-optimal":
        x = lp.x
        n_bar = np.where(np.isfinite(qos.min_rbs) & qos.feasible, qos.min_rbs, 0.0)
        per_user = (x * n_bar * c_inst).sum(axis=1)
        served_mask = x.sum(axis=1) > 1e-9
        rates = per_user[served_mask]
        report = EvalReport(
            rates=rates,
            sum_utility=float(utility.value(rates).sum()) if rates.size else 0.0,
            unserved=int((~served_mask).sum()),
            served=int(served_mask.sum()),
            iterations=1,
            converged=lp.status == "optimal",
            converged_at=1,
            objective=lp.objective,
            qos_violations=0,
            extras={"lp_status": lp.status},
        )
        return RunResult(report, None, None, lp, link, qos)

    if phase == "rb":
        allocation = distribute_leftover(scenario, link, qos, association, utility)
    else:
        allocation = floors_allocation(association, qos, budgets)
    n_alloc = allocation.n

    assignment = association.assignment
    served_idx = np.flatnonzero(assignment != UNSERVED)
    cols = assignment[served_idx]
    f = np.ones(len(served_idx)) if scale is None else scale[served_idx]
    rates = f * n_alloc[served_idx] * c_inst[served_idx, cols]

    objective = association.objective
    gp = lg = None
    if outage_variant:
        terms = served_log_no_outage(assignment, n_alloc, link.lam, scenario.powers,
                                     scenario.constants.noise_power_w, scenario.gammas,
                                     scale)
        gp, lg = global_outage(terms)
        if phase == "rb" or scale is not None:
            objective = float(terms.sum())
    elif phase == "rb":
        objective = float(utility.value(
            n_alloc[served_idx] * link.spec_eff[served_idx, cols]).sum())

    report = EvalReport(
        rates=rates,
        sum_utility=float(utility.value(rates).sum()) if rates.size else 0.0,
        unserved=int(scenario.n_users - served_idx.size),
        served=int(served_idx.size),
        iterations=association.iterations,
        converged=association.converged,
        converged_at=association.converged_at,
        objective=objective,
        qos_violations=_qos_violations(scenario, link, assignment, n_alloc, scale),
        global_outage_prob=gp,
        log10_no_outage=lg,
        scaled_users=0 if scale is None else int((scale < 1.0).sum()),
    )
    return RunResult(report, association, allocation, lp, link, qos)
