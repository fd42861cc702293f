"""Second-phase RB distribution: hand out each BS's leftover RBs.

Rate problem: the per-BS subproblem is concave with a water-filling-style
KKT solution; the multiplier is found by bisection, the continuous
allocation rounded, and the budget restored by marginal-utility repair.

Outage problem: one RB at a time goes to the user whose outage
probability drops the most; the per-user floors are never reduced.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .association import UNSERVED, Association
from .channel import LinkTable, outage_probability
from .model import Scenario
from .qos import LOG_UTILITY, QosTable, UtilityBundle

# Relative bracket width for the KKT multiplier bisection.
NU_REL_TOL = 1e-10


@dataclass
class RbAllocation:
    """Integer RB counts per user at its serving BS.

    n[i] is 0 for unserved users; leftover_before[j] is K_j, the RBs BS j
    had spare after the association floors; leftover_after[j] is what
    remains once distribution ran (0 unless the BS serves nobody).
    """

    n: np.ndarray
    leftover_before: np.ndarray
    leftover_after: np.ndarray


def floors_allocation(association: Association, qos: QosTable,
                      budgets: np.ndarray) -> RbAllocation:
    """The association-phase allocation: every served user at its QoS floor."""
    assignment = association.assignment
    n_users = assignment.shape[0]
    n_bs = len(budgets)
    n = np.zeros(n_users, dtype=np.int64)
    for i, j in enumerate(assignment):
        if j != UNSERVED:
            m = qos.min_rbs[i, j]
            # unsatisfiable minima (Max-SINR picks ignoring feasibility)
            # are capped at the budget, matching the baseline's demand
            n[i] = int(m) if np.isfinite(m) else int(budgets[j])
    loads = np.zeros(n_bs, dtype=np.int64)
    for i, j in enumerate(assignment):
        if j != UNSERVED:
            loads[j] += n[i]
    leftover = np.asarray(budgets, dtype=np.int64) - loads
    return RbAllocation(n=n, leftover_before=leftover.copy(), leftover_after=leftover.copy())


def _solve_nu(c_bar: np.ndarray, floors: np.ndarray, budget: int,
              utility: UtilityBundle) -> float:
    """Bisect for the multiplier at which the continuous allocation uses
    the whole budget.  The left-hand side is monotone decreasing in nu."""

    def lhs(nu):
        cont = (1.0 / c_bar) * utility.deriv_inv(nu / c_bar)
        return float(np.maximum(cont, floors).sum())

    hi = float(np.max(c_bar * utility.deriv(floors * c_bar)))
    lo = hi / 2.0
    for _ in range(200):
        if lhs(lo) >= budget:
            break
        hi = lo
        lo /= 2.0
    else:
        raise RuntimeError("could not bracket the RB multiplier")
    while (hi - lo) > NU_REL_TOL * hi:
        mid = 0.5 * (lo + hi)
        if lhs(mid) >= budget:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def distribute_rate(c_bar: np.ndarray, floors: np.ndarray, budget: int,
                    utility: UtilityBundle = LOG_UTILITY) -> np.ndarray:
    """Integer allocation for one BS maximizing sum U(n_i * c_i) subject to
    n_i >= floors_i and sum n_i = budget."""
    c_bar = np.asarray(c_bar, dtype=float)
    floors = np.asarray(floors, dtype=np.int64)
    if c_bar.size == 0:
        return np.zeros(0, dtype=np.int64)
    total_floor = int(floors.sum())
    if total_floor > budget:
        raise ValueError("floors exceed the RB budget")
    if total_floor == budget:
        return floors.copy()

    nu = _solve_nu(c_bar, floors.astype(float), budget, utility)
    cont = np.maximum((1.0 / c_bar) * utility.deriv_inv(nu / c_bar), floors)
    n = np.maximum(np.floor(cont + 0.5).astype(np.int64), floors)

    def gain(k):
        return utility.value((n[k] + 1) * c_bar[k]) - utility.value(n[k] * c_bar[k])

    def loss(k):
        return utility.value(n[k] * c_bar[k]) - utility.value((n[k] - 1) * c_bar[k])

    while n.sum() > budget:
        movable = np.flatnonzero(n > floors)
        k = movable[np.argmin([loss(k) for k in movable])]
        n[k] -= 1
    while n.sum() < budget:
        k = int(np.argmax([gain(k) for k in range(len(n))]))
        n[k] += 1
    return n


def distribute_outage(pout: Callable[[int, int], float], floors: np.ndarray,
                      budget: int) -> np.ndarray:
    """Greedy allocation for one BS: each leftover RB goes to the user with
    the largest outage-probability decrease (ties: lowest index).

    pout(k, n) must return the outage probability of local user k at n RBs.
    """
    floors = np.asarray(floors, dtype=np.int64)
    n = floors.copy()
    if n.size == 0:
        return n
    total_floor = int(n.sum())
    if total_floor > budget:
        raise ValueError("floors exceed the RB budget")
    current = np.array([pout(k, int(n[k])) for k in range(n.size)])
    for _ in range(budget - total_floor):
        nxt = np.array([pout(k, int(n[k]) + 1) for k in range(n.size)])
        k = int(np.argmax(current - nxt))
        n[k] += 1
        current[k] = nxt[k]
    return n


def distribute_leftover(scenario: Scenario, link: LinkTable, qos: QosTable,
                        association: Association,
                        utility: UtilityBundle = LOG_UTILITY) -> RbAllocation:
    """Run the per-BS distribution over every BS with served users.

    BSs whose floors already exceed their budget (possible only for the
    Max-SINR baseline) are left at the floors.
    """
    alloc = floors_allocation(association, qos, scenario.budgets)
    assignment = association.assignment
    noise = scenario.constants.noise_power_w
    for j in range(scenario.n_bs):
        mine = np.flatnonzero(assignment == j)
        if mine.size == 0 or alloc.leftover_before[j] <= 0:
            continue
        budget = int(scenario.budgets[j])
        floors = alloc.n[mine]
        if qos.variant == "rate":
            new_n = distribute_rate(link.spec_eff[mine, j], floors, budget, utility)
        else:
            gammas = scenario.gammas[mine]

            def pout(k, n, _mine=mine, _g=gammas, _j=j):
                return float(outage_probability(link.lam[_mine[k]], scenario.powers,
                                                noise, _j, n, _g[k]))

            new_n = distribute_outage(pout, floors, budget)
        alloc.n[mine] = new_n
        alloc.leftover_after[j] = budget - int(new_n.sum())
    return alloc
