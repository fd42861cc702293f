"""Cell association: the distributed dual-decomposition algorithm with
admission control, and the Max-SINR baseline.

Each round simulates the message protocol synchronously: BSs broadcast
their multipliers, users request their best-priced BS, overloaded BSs
evict and forward, then multipliers move along the dual subgradient.  The
subgradient uses the raw requested demand (which may exceed a budget);
the admission step is what keeps every recorded assignment feasible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import LinkTable
from .qos import QosTable

UNSERVED = -1


@dataclass(frozen=True)
class UserRequest:
    """One user's ranked candidate list for a round.

    preference is sorted by descending qualification index (ties broken by
    lower BS index) and contains only feasible links; demands and scores
    are aligned with it.
    """

    user: int
    preference: tuple[int, ...]
    demands: tuple[int, ...]
    scores: tuple[float, ...]


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    mu: np.ndarray
    demand: np.ndarray   # requested load per BS (pre-admission, may exceed budget)
    load: np.ndarray     # admitted load per BS (always <= budget)
    objective: float


@dataclass
class Association:
    """Result of an association run.

    assignment[i] is the serving BS index or UNSERVED.  For the
    distributed algorithm this is the best feasible assignment seen
    across all rounds, not necessarily the last iterate.
    """

    assignment: np.ndarray
    mu: np.ndarray
    iterations: int
    converged: bool
    converged_at: int | None
    objective: float
    trace: list[IterationRecord] = field(default_factory=list)

    def loads(self, qos: QosTable) -> np.ndarray:
        n_b = qos.score.shape[1]
        return assignment_loads(self.assignment, qos.min_rbs, n_b)


def qualification_index(score: float, mu_j: float, n_bar: float) -> float:
    """Price-adjusted attractiveness of a BS: score minus mu_j * n_bar."""
    return score - mu_j * n_bar


def build_request(i: int, qos: QosTable, mu: np.ndarray) -> UserRequest | None:
    """Rank user i's feasible BSs by qualification index; None if there
    is no feasible BS at all (the user stays unserved this run)."""
    feas = np.flatnonzero(qos.feasible[i])
    if feas.size == 0:
        return None
    qi = qos.score[i, feas] - mu[feas] * qos.min_rbs[i, feas]
    order = np.lexsort((feas, -qi))  # descending QI, then lower BS index
    chosen = feas[order]
    return UserRequest(
        user=i,
        preference=tuple(int(j) for j in chosen),
        demands=tuple(int(qos.min_rbs[i, j]) for j in chosen),
        scores=tuple(float(qos.score[i, j]) for j in chosen),
    )


def admission_project(requests: list[UserRequest], budgets: np.ndarray) -> np.ndarray:
    """Project per-user first choices back onto the budget polytope.

    Every user starts at the head of its preference list.  Any overloaded
    BS evicts its largest-demand requesters one at a time (ties: lower
    score first, then higher user index) until it fits; each evicted user
    moves to the next BS on its list, or becomes unserved when the list is
    exhausted.  Pointers only advance, so this terminates.
    """
    n_users = max((r.user for r in requests), default=-1) + 1
    assignment = np.full(n_users, UNSERVED, dtype=np.int64)
    ptr = {r.user: 0 for r in requests}
    by_user = {r.user: r for r in requests}
    at_bs: dict[int, set[int]] = {}
    for r in requests:
        at_bs.setdefault(r.preference[0], set()).add(r.user)

    dirty = set(at_bs)
    while dirty:
        j = min(dirty)
        dirty.discard(j)
        users = at_bs.get(j, set())
        load = sum(by_user[u].demands[ptr[u]] for u in users)
        while load > budgets[j]:
            victim = max(
                users,
                key=lambda u: (by_user[u].demands[ptr[u]], -by_user[u].scores[ptr[u]], u),
            )
            users.discard(victim)
            load -= by_user[victim].demands[ptr[victim]]
            ptr[victim] += 1
            if ptr[victim] < len(by_user[victim].preference):
                nxt = by_user[victim].preference[ptr[victim]]
                at_bs.setdefault(nxt, set()).add(victim)
                dirty.add(nxt)

    for j, users in at_bs.items():
        for u in users:
            assignment[u] = j
    return assignment


def assignment_loads(assignment: np.ndarray, min_rbs: np.ndarray, n_bs: int) -> np.ndarray:
    loads = np.zeros(n_bs, dtype=np.int64)
    for i, j in enumerate(assignment):
        if j != UNSERVED:
            loads[j] += int(min_rbs[i, j])
    return loads


def assignment_objective(assignment: np.ndarray, score: np.ndarray) -> float:
    served = assignment != UNSERVED
    if not served.any():
        return 0.0
    return float(score[np.flatnonzero(served), assignment[served]].sum())


def mu_update(mu: np.ndarray, loads: np.ndarray, budgets: np.ndarray,
              t: int, beta0: float = 0.5) -> np.ndarray:
    """Projected subgradient step with diminishing step size beta0 / t."""
    if t < 1:
        raise ValueError("iteration index starts at 1")
    beta = beta0 / t
    return np.maximum(0.0, mu - beta * (budgets - loads))


def associate_distributed(qos: QosTable, budgets: np.ndarray, *,
                          max_iters: int = 100, stall_window: int = 3,
                          beta0: float = 0.5) -> Association:
    """Run the distributed association until the admitted assignment is
    stable for stall_window consecutive rounds (or max_iters).

    Multipliers move only after every user is accommodated, i.e. on the
    admitted loads; raw demand subgradients with the beta0/t step ring for
    hundreds of rounds at full deployment scale because one round's RB
    excess dwarfs the score scale.  Returns the feasible assignment with
    the highest total score seen at any round; the per-round trace records
    multipliers, requested demand, admitted load, and the admitted
    objective.
    """
    n_users, n_bs = qos.score.shape
    budgets = np.asarray(budgets, dtype=np.int64)
    mu = np.zeros(n_bs)
    requests_all = [build_request(i, qos, mu) for i in range(n_users)]
    have_any = [r for r in requests_all if r is not None]

    best_obj = -np.inf
    best_assignment = np.full(n_users, UNSERVED, dtype=np.int64)
    trace: list[IterationRecord] = []
    prev = None
    streak = 0
    converged = False
    converged_at = None
    t = 0

    for t in range(1, max_iters + 1):
        if t > 1:
            have_any = [build_request(r.user, qos, mu) for r in have_any]
        demand = np.zeros(n_bs, dtype=np.int64)
        for r in have_any:
            demand[r.preference[0]] += r.demands[0]

        assignment = admission_project(have_any, budgets)
        if assignment.shape[0] < n_users:
            assignment = np.concatenate(
                [assignment, np.full(n_users - assignment.shape[0], UNSERVED, dtype=np.int64)])
        loads = assignment_loads(assignment, qos.min_rbs, n_bs)
        obj = assignment_objective(assignment, qos.score)
        trace.append(IterationRecord(t, mu.copy(), demand.copy(), loads, obj))

        if obj > best_obj:
            best_obj = obj
            best_assignment = assignment.copy()

        if prev is not None and np.array_equal(assignment, prev):
            streak += 1
        else:
            streak = 1
        prev = assignment
        if streak >= stall_window:
            converged = True
            converged_at = t - stall_window + 1
            break

        mu = mu_update(mu, loads, budgets, t, beta0)

    if not np.isfinite(best_obj):
        best_obj = 0.0
    return Association(
        assignment=best_assignment,
        mu=mu,
        iterations=t,
        converged=converged,
        converged_at=converged_at,
        objective=best_obj,
        trace=trace,
    )


@dataclass
class MaxSinrResult:
    """Max-SINR baseline outcome plus the per-user time-share factors.

    scale[i] < 1 means user i sits on an overloaded BS and only gets its
    RBs in that fraction of scheduling intervals.
    """

    association: Association
    scale: np.ndarray


def associate_max_sinr(link: LinkTable, qos: QosTable, budgets: np.ndarray) -> MaxSinrResult:
    """Associate every user with its best long-term-SINR BS, ignoring load.

    Overloaded BSs time-share: each attached user keeps its QoS-minimum RB
    demand but is served in a fraction budget/total_demand of intervals.
    Demands that are individually unsatisfiable (outage minima beyond the
    budget) are capped at the budget.
    """
    n_users, n_bs = link.sinr_long.shape
    budgets = np.asarray(budgets, dtype=np.int64)
    choice = np.argmax(link.sinr_long, axis=1)
    demand = np.empty(n_users, dtype=np.int64)
    for i in range(n_users):
        n = qos.min_rbs[i, choice[i]]
        demand[i] = int(n) if np.isfinite(n) else int(budgets[choice[i]])

    scale = np.ones(n_users)
    loads = np.zeros(n_bs, dtype=np.int64)
    for j in range(n_bs):
        mine = np.flatnonzero(choice == j)
        total = int(demand[mine].sum())
        loads[j] = total
        if total > budgets[j]:
            scale[mine] = budgets[j] / total if total > 0 else 0.0

    assoc = Association(
        assignment=choice.astype(np.int64),
        mu=np.zeros(n_bs),
        iterations=1,
        converged=True,
        converged_at=1,
        objective=assignment_objective(choice, np.where(np.isfinite(qos.score), qos.score, 0.0)),
        trace=[],
    )
    return MaxSinrResult(association=assoc, scale=scale)
