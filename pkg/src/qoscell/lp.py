"""Exact LP relaxation of the association problem, plus the rounding baseline.

The relaxed problem maximizes sum(a_ij * x_ij) subject to per-BS RB
budgets, at most one BS per user, and 0 <= x <= 1 (the upper box bound is
implied by the per-user row).  Solved with a dense-tableau simplex; x = 0
is always feasible so no phase-one is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .association import Association, UserRequest, admission_project, assignment_objective
from .qos import QosTable

OPTIMAL = "optimal"
ITERATION_LIMIT = "iteration_limit"

# Consecutive non-improving pivots tolerated under the fast (Dantzig)
# rule before switching to Bland's rule; degenerate assignment polytopes
# can cycle otherwise.
STALL_PIVOTS = 30


@dataclass
class SimplexResult:
    x: np.ndarray
    objective: float
    status: str
    duals: np.ndarray          # one per constraint row
    reduced_costs: np.ndarray  # z_j - c_j per structural variable
    iterations: int


def simplex_maximize(c: np.ndarray, a: np.ndarray, b: np.ndarray,
                     max_iters: int | None = None) -> SimplexResult:
    """Maximize c.x subject to a.x <= b, x >= 0, with b >= 0.

    Pivoting uses the largest-coefficient rule but falls back to Bland's
    rule after STALL_PIVOTS degenerate steps, which prevents cycling.
    """
    m, n = a.shape
    if np.any(b < 0):
        raise ValueError("simplex_maximize expects b >= 0")
    if max_iters is None:
        max_iters = 5000 + 50 * (m + n)
    tol = 1e-9

    tab = np.zeros((m + 1, n + m + 1))
    tab[1:, :n] = a
    tab[1:, n:n + m] = np.eye(m)
    tab[1:, -1] = b
    tab[0, :n] = -c
    basis = np.arange(n, n + m)

    bland = False
    stall = 0
    last_obj = 0.0
    it = 0
    while it < max_iters:
        row0 = tab[0, :-1]
        neg = np.flatnonzero(row0 < -tol)
        if neg.size == 0:
            status = OPTIMAL
            break
        col = int(neg[0]) if bland else int(neg[np.argmin(row0[neg])])

        ratios = np.full(m, np.inf)
        pos = tab[1:, col] > tol
        ratios[pos] = tab[1:, -1][pos] / tab[1:, col][pos]
        if not np.isfinite(ratios).any():
            raise RuntimeError("LP unbounded; association polytope should be bounded")
        best = ratios.min()
        cand = np.flatnonzero(ratios <= best + tol)
        row = int(cand[np.argmin(basis[cand])])  # Bland tie-break on leaving var

        tab[row + 1] /= tab[row + 1, col]
        col_vals = tab[:, col].copy()
        col_vals[row + 1] = 0.0
        tab -= np.outer(col_vals, tab[row + 1])
        basis[row] = col
        it += 1

        obj = tab[0, -1]
        if obj > last_obj + tol:
            stall = 0
            bland = False
        else:
            stall += 1
            if stall >= STALL_PIVOTS:
                bland = True
        last_obj = obj
    else:
        status = ITERATION_LIMIT

    x = np.zeros(n + m)
    x[basis] = tab[1:, -1]
    return SimplexResult(
        x=x[:n],
        objective=float(tab[0, -1]),
        status=status,
        duals=tab[0, n:n + m].copy(),
        reduced_costs=tab[0, :n].copy(),
        iterations=it,
    )


@dataclass
class LpSolution:
    """Fractional association variables and the certified optimum.

    mu holds the duals of the per-BS budget rows; they play the same role
    as the multipliers in the distributed algorithm.
    """

    x: np.ndarray
    objective: float
    status: str
    mu: np.ndarray


def solve_lp(qos: QosTable, budgets: np.ndarray, max_iters: int | None = None) -> LpSolution:
    """Solve the relaxed association LP over the feasible links."""
    n_users, n_bs = qos.score.shape
    budgets = np.asarray(budgets, dtype=float)
    pairs = np.argwhere(qos.feasible)
    n_vars = len(pairs)
    x_mat = np.zeros((n_users, n_bs))
    if n_vars == 0:
        return LpSolution(x=x_mat, objective=0.0, status=OPTIMAL, mu=np.zeros(n_bs))

    c = qos.score[pairs[:, 0], pairs[:, 1]]
    users_with = np.unique(pairs[:, 0])
    user_row = {int(u): k for k, u in enumerate(users_with)}
    m = n_bs + len(users_with)
    a = np.zeros((m, n_vars))
    b = np.concatenate([budgets, np.ones(len(users_with))])
    for v, (i, j) in enumerate(pairs):
        a[j, v] = qos.min_rbs[i, j]
        a[n_bs + user_row[int(i)], v] = 1.0

    res = simplex_maximize(c, a, b, max_iters=max_iters)
    x_mat[pairs[:, 0], pairs[:, 1]] = res.x
    return LpSolution(x=x_mat, objective=res.objective, status=res.status,
                      mu=res.duals[:n_bs].copy())


def verify_lp(lp: LpSolution, qos: QosTable, budgets: np.ndarray) -> dict:
    """Feasibility and complementary-slackness residuals of an LP solution."""
    x = lp.x
    n_bar = np.where(qos.feasible, np.where(np.isfinite(qos.min_rbs), qos.min_rbs, 0.0), 0.0)
    loads = (x * n_bar).sum(axis=0)
    row_sums = x.sum(axis=1)
    slack = budgets - loads
    return {
        "box_violation": float(max(0.0, -x.min(initial=0.0), (x - 1.0).max(initial=0.0))),
        "rc_violation": float(max(0.0, (loads - budgets).max(initial=0.0))),
        "ac_violation": float(max(0.0, (row_sums - 1.0).max(initial=0.0))),
        "comp_slack": float(np.abs(lp.mu * slack).max(initial=0.0)),
    }


def round_lp(lp: LpSolution, qos: QosTable, budgets: np.ndarray) -> Association:
    """Round the LP to a feasible binary assignment.

    A user is assigned to its largest x entry when that entry is >= 0.5,
    otherwise left out.  Budget violations introduced by rounding are
    repaired with the same evict-and-forward rule as the distributed
    algorithm, using the LP values as the preference order.
    """
    n_users, n_bs = lp.x.shape
    budgets = np.asarray(budgets, dtype=np.int64)
    requests = []
    for i in range(n_users):
        feas = np.flatnonzero(qos.feasible[i])
        if feas.size == 0:
            continue
        xi = lp.x[i, feas]
        k = int(np.argmax(xi))
        if xi[k] < 0.5:
            continue
        order = np.lexsort((feas, -qos.score[i, feas], -xi))
        chosen = feas[order]
        requests.append(UserRequest(
            user=i,
            preference=tuple(int(j) for j in chosen),
            demands=tuple(int(qos.min_rbs[i, j]) for j in chosen),
            scores=tuple(float(qos.score[i, j]) for j in chosen),
        ))

    assignment = admission_project(requests, budgets)
    if assignment.shape[0] < n_users:
        assignment = np.concatenate(
            [assignment, np.full(n_users - assignment.shape[0], -1, dtype=np.int64)])
    return Association(
        assignment=assignment,
        mu=lp.mu.copy(),
        iterations=1,
        converged=lp.status == OPTIMAL,
        converged_at=1,
        objective=assignment_objective(assignment, qos.score),
        trace=[],
    )
