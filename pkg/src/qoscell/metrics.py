"""Evaluation metrics and the verification oracles used by the test suite.

Houses the empirical rate CDF with its pinned percentile convention, the
rate-gain ratio, the global outage probability, the exhaustive assignment
oracle for small instances, and the Monte-Carlo outage estimator that
backs the closed-form outage law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .association import UNSERVED, Association
from .channel import draw_fading, instantaneous_sinr, log_no_outage
from .qos import QosTable

# Monte-Carlo fading draws are generated in fixed-size blocks, each from
# its own child stream, so results do not depend on how work is batched.
MC_BLOCK = 100_000


@dataclass(frozen=True)
class RateCdf:
    """Empirical CDF over rate samples.

    percentile(p) interpolates linearly between order statistics at
    position p * (n - 1), matching numpy's default quantile method; the
    convention is pinned by golden tests because gain ratios depend on it.
    """

    samples: np.ndarray

    def __post_init__(self):
        if self.samples.size == 0:
            raise ValueError("CDF needs at least one sample")
        object.__setattr__(self, "samples", np.sort(np.asarray(self.samples, dtype=float)))

    def percentile(self, p: float) -> float:
        return float(np.quantile(self.samples, p))

    @property
    def probabilities(self) -> np.ndarray:
        """ECDF heights (k+1)/n for the sorted samples."""
        n = self.samples.size
        return np.arange(1, n + 1) / n


def rate_cdf(rates) -> RateCdf:
    return RateCdf(np.asarray(rates, dtype=float))


def rate_gain(cdf: RateCdf, baseline: RateCdf, p: float) -> float | None:
    """Percentile ratio cdf(p) / baseline(p); None when the baseline
    percentile is not positive (reported, never NaN)."""
    base = baseline.percentile(p)
    if base <= 0.0:
        return None
    return cdf.percentile(p) / base


def global_outage(log_no_outage_terms: np.ndarray) -> tuple[float, float]:
    """Global outage from per-user log(1 - P_out) terms.

    Returns (P_hat, log10(1 - P_hat)).  Any -inf term means some served
    user is certainly in outage, so P_hat = 1.
    """
    total = float(np.sum(log_no_outage_terms))
    if not np.isfinite(total):
        return 1.0, -math.inf
    return float(-math.expm1(total)), total / math.log(10.0)


def served_log_no_outage(assignment: np.ndarray, n_alloc: np.ndarray, lam: np.ndarray,
                         powers: np.ndarray, noise_w: float, gammas: np.ndarray,
                         scale: np.ndarray | None = None) -> np.ndarray:
    """Per served user log(1 - P_out) at its allocated RB count.

    A time-share factor f < 1 (Max-SINR overload) means the user is only
    scheduled in that fraction of intervals: 1 - P_eff = f * (1 - P_out).
    """
    terms = []
    for i, j in enumerate(assignment):
        if j == UNSERVED:
            continue
        t = float(log_no_outage(lam[i], powers, noise_w, int(j), n_alloc[i], gammas[i]))
        if scale is not None and scale[i] < 1.0:
            t += math.log(scale[i])
        terms.append(t)
    return np.array(terms)


# --- oracles -----------------------------------------------------------

BRUTE_FORCE_MAX_USERS = 10
BRUTE_FORCE_MAX_BS = 4


def brute_force_assignment(qos: QosTable, budgets: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact optimum over all (n_bs + 1)^n_users assignments.

    Enumeration guard: at most 10 users and 4 BSs.  Returns (assignment,
    objective); unserved is a valid per-user option.
    """
    n_users, n_bs = qos.score.shape
    if n_users > BRUTE_FORCE_MAX_USERS or n_bs > BRUTE_FORCE_MAX_BS:
        raise ValueError(
            f"instance {n_users}x{n_bs} exceeds the enumeration guard "
            f"({BRUTE_FORCE_MAX_USERS}x{BRUTE_FORCE_MAX_BS})")
    budgets = np.asarray(budgets, dtype=np.int64)

    n_opts = n_bs + 1  # per-user choice: a BS or unserved (index n_bs)
    total = n_opts ** n_users
    score_ext = np.hstack([np.where(np.isfinite(qos.score), qos.score, -np.inf),
                           np.zeros((n_users, 1))])
    demand_ext = np.hstack([np.where(np.isfinite(qos.min_rbs), qos.min_rbs, 0.0),
                            np.zeros((n_users, 1))])
    rows = np.arange(n_users)

    best_obj = -np.inf
    best_code = 0
    block = 1 << 20  # bound peak memory on the 10-user x 4-BS worst case
    for start in range(0, total, block):
        codes = np.arange(start, min(start + block, total))
        choice = np.empty((codes.size, n_users), dtype=np.int64)
        q = codes.copy()
        for i in range(n_users):
            choice[:, i] = q % n_opts
            q //= n_opts
        objective = score_ext[rows[None, :], choice].sum(axis=1)
        feasible = np.isfinite(objective)
        for j in range(n_bs):
            load = np.where(choice == j, demand_ext[rows[None, :], choice], 0.0).sum(axis=1)
            feasible &= load <= budgets[j]
        objective[~feasible] = -np.inf
        k = int(np.argmax(objective))
        if objective[k] > best_obj:
            best_obj = float(objective[k])
            best_code = start + k

    assignment = np.empty(n_users, dtype=np.int64)
    q = best_code
    for i in range(n_users):
        assignment[i] = q % n_opts
        q //= n_opts
    assignment[assignment == n_bs] = UNSERVED
    return assignment, best_obj


def monte_carlo_outage(lam_row: np.ndarray, powers: np.ndarray, noise_w: float,
                       j: int, n: int, gamma: float, samples: int,
                       seed: int = 0) -> tuple[float, float]:
    """Empirical frequency of the outage event (instantaneous rate below
    gamma) plus its binomial standard error."""
    if samples < 1_000:
        raise ValueError("need at least 1e3 samples for a meaningful estimate")
    gains = 1.0 / lam_row
    hits = 0
    done = 0
    block_idx = 0
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(math.ceil(samples / MC_BLOCK))
    while done < samples:
        count = min(MC_BLOCK, samples - done)
        rng = np.random.default_rng(children[block_idx])
        h = draw_fading(np.broadcast_to(gains, (count, gains.size)), rng)
        sinr = instantaneous_sinr(h, powers, noise_w)[:, j]
        rate = n * np.log2(1.0 + sinr)
        hits += int((rate < gamma).sum())
        done += count
        block_idx += 1
    p = hits / samples
    se = math.sqrt(max(p * (1.0 - p), 1.0 / samples) / samples)
    return p, se


# --- report ------------------------------------------------------------

@dataclass
class EvalReport:
    """Everything one pipeline run reports.

    rates holds served users' achieved rate samples (long-term in static
    mode, one fading realization each in stochastic mode); unserved users
    are excluded from rates and sum_utility but counted.
    """

    rates: np.ndarray
    sum_utility: float
    unserved: int
    served: int
    iterations: int
    converged: bool
    converged_at: int | None
    objective: float
    qos_violations: int
    global_outage_prob: float | None = None
    log10_no_outage: float | None = None
    scaled_users: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def cdf(self) -> RateCdf:
        return rate_cdf(self.rates)

    @property
    def avg_utility(self) -> float:
        """Sum utility averaged over served users (0 when none served)."""
        return self.sum_utility / self.served if self.served else 0.0
