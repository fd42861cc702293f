"""QoS translation: minimum RB counts and association scores per link.

The rate and outage problems share one association structure once each
link is reduced to a pair (min RBs, score).  Links whose minimum exceeds
the BS budget are marked infeasible: score -inf, and for the outage
variant min RBs +inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import LinkTable, log_no_outage, outage_probability
from .model import OutageQos, Scenario

INFEASIBLE = np.inf


@dataclass(frozen=True)
class UtilityBundle:
    """A strictly increasing concave utility with its derivative and the
    derivative's inverse, supplied together so they stay coherent."""

    value: Callable
    deriv: Callable
    deriv_inv: Callable


# U(x) = ln(1 + x): the utility used throughout the experiments.
LOG_UTILITY = UtilityBundle(
    value=np.log1p,
    deriv=lambda x: 1.0 / (1.0 + x),
    deriv_inv=lambda y: 1.0 / y - 1.0,
)


@dataclass(frozen=True)
class QosTable:
    """Per (user, BS) minimum RB counts and association scores.

    min_rbs  float matrix; integer-valued where finite, INFEASIBLE where
             the requirement cannot be met (outage variant only stores
             minima within the BS budget; rate minima are kept raw).
    score    a_ij, -inf wherever the link is not usable for association.
    variant  'rate' or 'outage'.
    """

    min_rbs: np.ndarray
    score: np.ndarray
    variant: str

    @property
    def feasible(self) -> np.ndarray:
        return np.isfinite(self.score)


def min_rbs_rate(gamma: float, c_bar: float) -> float:
    """Smallest integer n with n * c_bar >= gamma; INFEASIBLE if c_bar <= 0."""
    if c_bar <= 0.0:
        return INFEASIBLE
    return float(math.ceil(gamma / c_bar))


def min_rbs_outage(gamma: float, t_max: float, lam_row: np.ndarray,
                   powers: np.ndarray, noise_w: float, j: int, n_cap: int) -> float:
    """Smallest n <= n_cap with P_out(n) <= t_max, else INFEASIBLE.

    P_out is strictly decreasing in n, so the unit-increment search can be
    replaced by doubling to bracket the answer and bisecting inside the
    bracket; both return the same n.
    """
    if n_cap < 1:
        return INFEASIBLE

    def ok(n):
        return float(outage_probability(lam_row, powers, noise_w, j, n, gamma)) <= t_max

    if not ok(n_cap):
        return INFEASIBLE
    hi = 1
    while hi < n_cap and not ok(hi):
        hi = min(2 * hi, n_cap)
    lo = hi // 2  # ok(lo) is False (or lo == 0)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return float(hi)


def build_qos_table(scenario: Scenario, link: LinkTable,
                    utility: UtilityBundle = LOG_UTILITY) -> QosTable:
    """Build the unified (min RBs, score) coefficient matrices.

    Rate variant:   n = ceil(gamma / c_bar),  a = U(n * c_bar)
    Outage variant: n = smallest count meeting t_max,  a = log(1 - P_out(n))
    Links needing more than the BS budget get score -inf and are never
    requested during association.
    """
    n_u, n_b = link.spec_eff.shape
    budgets = scenario.budgets
    powers = scenario.powers
    noise = scenario.constants.noise_power_w
    min_rbs = np.full((n_u, n_b), INFEASIBLE)
    score = np.full((n_u, n_b), -np.inf)
    variant = scenario.qos_variant

    for i, user in enumerate(scenario.users):
        gamma = user.qos.gamma
        if isinstance(user.qos, OutageQos):
            for j in range(n_b):
                n = min_rbs_outage(gamma, user.qos.t_max, link.lam[i], powers,
                                   noise, j, int(budgets[j]))
                min_rbs[i, j] = n
                if np.isfinite(n):
                    score[i, j] = float(log_no_outage(link.lam[i], powers, noise,
                                                      j, n, gamma))
        else:
            for j in range(n_b):
                n = min_rbs_rate(gamma, link.spec_eff[i, j])
                min_rbs[i, j] = n
                if np.isfinite(n) and n <= budgets[j]:
                    score[i, j] = float(utility.value(n * link.spec_eff[i, j]))
    return QosTable(min_rbs=min_rbs, score=score, variant=variant)
