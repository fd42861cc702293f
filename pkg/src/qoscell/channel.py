"""Channel gains, SINR, spectral efficiency and the closed-form outage law.

The fading model is Rayleigh in amplitude, so the channel power gain to
each BS is an independent exponential variable whose mean equals the
large-scale gain G_ij.  Everything here is a pure function of arrays; RNG
state is always an explicit argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Scenario, Tier

# Distances are clamped below this before path-loss evaluation; the
# log-distance laws diverge as d -> 0.
MIN_DISTANCE_M = 1.0

LN2 = math.log(2.0)


def path_loss_db(tier: Tier, distance_m):
    """Log-distance path loss in dB for one tier; accepts scalars or arrays."""
    d = np.maximum(distance_m, MIN_DISTANCE_M)
    if tier is Tier.FEMTO:
        return 37.0 + 30.0 * np.log10(d)
    return 34.0 + 40.0 * np.log10(d)


def mean_gain(user_pos, bs, shadowing_db: float | None = None, rng=None) -> float:
    """Mean (large-scale) channel gain between one user and one BS.

    With shadowing enabled the deterministic path-loss gain is multiplied
    by a log-normal factor 10^(X/10), X ~ N(0, shadowing_db^2).
    """
    d = math.hypot(user_pos[0] - bs.position[0], user_pos[1] - bs.position[1])
    loss_db = float(path_loss_db(bs.tier, d))
    if shadowing_db is not None:
        if rng is None:
            raise ValueError("shadowing requires an explicit rng")
        loss_db -= rng.normal(0.0, shadowing_db)
    return 10.0 ** (-loss_db / 10.0)


@dataclass(frozen=True)
class LinkTable:
    """Per (user, BS) derived quantities, all shape (n_users, n_bs).

    gains     mean channel gain G_ij (linear)
    lam       exponential fading parameter 1/G_ij
    sinr_long long-term SINR (linear)
    spec_eff  long-term spectral efficiency log2(1 + SINR), bits/s per RB
    """

    gains: np.ndarray
    lam: np.ndarray
    sinr_long: np.ndarray
    spec_eff: np.ndarray


def long_term_sinr(gains: np.ndarray, powers: np.ndarray, noise_w: float) -> np.ndarray:
    """Long-term SINR matrix: every other BS is an interferer at full power."""
    rx = gains * powers[None, :]
    total = rx.sum(axis=1, keepdims=True)
    return rx / (total - rx + noise_w)


def build_link_table(scenario: Scenario) -> LinkTable:
    """Compute gains, lambda, long-term SINR and spectral efficiency.

    Shadowing (when scenario.shadowing_db is set) draws one log-normal
    factor per link from a stream derived from the scenario seed, so two
    builds of the same scenario are identical.
    """
    du = scenario.user_xy[:, None, :] - scenario.bs_xy[None, :, :]
    dist = np.hypot(du[..., 0], du[..., 1])
    loss = np.empty_like(dist)
    for j, bs in enumerate(scenario.base_stations):
        loss[:, j] = path_loss_db(bs.tier, dist[:, j])
    if scenario.shadowing_db is not None:
        rng = np.random.default_rng(np.random.SeedSequence((scenario.rng_seed, 0x5AD0)))
        loss = loss - rng.normal(0.0, scenario.shadowing_db, size=loss.shape)
    gains = 10.0 ** (-loss / 10.0)
    lam = 1.0 / gains
    sinr = long_term_sinr(gains, scenario.powers, scenario.constants.noise_power_w)
    return LinkTable(gains=gains, lam=lam, sinr_long=sinr, spec_eff=np.log2(1.0 + sinr))


def sinr_threshold(gamma: float, n) -> np.ndarray:
    """Rate threshold gamma on n RBs as an SINR threshold 2^(gamma/n) - 1."""
    return np.expm1(LN2 * gamma / np.asarray(n, dtype=float))


def log_no_outage(lam_row: np.ndarray, powers: np.ndarray, noise_w: float,
                  j: int, n, gamma: float) -> np.ndarray:
    """log(1 - P_out) for user->BS j with n RBs; n may be an array.

    Computed as a sum of log terms so that products of many per-interferer
    factors below 1 do not underflow.  n <= 0 yields -inf (outage certain).
    """
    n = np.asarray(n, dtype=float)
    s = sinr_threshold(gamma, np.where(n > 0, n, 1.0))
    q = lam_row / powers
    qj = q[j]
    acc = -qj * noise_w * s
    for k in range(len(powers)):
        if k == j:
            continue
        acc = acc - np.log1p(s * qj / q[k])
    return np.where(n > 0, acc, -np.inf)


def outage_probability(lam_row: np.ndarray, powers: np.ndarray, noise_w: float,
                       j: int, n, gamma: float) -> np.ndarray:
    """Closed-form probability that the instantaneous rate on n RBs drops
    below gamma, under independent exponential fading on every link.

    Strictly decreasing in n; returns exactly 1 for n = 0 by convention.
    """
    return -np.expm1(log_no_outage(lam_row, powers, noise_w, j, n, gamma))


def draw_fading(gains: np.ndarray, rng) -> np.ndarray:
    """One realization of the channel power gains H_ij ~ Exp(mean=G_ij)."""
    return rng.exponential(scale=gains)


def instantaneous_sinr(h: np.ndarray, powers: np.ndarray, noise_w: float) -> np.ndarray:
    """Instantaneous SINR for one fading realization h (last axis = BS)."""
    rx = h * powers
    total = rx.sum(axis=-1, keepdims=True)
    return rx / (total - rx + noise_w)


def instantaneous_rate_sample(i: int, j: int, n: int, gains: np.ndarray,
                              powers: np.ndarray, noise_w: float, rng) -> float:
    """Draw independent fading for user i to every BS and return n * c_ij."""
    if n <= 0:
        return 0.0
    h = draw_fading(gains[i], rng)
    sinr = instantaneous_sinr(h, powers, noise_w)[j]
    return n * math.log2(1.0 + sinr)
