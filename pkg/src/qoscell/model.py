"""Shared domain types and unit conventions.

All powers are stored in Watts (linear scale); dBm appears only at
configuration boundaries.  Rates are in bits/s under the convention that
one resource block carrying spectral efficiency c delivers rate c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np


class Tier(str, Enum):
    MACRO = "macro"
    MICRO = "micro"
    FEMTO = "femto"


def dbm_to_watts(p_dbm: float) -> float:
    """Convert a power level in dBm to Watts."""
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_watts: float) -> float:
    """Inverse of dbm_to_watts; requires a strictly positive power."""
    if p_watts <= 0.0:
        raise ValueError(f"power must be > 0 W, got {p_watts}")
    return 10.0 * math.log10(p_watts) + 30.0


class ValidationError(ValueError):
    """Raised when a domain object violates its invariants."""


@dataclass(frozen=True)
class RateQos:
    """Minimum long-term rate requirement: rate must stay >= gamma bits/s."""

    gamma: float

    def __post_init__(self):
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise ValidationError(f"rate QoS needs gamma > 0, got {self.gamma}")


@dataclass(frozen=True)
class OutageQos:
    """Outage requirement: Pr{instantaneous rate < gamma} must stay <= t_max."""

    gamma: float
    t_max: float

    def __post_init__(self):
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise ValidationError(f"outage QoS needs gamma > 0, got {self.gamma}")
        if not (0.0 < self.t_max < 1.0):
            raise ValidationError(f"outage QoS needs 0 < t_max < 1, got {self.t_max}")


QosClass = RateQos | OutageQos


@dataclass(frozen=True)
class PhysicalConstants:
    """Link-budget constants shared by every link.

    noise_power_w is the total noise power over one RB, i.e. the product
    of the RB bandwidth and the thermal noise spectral density.  The
    formulas only ever use that product, so it is kept as one number.
    """

    rb_bandwidth_hz: float = 180e3
    noise_power_w: float = dbm_to_watts(-111.45)
    scheduling_interval_s: float = 1.0

    def __post_init__(self):
        for name in ("rb_bandwidth_hz", "noise_power_w", "scheduling_interval_s"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class BaseStation:
    """A base station with a fixed transmit power and an RB budget.

    power_dbm is canonical (it is what config files carry); the linear
    power in Watts is derived once at construction.
    """

    id: int
    tier: Tier
    position: tuple[float, float]
    power_dbm: float
    rb_budget: int

    def __post_init__(self):
        if not math.isfinite(self.power_dbm):
            raise ValidationError(f"BS {self.id}: power_dbm must be finite")
        if self.rb_budget < 0:
            raise ValidationError(f"BS {self.id}: rb_budget must be >= 0")

    @cached_property
    def power(self) -> float:
        """Transmit power in Watts (always > 0)."""
        return dbm_to_watts(self.power_dbm)


@dataclass(frozen=True)
class User:
    id: int
    position: tuple[float, float]
    qos: QosClass


@dataclass(frozen=True)
class Scenario:
    """An immutable deployment: base stations, users, and constants.

    A scenario is either a rate problem or an outage problem; mixing QoS
    variants across users is rejected at construction.
    """

    base_stations: tuple[BaseStation, ...]
    users: tuple[User, ...]
    constants: PhysicalConstants
    area: tuple[float, float]
    rng_seed: int
    shadowing_db: float | None = None

    def __post_init__(self):
        if len(self.base_stations) == 0:
            raise ValidationError("scenario needs at least one base station")
        ids = [b.id for b in self.base_stations]
        if ids != list(range(len(ids))):
            raise ValidationError("BS ids must be 0..N-1 in order")
        uids = [u.id for u in self.users]
        if uids != list(range(len(uids))):
            raise ValidationError("user ids must be 0..N-1 in order")
        variants = {type(u.qos) for u in self.users}
        if len(variants) > 1:
            raise ValidationError("mixed QoS variants in one scenario (rate vs outage)")
        w, h = self.area
        if not (w > 0 and h > 0):
            raise ValidationError(f"area must be positive, got {self.area}")
        for b in self.base_stations:
            self._check_in_area("BS", b.id, b.position)
        for u in self.users:
            self._check_in_area("user", u.id, u.position)

    def _check_in_area(self, kind, idx, pos):
        w, h = self.area
        x, y = pos
        if not (0.0 <= x <= w and 0.0 <= y <= h):
            raise ValidationError(f"{kind} {idx} position {pos} outside area {self.area}")

    @property
    def n_bs(self) -> int:
        return len(self.base_stations)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def qos_variant(self) -> str:
        """'rate', 'outage', or 'empty' when there are no users."""
        if not self.users:
            return "empty"
        return "outage" if isinstance(self.users[0].qos, OutageQos) else "rate"

    @cached_property
    def powers(self) -> np.ndarray:
        """Per-BS transmit power in Watts, shape (n_bs,). Read-only."""
        p = np.array([b.power for b in self.base_stations])
        p.flags.writeable = False
        return p

    @cached_property
    def budgets(self) -> np.ndarray:
        """Per-BS RB budget N_j, shape (n_bs,). Read-only."""
        n = np.array([b.rb_budget for b in self.base_stations], dtype=np.int64)
        n.flags.writeable = False
        return n

    @cached_property
    def bs_xy(self) -> np.ndarray:
        xy = np.array([b.position for b in self.base_stations])
        xy.flags.writeable = False
        return xy

    @cached_property
    def user_xy(self) -> np.ndarray:
        xy = np.array([u.position for u in self.users]).reshape(len(self.users), 2)
        xy.flags.writeable = False
        return xy

    @cached_property
    def gammas(self) -> np.ndarray:
        g = np.array([u.qos.gamma for u in self.users])
        g.flags.writeable = False
        return g
