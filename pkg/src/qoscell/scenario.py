"""Deterministic scenario generation, config ingestion and persistence.

Generation is reproducible: positions come from numpy's default PCG64
generator seeded with the scenario seed, and the draw order (micro BSs,
femto BSs, users) is fixed.  Scenario files are a line-oriented text
format with an explicit schema version; floats are written with repr() so
save -> load -> save is byte-identical.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .model import (BaseStation, OutageQos, PhysicalConstants, RateQos, Scenario, Tier,
                    User, ValidationError, dbm_to_watts)

SCHEMA_VERSION = 1

TIER_ORDER = (Tier.MACRO, Tier.MICRO, Tier.FEMTO)


@dataclass(frozen=True)
class DeploymentConfig:
    """Deployment recipe; the defaults reproduce the reference experiment
    (1 macro, 5 micro, 10 femto, 200 users in a 1000 m square)."""

    n_macro: int = 1
    micro_per_macro: int = 5
    femto_per_macro: int = 10
    users_per_macro: int = 200
    area_m: float = 1000.0
    powers_dbm: tuple[float, float, float] = (46.0, 35.0, 20.0)
    rb_budgets: tuple[int, int, int] = (200, 100, 50)
    noise_dbm: float = -111.45
    qos_variant: str = "rate"
    gamma: float = 2.0
    t_max: float = 0.10
    shadowing_db: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_macro < 1:
            raise ValidationError("need at least one macro BS")
        for name in ("micro_per_macro", "femto_per_macro", "users_per_macro"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if self.qos_variant not in ("rate", "outage"):
            raise ValidationError(f"unknown qos_variant {self.qos_variant!r}")


def preset(name: str, seed: int = 0, gamma: float | None = None) -> DeploymentConfig:
    """Named presets pinning the reference deployment parameters."""
    if name in ("sec6", "sec6-rate"):
        return DeploymentConfig(qos_variant="rate", gamma=2.0 if gamma is None else gamma,
                                seed=seed)
    if name == "sec6-outage":
        return DeploymentConfig(qos_variant="outage", gamma=1.0 if gamma is None else gamma,
                                t_max=0.10, seed=seed)
    raise ValidationError(f"unknown preset {name!r}")


def _macro_grid(n_macro: int, w: float, h: float) -> list[tuple[float, float]]:
    if n_macro == 1:
        return [(w / 2.0, h / 2.0)]
    g = math.ceil(math.sqrt(n_macro))
    pos = []
    for k in range(n_macro):
        r, c = divmod(k, g)
        pos.append(((c + 0.5) * w / g, (r + 0.5) * h / g))
    return pos


def generate(config: DeploymentConfig) -> Scenario:
    """Build a Scenario from a config; same config -> identical scenario."""
    w = h = float(config.area_m)
    rng = np.random.default_rng(config.seed)

    stations: list[BaseStation] = []
    for x, y in _macro_grid(config.n_macro, w, h):
        stations.append(BaseStation(len(stations), Tier.MACRO, (x, y),
                                    config.powers_dbm[0], config.rb_budgets[0]))
    n_micro = config.micro_per_macro * config.n_macro
    n_femto = config.femto_per_macro * config.n_macro
    n_users = config.users_per_macro * config.n_macro
    for x, y in rng.uniform(0.0, (w, h), size=(n_micro, 2)):
        stations.append(BaseStation(len(stations), Tier.MICRO, (float(x), float(y)),
                                    config.powers_dbm[1], config.rb_budgets[1]))
    for x, y in rng.uniform(0.0, (w, h), size=(n_femto, 2)):
        stations.append(BaseStation(len(stations), Tier.FEMTO, (float(x), float(y)),
                                    config.powers_dbm[2], config.rb_budgets[2]))

    if config.qos_variant == "outage":
        qos = OutageQos(gamma=config.gamma, t_max=config.t_max)
    else:
        qos = RateQos(gamma=config.gamma)
    users = [User(i, (float(x), float(y)), qos)
             for i, (x, y) in enumerate(rng.uniform(0.0, (w, h), size=(n_users, 2)))]

    constants = PhysicalConstants(noise_power_w=dbm_to_watts(config.noise_dbm))
    return Scenario(
        base_stations=tuple(stations),
        users=tuple(users),
        constants=constants,
        area=(w, h),
        rng_seed=config.seed,
        shadowing_db=config.shadowing_db,
    )


def dumps(scenario: Scenario) -> str:
    """Serialize a scenario to the versioned text format."""
    out = []
    out.append("[meta]")
    out.append(f"schema_version = {SCHEMA_VERSION}")
    out.append(f"seed = {scenario.rng_seed}")
    out.append(f"area_width_m = {scenario.area[0]!r}")
    out.append(f"area_height_m = {scenario.area[1]!r}")
    shadow = "none" if scenario.shadowing_db is None else repr(scenario.shadowing_db)
    out.append(f"shadowing_db = {shadow}")
    out.append("")
    out.append("[constants]")
    out.append(f"rb_bandwidth_hz = {scenario.constants.rb_bandwidth_hz!r}")
    out.append(f"noise_power_w = {scenario.constants.noise_power_w!r}")
    out.append(f"scheduling_interval_s = {scenario.constants.scheduling_interval_s!r}")
    out.append("")
    out.append("[bs]")
    out.append("# id tier x y power_dbm rb_budget")
    for b in scenario.base_stations:
        out.append(f"{b.id} {b.tier.value} {b.position[0]!r} {b.position[1]!r} "
                   f"{b.power_dbm!r} {b.rb_budget}")
    out.append("")
    out.append("[user]")
    out.append("# id x y variant gamma t_max")
    for u in scenario.users:
        if isinstance(u.qos, OutageQos):
            tail = f"outage {u.qos.gamma!r} {u.qos.t_max!r}"
        else:
            tail = f"rate {u.qos.gamma!r} -"
        out.append(f"{u.id} {u.position[0]!r} {u.position[1]!r} {tail}")
    out.append("")
    return "\n".join(out)


def save(scenario: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(scenario))


class ScenarioFormatError(ValueError):
    """Raised for malformed or schema-incompatible scenario files."""


def _parse_sections(text: str) -> dict[str, list[str]]:
    sections: dict[str, list[str]] = {}
    current = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections.setdefault(current, [])
            continue
        if current is None:
            raise ScenarioFormatError(f"content before any section: {line!r}")
        sections[current].append(line)
    return sections


def _kv(lines: list[str], section: str) -> dict[str, str]:
    out = {}
    for line in lines:
        if "=" not in line:
            raise ScenarioFormatError(f"expected key = value in [{section}]: {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def loads(text: str) -> Scenario:
    """Parse the text format back into a Scenario (validates invariants)."""
    sections = _parse_sections(text)
    for required in ("meta", "constants", "bs", "user"):
        if required not in sections:
            raise ScenarioFormatError(f"missing [{required}] section")

    meta = _kv(sections["meta"], "meta")
    version = int(meta.get("schema_version", "-1"))
    if version != SCHEMA_VERSION:
        raise ScenarioFormatError(
            f"schema_version {version} not supported (expected {SCHEMA_VERSION})")
    shadow_raw = meta.get("shadowing_db", "none")
    shadowing = None if shadow_raw == "none" else float(shadow_raw)

    cons = _kv(sections["constants"], "constants")
    constants = PhysicalConstants(
        rb_bandwidth_hz=float(cons["rb_bandwidth_hz"]),
        noise_power_w=float(cons["noise_power_w"]),
        scheduling_interval_s=float(cons["scheduling_interval_s"]),
    )

    stations = []
    for line in sections["bs"]:
        parts = line.split()
        if len(parts) != 6:
            raise ScenarioFormatError(f"bad [bs] row: {line!r}")
        stations.append(BaseStation(int(parts[0]), Tier(parts[1]),
                                    (float(parts[2]), float(parts[3])),
                                    float(parts[4]), int(parts[5])))

    users = []
    for line in sections["user"]:
        parts = line.split()
        if len(parts) != 6:
            raise ScenarioFormatError(f"bad [user] row: {line!r}")
        if parts[3] == "outage":
            qos = OutageQos(gamma=float(parts[4]), t_max=float(parts[5]))
        elif parts[3] == "rate":
            qos = RateQos(gamma=float(parts[4]))
        else:
            raise ScenarioFormatError(f"unknown qos variant {parts[3]!r}")
        users.append(User(int(parts[0]), (float(parts[1]), float(parts[2])), qos))

    return Scenario(
        base_stations=tuple(stations),
        users=tuple(users),
        constants=constants,
        area=(float(meta["area_width_m"]), float(meta["area_height_m"])),
        rng_seed=int(meta["seed"]),
        shadowing_db=shadowing,
    )


def load(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def scenario_hash(scenario: Scenario) -> str:
    """Stable content hash of the serialized scenario."""
    return hashlib.sha256(dumps(scenario).encode("utf-8")).hexdigest()
