"""Scenario configuration and its TOML file form.

Every field is addressable from a config file: top-level scalars sit at the
root, each nested dataclass is a ``[section]`` and continents are an array of
tables (``[[placement.continents]]``).  Unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

VARIANTS = ("hfcs", "hierarchical", "broadcast")


class ConfigError(ValueError):
    pass


@dataclass
class Continent:
    name: str
    lon_min: float
    lon_max: float
    lat_min: float
    lat_max: float
    probability: float
    agglomerations: int = 1

    def contains(self, lon: float, lat: float) -> bool:
        return self.lon_min <= lon <= self.lon_max and self.lat_min <= lat <= self.lat_max


def default_continents() -> list[Continent]:
    return [
        Continent("north_america", -125.0, -70.0, 25.0, 50.0, 0.25, 4),
        Continent("south_america", -75.0, -40.0, -35.0, 5.0, 0.10, 2),
        Continent("europe", -10.0, 30.0, 36.0, 60.0, 0.30, 4),
        Continent("africa", -15.0, 40.0, -30.0, 30.0, 0.05, 2),
        Continent("asia", 60.0, 140.0, 10.0, 50.0, 0.25, 5),
        Continent("oceania", 115.0, 150.0, -38.0, -15.0, 0.05, 1),
    ]


@dataclass
class Counts:
    clients: int = 1500
    edge: int = 1000
    cnl: int = 50


@dataclass
class Placement:
    max_node_distance: float = 0.5
    max_attempts: int = 1000
    continents: list[Continent] = field(default_factory=default_continents)


@dataclass
class Pools:
    max_members: int | None = 30
    base_cell_size: float = 5.0


@dataclass
class Gossip:
    interval: float = 3.0
    fanout: int = 3
    reply_deadline: float = 6.0


@dataclass
class Detection:
    report_window: float = 10.0
    probe_timeout: float = 3.0
    min_reporters: int = 2


@dataclass
class Tasks:
    capacity: tuple[float, float] = (1.0, 10.0)
    duration: tuple[float, float] = (1.0, 10.0)
    redirect_attempts: int = 3
    redirect_timeout: float = 0.5


@dataclass
class Clients:
    interval: tuple[float, float] = (1.0, 5.0)
    max_step: float = 2.0


@dataclass
class Capacity:
    edge: tuple[float, float] = (20.0, 60.0)
    cnl: tuple[float, float] = (200.0, 600.0)
    cloud: float = math.inf
    # capacity units withheld per metadata message handled in the previous interval
    message_cost: float = 0.1


@dataclass
class Failures:
    enabled: bool = True
    gap: tuple[float, float] = (50.0, 500.0)
    edge_probability: float = 0.9


@dataclass
class Latency:
    intra_pool: float = 0.010
    pool_cnl: float = 0.050
    cnl_cloud: float = 0.100


@dataclass
class ScenarioConfig:
    variant: str = "hfcs"
    seed: int = 0
    duration: float = 900.0
    cloud_position: tuple[float, float] = (8.68, 50.11)
    counts: Counts = field(default_factory=Counts)
    placement: Placement = field(default_factory=Placement)
    pools: Pools = field(default_factory=Pools)
    gossip: Gossip = field(default_factory=Gossip)
    detection: Detection = field(default_factory=Detection)
    tasks: Tasks = field(default_factory=Tasks)
    clients: Clients = field(default_factory=Clients)
    capacity: Capacity = field(default_factory=Capacity)
    failures: Failures = field(default_factory=Failures)
    latency: Latency = field(default_factory=Latency)

    def validate(self) -> "ScenarioConfig":
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        for name in ("clients", "edge", "cnl"):
            if getattr(self.counts, name) < 0:
                raise ConfigError(f"counts.{name} must be >= 0")
        if self.duration < 0:
            raise ConfigError("duration must be >= 0")
        if not self.placement.max_node_distance > 0:
            raise ConfigError("placement.max_node_distance must be > 0")
        conts = self.placement.continents
        if not conts:
            raise ConfigError("at least one continent is required")
        total = sum(c.probability for c in conts)
        if abs(total - 1.0) > 1e-9 or any(c.probability < 0 for c in conts):
            raise ConfigError(f"continent probabilities must be >= 0 and sum to 1 (got {total})")
        for c in conts:
            if c.lon_min > c.lon_max or c.lat_min > c.lat_max:
                raise ConfigError(f"continent {c.name!r} has inverted bounds")
            if c.agglomerations < 1:
                raise ConfigError(f"continent {c.name!r} needs at least one agglomeration")
        if self.pools.max_members is not None and self.pools.max_members < 1:
            raise ConfigError("pools.max_members must be positive (omit for unlimited)")
        if self.gossip.interval <= 0 or self.gossip.fanout < 1:
            raise ConfigError("gossip.interval must be > 0 and gossip.fanout >= 1")
        for name, (lo, hi) in (("tasks.capacity", self.tasks.capacity), ("tasks.duration", self.tasks.duration),
                               ("clients.interval", self.clients.interval), ("failures.gap", self.failures.gap),
                               ("capacity.edge", self.capacity.edge), ("capacity.cnl", self.capacity.cnl)):
            if lo > hi or lo < 0:
                raise ConfigError(f"{name} must be an ordered non-negative [lo, hi] pair")
        if self.tasks.capacity[0] <= 0 or self.tasks.duration[0] <= 0:
            raise ConfigError("task capacity and duration bounds must be positive")
        if not 0.0 <= self.failures.edge_probability <= 1.0:
            raise ConfigError("failures.edge_probability must lie in [0, 1]")
        return self

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return _to_plain(self)


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    return obj


def _coerce(tp, value, path: str):
    origin = getattr(tp, "__origin__", None)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected a table")
        return _build(tp, value, path)
    if tp is float or tp == "float":
        if isinstance(value, str) and value.lower() in ("inf", "infinity", "unlimited"):
            return math.inf
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{path}: expected a number")
        return float(value)
    if tp is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{path}: expected an integer")
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    if origin is tuple:
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise ConfigError(f"{path}: expected a [lo, hi] pair")
        return tuple(_coerce(float, v, path) for v in value)
    if origin is list:
        (item,) = tp.__args__
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected an array")
        return [_coerce(item, v, f"{path}[{k}]") for k, v in enumerate(value)]
    args = getattr(tp, "__args__", ())
    if type(None) in args:  # optional int
        if value is None or (isinstance(value, str) and value.lower() in ("unlimited", "none")):
            return None
        inner = next(a for a in args if a is not type(None))
        return _coerce(inner, value, path)
    raise ConfigError(f"{path}: unsupported type {tp!r}")


def _build(cls, data: dict, path: str = ""):
    hints = _hints(cls)
    unknown = set(data) - set(hints)
    if unknown:
        raise ConfigError(f"unknown key(s) in {path or 'config'}: {', '.join(sorted(unknown))}")
    kwargs = {name: _coerce(hints[name], value, f"{path}.{name}" if path else name) for name, value in data.items()}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


_HINT_CACHE: dict = {}


def _hints(cls) -> dict:
    if cls not in _HINT_CACHE:
        import typing

        _HINT_CACHE[cls] = typing.get_type_hints(cls)
    return _HINT_CACHE[cls]


def config_from_dict(data: dict) -> ScenarioConfig:
    return _build(ScenarioConfig, data).validate()


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return config_from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def dump_config(cfg: ScenarioConfig) -> str:
    """Render a config as TOML (inverse of ``load_config``)."""
    plain = cfg.to_dict()
    lines = []

    def scalar(v):
        if v is None:
            return '"unlimited"'
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float) and math.isinf(v):
            return '"inf"'
        if isinstance(v, str):
            return f'"{v}"'
        if isinstance(v, list):
            return "[" + ", ".join(scalar(x) for x in v) + "]"
        return repr(v)

    for k, v in plain.items():
        if not isinstance(v, dict):
            lines.append(f"{k} = {scalar(v)}")
    for k, v in plain.items():
        if isinstance(v, dict):
            lines.append(f"\n[{k}]")
            tables = []
            for kk, vv in v.items():
                if isinstance(vv, list) and vv and isinstance(vv[0], dict):
                    tables.append((kk, vv))
                else:
                    lines.append(f"{kk} = {scalar(vv)}")
            for kk, rows in tables:
                for row in rows:
                    lines.append(f"\n[[{k}.{kk}]]")
                    lines.extend(f"{rk} = {scalar(rv)}" for rk, rv in row.items())
    return "\n".join(lines) + "\n"
