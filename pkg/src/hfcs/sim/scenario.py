"""Deployment generation: continents, agglomerations and capacities."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from hfcs.geo import GeoCoordinate
from hfcs.sim.config import Continent, ScenarioConfig


class ScenarioError(RuntimeError):
    pass


def stream(seed: int, name: str) -> random.Random:
    """Independent RNG stream per concern, derived from the master seed."""
    return random.Random(f"hfcs/{seed}/{name}")


@dataclass(frozen=True)
class PlacedNode:
    id: int
    layer: str
    position: GeoCoordinate
    capacity: float
    continent: str


@dataclass
class Deployment:
    seed: int
    cloud: PlacedNode
    cnls: list[PlacedNode] = field(default_factory=list)
    edges: list[PlacedNode] = field(default_factory=list)
    clients: list[tuple[int, GeoCoordinate]] = field(default_factory=list)

    @property
    def nodes(self) -> list[PlacedNode]:
        return [self.cloud, *self.cnls, *self.edges]


def _uniform_in(rng: random.Random, c: Continent) -> tuple[float, float]:
    return rng.uniform(c.lon_min, c.lon_max), rng.uniform(c.lat_min, c.lat_max)


def _near(rng: random.Random, c: Continent, anchor: tuple[float, float], d: float, attempts: int):
    for _ in range(attempts):
        r = d * math.sqrt(rng.random())
        a = rng.uniform(0.0, 2.0 * math.pi)
        lon = anchor[0] + r * math.cos(a)
        lat = anchor[1] + r * math.sin(a)
        if c.contains(lon, lat):
            return lon, lat
    raise ScenarioError(
        f"could not place a node within {d} degrees of ({anchor[0]:.3f}, {anchor[1]:.3f}) "
        f"inside continent {c.name!r} after {attempts} attempts"
    )


def place_agglomerated(rng: random.Random, continents: list[Continent], n: int, d: float,
                       attempts: int = 1000) -> list[tuple[Continent, tuple[float, float]]]:
    """Place ``n`` points: each continent's first points seed agglomerations,
    later points land uniformly within ``d`` of a random earlier point there."""
    weights = [c.probability for c in continents]
    placed: dict[str, list[tuple[float, float]]] = {c.name: [] for c in continents}
    out = []
    for _ in range(n):
        c = rng.choices(continents, weights=weights)[0]
        existing = placed[c.name]
        if len(existing) < c.agglomerations:
            pos = _uniform_in(rng, c)
        else:
            pos = _near(rng, c, existing[rng.randrange(len(existing))], d, attempts)
        existing.append(pos)
        out.append((c, pos))
    return out


def generate_scenario(config: ScenarioConfig, seed: int | None = None) -> Deployment:
    config.validate()
    seed = config.seed if seed is None else seed
    rng = stream(seed, "placement")
    cap_rng = stream(seed, "capacity")
    conts = config.placement.continents
    d = config.placement.max_node_distance

    cloud = PlacedNode(0, "cloud", GeoCoordinate(*config.cloud_position), config.capacity.cloud, "")
    dep = Deployment(seed, cloud)
    next_id = 1
    weights = [c.probability for c in conts]
    for _ in range(config.counts.cnl):
        c = rng.choices(conts, weights=weights)[0]
        lon, lat = _uniform_in(rng, c)
        dep.cnls.append(PlacedNode(next_id, "cnl", GeoCoordinate(lon, lat), cap_rng.uniform(*config.capacity.cnl), c.name))
        next_id += 1
    for c, (lon, lat) in place_agglomerated(rng, conts, config.counts.edge, d, config.placement.max_attempts):
        dep.edges.append(PlacedNode(next_id, "edge", GeoCoordinate(lon, lat), cap_rng.uniform(*config.capacity.edge), c.name))
        next_id += 1

    # clients start next to edge nodes of their continent
    by_cont: dict[str, list[PlacedNode]] = {}
    for e in dep.edges:
        by_cont.setdefault(e.continent, []).append(e)
    for cid in range(config.counts.clients):
        c = rng.choices(conts, weights=weights)[0]
        anchors = by_cont.get(c.name)
        if anchors:
            a = anchors[rng.randrange(len(anchors))].position
            lon, lat = _near(rng, c, (a.lon, a.lat), d, config.placement.max_attempts)
        else:
            lon, lat = _uniform_in(rng, c)
        dep.clients.append((cid, GeoCoordinate(lon, lat)))
    return dep
