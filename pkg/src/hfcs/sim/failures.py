"""Failure producer: crash schedule drawn up-front from its own RNG stream."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from hfcs.sim.config import ScenarioConfig
from hfcs.sim.scenario import stream


@dataclass(frozen=True)
class ScheduledFailure:
    time: float
    victim: int
    layer: str


def draw_layer(rng, edge_probability: float) -> str:
    return "edge" if rng.random() < edge_probability else "cnl"


def failure_producer(config: ScenarioConfig, seed: int, edge_ids: Sequence[int],
                     cnl_ids: Sequence[int]) -> list[ScheduledFailure]:
    """Crash times with uniform gaps; victims uniform among still-live nodes of the drawn layer.

    Nodes never recover, so the live set at every crash is known in advance
    and the schedule can be fixed before the run.  The cloud is never chosen.
    """
    fc = config.failures
    if not fc.enabled:
        return []
    rng = stream(seed, "failures")
    live = {"edge": sorted(edge_ids), "cnl": sorted(cnl_ids)}
    out = []
    t = 0.0
    while True:
        t += rng.uniform(*fc.gap)
        if t > config.duration:
            break
        layer = draw_layer(rng, fc.edge_probability)
        u = rng.random()
        if not live[layer]:
            layer = "cnl" if layer == "edge" else "edge"
            if not live[layer]:
                break
        victim = live[layer].pop(int(u * len(live[layer])))
        out.append(ScheduledFailure(t, victim, layer))
    return out
