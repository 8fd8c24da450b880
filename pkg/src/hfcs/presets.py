"""Named experiment matrices: node density, pool size and system comparison."""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from hfcs.metrics import MetricsReport, Stat, aggregate, export_aggregate, export_report
from hfcs.sim.config import ScenarioConfig
from hfcs.sim.runner import run

SCALES = ("paper", "desk")
DESK_DIVISOR = 10
SEEDS_PER_VALUE = 5
# one base cell spanning the whole map puts every edge node into a single pool
GLOBAL_BASE_SIZE = 1000.0


@dataclass(frozen=True)
class Cell:
    label: str
    config: ScenarioConfig


def scaled(cfg: ScenarioConfig, scale: str) -> ScenarioConfig:
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}; expected one of {SCALES}")
    if scale == "paper":
        return cfg
    c = cfg.counts
    counts = dataclasses.replace(c, clients=c.clients // DESK_DIVISOR, edge=c.edge // DESK_DIVISOR,
                                 cnl=max(1, c.cnl // DESK_DIVISOR))
    return dataclasses.replace(cfg, counts=counts)


def _with(cfg: ScenarioConfig, **sections) -> ScenarioConfig:
    changes = {}
    for section, fields in sections.items():
        changes[section] = dataclasses.replace(getattr(cfg, section), **fields)
    return dataclasses.replace(cfg, **changes)


def density(base: ScenarioConfig) -> list[Cell]:
    return [Cell(f"d={d:g}", _with(base, placement={"max_node_distance": d})) for d in (0.5, 2.0, 5.0, 10.0, 20.0)]


def poolsize(base: ScenarioConfig) -> list[Cell]:
    cells = [Cell(f"max={m}", _with(base, pools={"max_members": m})) for m in (10, 20, 30, 40)]
    cells.append(Cell("unlimited", _with(base, pools={"max_members": None})))
    cells.append(Cell("global", _with(base, pools={"max_members": None, "base_cell_size": GLOBAL_BASE_SIZE})))
    return cells


def compare(base: ScenarioConfig) -> list[Cell]:
    base = _with(base, placement={"max_node_distance": 0.5}, pools={"max_members": 30})
    return [Cell(v, dataclasses.replace(base, variant=v)) for v in ("hfcs", "hierarchical", "broadcast")]


PRESETS: dict[str, Callable[[ScenarioConfig], list[Cell]]] = {
    "density": density,
    "poolsize": poolsize,
    "compare": compare,
}


def expand(name: str, scale: str = "desk", seed: int = 0, base: ScenarioConfig | None = None,
           seeds: int = SEEDS_PER_VALUE) -> list[tuple[Cell, int]]:
    """The (cell, seed) run matrix of a preset."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    cfg = scaled(base or ScenarioConfig(), scale)
    return [(cell, seed + k) for cell in PRESETS[name](cfg) for k in range(seeds)]


def _run_cell(job: tuple[Cell, int]) -> MetricsReport:
    cell, seed = job
    return run(cell.config, seed)


@dataclass
class PresetResult:
    name: str
    reports: dict[str, list[MetricsReport]]
    stats: dict[str, dict[str, Stat]]


def run_preset(name: str, scale: str = "desk", seed: int = 0, base: ScenarioConfig | None = None,
               jobs: int = 1, out: str | Path | None = None, seeds: int = SEEDS_PER_VALUE) -> PresetResult:
    matrix = expand(name, scale, seed, base, seeds)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_cell, matrix))
    else:
        reports = [_run_cell(job) for job in matrix]
    grouped: dict[str, list[MetricsReport]] = {}
    for (cell, _), rep in zip(matrix, reports):
        grouped.setdefault(cell.label, []).append(rep)
    stats = {label: aggregate(reps) for label, reps in grouped.items()}
    if out is not None:
        root = Path(out) / name
        for (cell, s), rep in zip(matrix, reports):
            export_report(rep, root / cell.label / f"seed-{s}")
        for label, st in stats.items():
            export_aggregate(st, root / label / "aggregate.csv")
    return PresetResult(name, grouped, stats)
