import functools

from hfcs import presets
from hfcs.sim.config import ScenarioConfig
from hfcs.sim.runner import simulation_class
from hfcs.sim.scenario import generate_scenario

DESK_SEEDS = range(5)
CRITERIA: dict[int, str] = {}


def record(number: int, name: str, ok: bool, detail: str) -> bool:
    CRITERIA[number] = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    return ok


def desk_config(variant: str = "hfcs", d: float = 0.5) -> ScenarioConfig:
    cfg = presets.scaled(ScenarioConfig(variant=variant), "desk")
    return presets._with(cfg, placement={"max_node_distance": d}, pools={"max_members": 30})


@functools.lru_cache(maxsize=None)
def desk_run(variant: str, seed: int, d: float = 0.5):
    """(simulation, report) for one desk-scale cell; shared across acceptance checks."""
    cfg = desk_config(variant, d)
    sim = simulation_class(variant)(generate_scenario(cfg, seed), cfg)
    return sim, sim.run()


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[n])
