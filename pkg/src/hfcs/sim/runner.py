"""Entry point that turns a (config, seed) pair into a metrics report."""

from __future__ import annotations

from hfcs.metrics import MetricsReport
from hfcs.sim.config import ScenarioConfig
from hfcs.sim.scenario import Deployment, generate_scenario


def simulation_class(variant: str):
    from hfcs.baselines import BroadcastSimulation, HierarchicalSimulation
    from hfcs.protocol.runtime import HfcsSimulation

    return {"hfcs": HfcsSimulation, "hierarchical": HierarchicalSimulation, "broadcast": BroadcastSimulation}[variant]


def run(config: ScenarioConfig, seed: int | None = None, deployment: Deployment | None = None) -> MetricsReport:
    """Generate the deployment (unless given) and run the configured variant on it."""
    config.validate()
    if deployment is None:
        deployment = generate_scenario(config, seed)
    return simulation_class(config.variant)(deployment, config).run()
