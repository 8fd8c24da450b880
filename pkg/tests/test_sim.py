import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hfcs import geo
from hfcs.protocol.node import TaskState
from hfcs.sim.config import (
    ConfigError,
    Continent,
    Counts,
    ScenarioConfig,
    config_from_dict,
    dump_config,
    load_config,
)
from hfcs.sim.engine import EventQueue
from hfcs.sim.failures import failure_producer
from hfcs.sim.runner import run, simulation_class
from hfcs.sim.scenario import ScenarioError, generate_scenario, place_agglomerated, stream


def small(variant="hfcs", duration=300.0, **kw):
    return ScenarioConfig(variant=variant, duration=duration, counts=Counts(60, 40, 3), **kw)


# ---- event queue ---------------------------------------------------------


def test_events_run_in_time_then_scheduling_order():
    q = EventQueue()
    seen = []
    for t, tag in ((2.0, "b"), (1.0, "a"), (2.0, "c"), (5.0, "late")):
        q.schedule(t, seen.append, tag)
    q.run_until(3.0)
    assert seen == ["a", "b", "c"] and q.now == 3.0 and len(q) == 1
    with pytest.raises(ValueError):
        q.schedule(1.0, seen.append, "past")


def test_drain_keeps_only_selected_events():
    q = EventQueue()
    seen = []
    q.schedule(1.0, seen.append, "keep")
    q.schedule(2.0, seen.append, "drop")
    q.drain(lambda ev: ev.args[0] == "keep")
    assert seen == ["keep"] and len(q) == 0


# ---- configuration ---------------------------------------------------------


def test_toml_round_trip(tmp_path):
    cfg = ScenarioConfig(variant="broadcast", seed=4, duration=120.0)
    cfg.pools.max_members = None
    path = tmp_path / "c.toml"
    path.write_text(dump_config(cfg))
    back = load_config(path)
    assert back == cfg
    assert math.isinf(back.capacity.cloud)


@pytest.mark.parametrize("data, msg", [
    ({"varient": "hfcs"}, "unknown key"),
    ({"variant": "mesh"}, "unknown variant"),
    ({"gossip": {"interval": "fast"}}, "expected a number"),
    ({"counts": {"edge": 1.5}}, "expected an integer"),
    ({"tasks": {"capacity": [5, 1]}}, "ordered"),
    ({"placement": {"continents": [{"name": "x", "lon_min": 0, "lon_max": 1, "lat_min": 0, "lat_max": 1,
                                    "probability": 0.5}]}}, "sum to 1"),
])
def test_bad_configs_are_rejected(data, msg):
    with pytest.raises(ConfigError, match=msg):
        config_from_dict(data)


def test_unreadable_config_names_the_path(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("variant = \n")
    with pytest.raises(ConfigError, match="bad.toml"):
        load_config(bad)
    with pytest.raises(ConfigError, match="missing.toml"):
        load_config(tmp_path / "missing.toml")


# ---- scenario generation -------------------------------------------------


def test_scenario_is_deterministic_and_numbered():
    cfg = small()
    a, b = generate_scenario(cfg, 3), generate_scenario(cfg, 3)
    assert a == b
    assert a.cloud.id == 0
    assert [c.id for c in a.cnls] == [1, 2, 3]
    assert [e.id for e in a.edges] == list(range(4, 44))
    assert generate_scenario(cfg, 4) != a


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([0.5, 2.0, 5.0]))
def test_agglomerated_points_stay_close_to_earlier_points(seed, d):
    conts = [Continent("a", 0, 40, 0, 30, 0.6, 2), Continent("b", 100, 140, -30, 0, 0.4, 1)]
    pts = place_agglomerated(stream(seed, "t"), conts, 60, d)
    per = {}
    for c, p in pts:
        assert c.contains(*p)
        earlier = per.setdefault(c.name, [])
        if len(earlier) >= c.agglomerations:
            assert min(math.dist(p, q) for q in earlier) <= d + 1e-9
        earlier.append(p)


def test_placement_gives_up_with_a_clear_error():
    tiny = [Continent("dot", 0, 1e-9, 0, 1e-9, 1.0, 1)]
    with pytest.raises(ScenarioError, match="dot"):
        place_agglomerated(stream(0, "t"), tiny, 3, 5.0, attempts=20)


def test_failure_schedule_properties():
    cfg = ScenarioConfig(duration=5000.0)
    sched = failure_producer(cfg, 1, list(range(10, 40)), [1, 2, 3])
    times = [f.time for f in sched]
    assert times == sorted(times) and times[-1] <= 5000.0
    gaps = [b - a for a, b in zip([0.0] + times, times)]
    assert all(50.0 <= g <= 500.0 for g in gaps)
    victims = [f.victim for f in sched]
    assert len(victims) == len(set(victims))
    assert failure_producer(cfg, 1, list(range(10, 40)), [1, 2, 3]) == sched
    assert failure_producer(cfg.replace(failures=type(cfg.failures)(enabled=False)), 1, [1], [2]) == []


# ---- whole runs ----------------------------------------------------------


@pytest.fixture(scope="module", params=["hfcs", "hierarchical", "broadcast"])
def finished(request):
    cfg = small(request.param)
    sim = simulation_class(cfg.variant)(generate_scenario(cfg, 11), cfg)
    return sim, sim.run()


def test_counter_consistency(finished):
    sim, rep = finished
    s = rep.summary
    assert s["tasks_completed"] + s["tasks_in_flight"] + s["tasks_lost"] + s["tasks_rejected"] == s["tasks_issued"]
    states = [t.state for t in sim.tasks.values()]
    assert states.count(TaskState.COMPLETED) == s["tasks_completed"]
    assert states.count(TaskState.LOST) == s["tasks_lost"]
    assert s["failures_detected"] <= s["failures_triggered"]
    assert 0.0 <= s["detection_rate"] <= 1.0


def test_unfinished_tasks_are_young(finished):
    # liveness: anything still open at the end was created within the last max duration
    sim, rep = finished
    max_dur = sim.cfg.tasks.duration[1]
    for t in sim.tasks.values():
        if t.state in (TaskState.ROUTING, TaskState.RUNNING):
            assert t.created >= sim.cfg.duration - max_dur - 1.0


def test_capacity_is_restored(finished):
    sim, _ = finished
    for n in sim.nodes.values():
        if n.alive and not math.isinf(n.capacity_total):
            used = sum(n.running.values())
            assert n.capacity_available == pytest.approx(n.capacity_total - used)


def test_per_node_rows_cover_all_nodes(finished):
    sim, rep = finished
    assert [r.id for r in rep.nodes] == sorted(sim.nodes)
    assert rep.summary["mean_messages_per_node"] == pytest.approx(
        sum(r.messages for r in rep.nodes) / len(rep.nodes))


def test_hfcs_gossip_accounting_and_pool_invariants():
    cfg = small()
    sim = simulation_class("hfcs")(generate_scenario(cfg, 2), cfg)
    rep = sim.run()
    s = rep.summary
    assert s["metadata_messages"] == sum(sim.session_trace.values())
    assert s["metadata_messages"] == (3 * s["gossip_sessions_completed"] + s["gossip_syn_unanswered"]
                                      + 2 * s["gossip_sessions_aborted"])
    sim.topology.check()
    for nid, cell in sim.topology.node_pool.items():
        if sim.nodes[nid].alive:
            assert sim.nodes[nid].supervisor == sim.topology.pools[cell].supervisor or \
                not sim.nodes[sim.topology.pools[cell].supervisor].alive


def test_zero_duration_run_is_empty():
    rep = run(small(duration=0.0), 0)
    assert rep["tasks_issued"] == 0 and rep["metadata_messages"] == 0
    assert rep.intervals == []


def test_cell_geometry_is_consistent_with_pools():
    cfg = small()
    sim = simulation_class("hfcs")(generate_scenario(cfg, 5), cfg)
    sim.setup()
    for nid, cell in sim.topology.node_pool.items():
        assert geo.base_cell_of(sim.topology.node_pos[nid], cell.base_size).level == 0
        assert sim.topology.leaf_cell(sim.topology.node_pos[nid]) == cell
