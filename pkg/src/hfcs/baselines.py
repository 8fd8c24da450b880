"""Reference systems: a strict hierarchy and a flat all-to-all broadcast.

Both publish metadata on synchronized ticks at multiples of the gossip
interval and share the client, task and failure machinery with HFCS.
"""

from __future__ import annotations

import math

from hfcs import geo
from hfcs.geo import GeoCoordinate
from hfcs.protocol.node import Layer, NodeRuntime, Task
from hfcs.sim.engine import CLOUD_ID, Simulation

_LAYERS = {"cloud": Layer.CLOUD, "cnl": Layer.CNL, "edge": Layer.EDGE}


def _install_nodes(sim: Simulation) -> None:
    for p in sim.dep.nodes:
        sim.add_node(NodeRuntime(p.id, _LAYERS[p.layer], p.position, p.capacity))


class HierarchicalSimulation(Simulation):
    """Edge nodes report to their nearest CNL, CNLs to the cloud; overload only escalates."""

    variant = "hierarchical"

    def setup(self) -> None:
        _install_nodes(self)
        cnls = [(c.id, c.position) for c in self.dep.cnls]
        self.children: dict[int, set[int]] = {nid: set() for nid in self.nodes}
        self.known: dict[int, float] = {}
        for c in self.dep.cnls:
            self.nodes[c.id].supervisor = CLOUD_ID
            self.children[CLOUD_ID].add(c.id)
        for e in self.dep.edges:
            parent = geo.nearest(cnls, e.position) if cnls else CLOUD_ID
            self.nodes[e.id].supervisor = parent
            self.children[parent].add(e.id)

    def on_interval(self, k: int) -> None:
        # a parent notices a child that missed its push slot
        for victim, rec in self.failure_log.items():
            if rec.detected_at is not None:
                continue
            parent = self.nodes[self.nodes[victim].supervisor]
            if parent.alive:
                self.children[parent.id].discard(victim)
                self.mark_detected(victim)
        pushes = []
        for node in self.nodes.values():
            if node.alive and node.supervisor is not None:
                self.count_sent(node)
                pushes.append((node.id, node.supervisor, node.effective_capacity(self.cost)))
        by_delay: dict[float, list] = {}
        for src, dst, value in pushes:
            d = self.latency(self.nodes[src].layer, self.nodes[dst].layer)
            by_delay.setdefault(d, []).append((src, dst, value))
        for d in sorted(by_delay):
            self.q.schedule(self.now + d, self._deliver_pushes, by_delay[d])

    def _deliver_pushes(self, batch) -> None:
        for src, dst, value in batch:
            parent = self.nodes[dst]
            if parent.alive:
                self.count_received(parent)
                self.known[src] = value

    def route(self, node: NodeRuntime, task: Task) -> None:
        if node.fits(task.required_capacity, self.cost):
            self.accept(node, task)
        else:
            self.escalate(node, task, node.supervisor)

    def bootstrap(self, pos: GeoCoordinate, avoid: frozenset = frozenset()) -> int:
        cnls = [(c, self.nodes[c].position) for c in self.children[CLOUD_ID] if c not in avoid]
        if not cnls:
            return CLOUD_ID
        cnl = geo.nearest(cnls, pos)
        if not self.nodes[cnl].alive:
            return CLOUD_ID
        edges = [(e, self.nodes[e].position) for e in self.children[cnl] if e not in avoid]
        return geo.nearest(edges, pos) if edges else cnl

    def closest_for(self, node: NodeRuntime, pos: GeoCoordinate, avoid: frozenset) -> int:
        return self.bootstrap(pos, avoid)

    def reachable(self, node: NodeRuntime) -> bool:
        # an edge node is only reachable through its parent
        return node.layer is not Layer.EDGE or self.nodes[node.supervisor].alive

    def on_death(self, node: NodeRuntime) -> None:
        if node.layer is Layer.CNL:
            for child in sorted(self.children[node.id]):
                self.drop_tasks(self.nodes[child])

    def undetected_dead(self) -> bool:
        # a dead node never pushes, so detection lag does not disturb per-interval counts
        return False

    def pool_live_size(self, node: NodeRuntime) -> int:
        siblings = self.children.get(node.supervisor, ()) if node.supervisor is not None else ()
        return sum(1 for s in siblings if self.nodes[s].alive)


class BroadcastSimulation(Simulation):
    """Every node sends its capacity to every other node each interval; no escalation."""

    variant = "broadcast"

    def setup(self) -> None:
        _install_nodes(self)
        self.view: set[int] = set(self.nodes)
        self.known: dict[int, float] = {nid: n.effective_capacity(self.cost) for nid, n in self.nodes.items()}
        ids = sorted(self.nodes)
        # static positions, so each node's distance ranking is computed once
        self.by_distance: dict[int, list[int]] = {}
        for a in ids:
            pa = self.nodes[a].position
            self.by_distance[a] = sorted((b for b in ids if b != a),
                                         key=lambda b: (geo.distance(pa, self.nodes[b].position), b))
        self._index = None

    def _view_index(self) -> geo.PointIndex:
        if self._index is None:
            items = sorted((nid, self.nodes[nid].position) for nid in self.view)
            self._index = geo.PointIndex(items)
        return self._index

    def on_interval(self, k: int) -> None:
        for victim in sorted(self.failure_log):
            if victim in self.view:
                self.view.discard(victim)
                self._index = None
                self.mark_detected(victim)
        senders = [nid for nid in sorted(self.view) if self.nodes[nid].alive]
        fan = len(self.view) - 1
        values = {}
        for nid in senders:
            node = self.nodes[nid]
            self.count_sent(node, fan)
            values[nid] = node.effective_capacity(self.cost)
        self.q.schedule(self.now + self.cfg.latency.intra_pool, self._deliver_broadcast, values)

    def _deliver_broadcast(self, values: dict[int, float]) -> None:
        self.known.update(values)
        n = len(values)
        for nid in self.view:
            node = self.nodes[nid]
            if node.alive:
                self.count_received(node, n - 1 if nid in values else n)

    def route(self, node: NodeRuntime, task: Task) -> None:
        if node.fits(task.required_capacity, self.cost):
            self.accept(node, task)
            return
        need = task.required_capacity
        cands = []
        for other in self.by_distance[node.id]:
            if other in self.view and self.known.get(other, -math.inf) >= need:
                cands.append(other)
                if len(cands) == self.cfg.tasks.redirect_attempts:
                    break
        if cands:
            self.start_redirect(node, task, cands, self.reject)
        else:
            self.reject(node, task)

    def bootstrap(self, pos: GeoCoordinate, avoid: frozenset = frozenset()) -> int:
        if avoid & self.view:
            items = [(nid, self.nodes[nid].position) for nid in self.view if nid not in avoid]
            return geo.nearest(items, pos) if items else CLOUD_ID
        return self._view_index().nearest(pos)

    def closest_for(self, node: NodeRuntime, pos: GeoCoordinate, avoid: frozenset) -> int:
        return self.bootstrap(pos, avoid)

    def pool_live_size(self, node: NodeRuntime) -> int:
        return sum(1 for nid in self.view if self.nodes[nid].alive)
