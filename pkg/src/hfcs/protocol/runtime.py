"""HFCS run: gossiping edge pools under CNL supervisors, with a cloud on top."""

from __future__ import annotations

import itertools

from hfcs import geo
from hfcs.geo import GeoCoordinate
from hfcs.metadata import CAPACITY, POOLS, MetadataStore
from hfcs.protocol import gossip
from hfcs.protocol.failure import FailureDetector, cnl_failure_recovery
from hfcs.protocol.messages import (
    GOSSIP_KINDS,
    FailureReport,
    GossipAck,
    GossipAck2,
    GossipSyn,
    MemberRemoved,
    Probe,
    ProbeReply,
    SupervisorChange,
)
from hfcs.protocol.node import Layer, NodeRuntime, Task
from hfcs.protocol.tasks import redirect_candidates
from hfcs.sim.engine import CLOUD_ID, Simulation
from hfcs.topology import CloudNode, Topology


class HfcsSimulation(Simulation):
    variant = "hfcs"

    def __init__(self, deployment, config):
        super().__init__(deployment, config)
        self.topology: Topology | None = None
        self.detectors: dict[int, FailureDetector] = {}
        self.session_trace: dict[int, int] = {}
        self._sessions = itertools.count()
        self._handlers.update({
            GossipSyn: self._on_syn,
            GossipAck: self._on_ack,
            GossipAck2: self._on_ack2,
            FailureReport: self._on_failure_report,
            Probe: self._on_probe,
            ProbeReply: self._on_probe_reply,
            SupervisorChange: self._on_supervisor_change,
            MemberRemoved: self._on_member_removed,
        })
        self._pool_stats = (0, 0.0)

    # ---- setup -------------------------------------------------------

    def setup(self) -> None:
        cfg = self.cfg
        dep = self.dep
        topo = Topology(cfg.pools.base_cell_size, cfg.pools.max_members, CloudNode(CLOUD_ID, dep.cloud.position))
        self.topology = topo
        self.add_node(NodeRuntime(CLOUD_ID, Layer.CLOUD, dep.cloud.position, dep.cloud.capacity))
        for c in dep.cnls:
            topo.register_cnl_node(c.position, c.id)
            store = MetadataStore(c.id, {"position": c.position, "privacy_degree": 0}, (CAPACITY, POOLS))
            self.add_node(NodeRuntime(c.id, Layer.CNL, c.position, c.capacity, store=store, supervisor=CLOUD_ID))
        for e in dep.edges:
            reg = topo.register_edge_node(e.position, e.id)
            self.add_node(NodeRuntime(e.id, Layer.EDGE, e.position, e.capacity, supervisor=reg.supervisor))

        # registration runs at t=0, so the resulting membership is installed in one go
        for pool in topo.pools.values():
            positions = {m: topo.node_pos[m] for m in pool.members}
            for m in pool.members:
                node = self.nodes[m]
                node.supervisor = pool.supervisor
                node.set_peers(pool.members, positions)
        cnl_pos = {cid: c.position for cid, c in topo.cnls.items()}
        for cid in topo.cnls:
            node = self.nodes[cid]
            node.set_peers(cnl_pos, cnl_pos)
            gossip.refresh_pool_payload(node, topo.pools_of(cid))
            self.detectors[cid] = FailureDetector(cfg.detection.report_window, cfg.detection.min_reporters)
        self.detectors[CLOUD_ID] = FailureDetector(cfg.detection.report_window, cfg.detection.min_reporters)

        sizes = [len(p.members) for p in topo.pools.values() if p.members]
        self._pool_stats = (len(sizes), (sum(sizes) / len(sizes)) if sizes else 0.0)

        interval = cfg.gossip.interval
        for nid in sorted(self.nodes):
            if nid != CLOUD_ID:
                self.q.schedule(self.rng_gossip.uniform(0.0, interval), self._gossip_tick, nid)

    # ---- gossip ------------------------------------------------------

    def _gossip_tick(self, nid: int) -> None:
        node = self.nodes[nid]
        if not node.alive:
            return
        g = self.cfg.gossip
        if node.layer is Layer.CNL:
            gossip.refresh_pool_payload(node, self.topology.pools_of(nid))
        for syn in gossip.gossip_tick(node, self.rng_gossip, self.now, self._sessions.__next__, g.fanout,
                                      g.reply_deadline):
            self.session_trace[syn.session] = 1
            self.count_sent(node)
            self.send_between(syn)
            self.q.schedule(self.now + g.reply_deadline, self._reply_deadline, nid, syn.session)
        self.q.schedule(self.now + g.interval, self._gossip_tick, nid)

    def _on_syn(self, msg: GossipSyn) -> None:
        node = self.nodes[msg.dst]
        self.count_received(node)
        ack = gossip.on_syn(node, msg, self.now)
        self.session_trace[msg.session] += 1
        self.count_sent(node)
        self.send_between(ack)

    def _on_ack(self, msg: GossipAck) -> None:
        node = self.nodes[msg.dst]
        self.count_received(node)
        if msg.session not in node.pending_gossip:
            return
        ack2 = gossip.on_ack(node, msg, self.now)
        self.session_trace[msg.session] += 1
        self.count_sent(node)
        self.send_between(ack2)

    def _on_ack2(self, msg: GossipAck2) -> None:
        node = self.nodes[msg.dst]
        self.count_received(node)
        gossip.on_ack2(node, msg)

    def _reply_deadline(self, nid: int, session: int) -> None:
        node = self.nodes[nid]
        entry = node.pending_gossip.pop(session, None)
        if entry is None or not node.alive:
            return
        partner = entry[0]
        if node.supervisor is None:
            return
        self.send_between(FailureReport(src=nid, dst=node.supervisor, suspect=partner, reporter=nid))

    def finish_after_end(self, ev) -> bool:
        # sessions opened before the end run to completion; nothing new starts
        return ev.action == self._deliver and isinstance(ev.args[0], GOSSIP_KINDS)

    # ---- failure handling --------------------------------------------

    def _supervises(self, sup: int, suspect: int) -> bool:
        topo = self.topology
        if sup == CLOUD_ID:
            return suspect in topo.cnls
        cell = topo.node_pool.get(suspect)
        return cell is not None and topo.pools[cell].supervisor == sup

    def _on_failure_report(self, msg: FailureReport) -> None:
        sup = msg.dst
        if not self._supervises(sup, msg.suspect):
            return
        if self.detectors[sup].on_report(msg, self.now):
            self.send_between(Probe(src=sup, dst=msg.suspect))
            self.q.schedule(self.now + self.cfg.detection.probe_timeout, self._probe_timeout, sup, msg.suspect)

    def _on_probe(self, msg: Probe) -> None:
        self.send_between(ProbeReply(src=msg.dst, dst=msg.src))

    def _on_probe_reply(self, msg: ProbeReply) -> None:
        self.detectors[msg.dst].cleared(msg.src)

    def _probe_timeout(self, sup: int, suspect: int) -> None:
        det = self.detectors[sup]
        if suspect not in det.probing:
            return
        det.confirmed(suspect)
        if not self.nodes[sup].alive or not self._supervises(sup, suspect):
            return
        if sup == CLOUD_ID:
            self._cnl_failure_routine(suspect)
        else:
            pool = self.topology.remove_edge_node(suspect)
            for m in sorted(pool.members):
                self.send_between(MemberRemoved(src=sup, dst=m, node=suspect))
        self.mark_detected(suspect)

    def _cnl_failure_routine(self, failed: int) -> None:
        topo = self.topology
        stores = {cid: self.nodes[cid].store for cid in topo.cnls if cid != failed}
        for t in cnl_failure_recovery(topo, failed, stores):
            if t.new_supervisor is None:
                self.count["lost_pools"] += 1
                continue
            for m in t.members:
                if m in self.nodes:
                    self.send_between(SupervisorChange(src=t.new_supervisor, dst=m, supervisor=t.new_supervisor))
        for cid in sorted(topo.cnls):
            self.send_between(MemberRemoved(src=CLOUD_ID, dst=cid, node=failed))

    def _on_supervisor_change(self, msg: SupervisorChange) -> None:
        self.nodes[msg.dst].supervisor = msg.supervisor

    def _on_member_removed(self, msg: MemberRemoved) -> None:
        self.nodes[msg.dst].drop_peer(msg.node)

    def pool_live_size(self, node: NodeRuntime) -> int:
        topo = self.topology
        if node.layer is Layer.CNL:
            return sum(1 for cid in topo.cnls if self.nodes[cid].alive)
        cell = topo.node_pool.get(node.id)
        if cell is None:
            return 0
        return sum(1 for m in topo.pools[cell].members if self.nodes[m].alive)

    def undetected_dead(self) -> bool:
        topo = self.topology
        return any(not self.nodes[v].alive and (v in topo.node_pool or v in topo.cnls) for v in self.failure_log)

    # ---- tasks -------------------------------------------------------

    def route(self, node: NodeRuntime, task: Task) -> None:
        if node.fits(task.required_capacity, self.cost):
            self.accept(node, task)
            return
        cands = redirect_candidates(node, self.cfg.tasks.redirect_attempts)
        if cands:
            self.start_redirect(node, task, cands, self._escalate_up)
        else:
            self._escalate_up(node, task)

    def _escalate_up(self, node: NodeRuntime, task: Task) -> None:
        self.escalate(node, task, node.supervisor)

    def closest_for(self, node: NodeRuntime, pos: GeoCoordinate, avoid: frozenset) -> int:
        topo = self.topology
        if node.layer is Layer.EDGE:
            home = topo.node_pool.get(node.id)
            if home is not None and topo.leaf_cell(pos) == home:
                items = [(node.id, node.position)]
                items += [(p, q) for p, q in node.peer_positions.items() if p not in avoid]
                return geo.nearest(items, pos)
            self.count["geofence_escalations"] += 1
            sup = self.nodes.get(node.supervisor)
            if sup is None or not sup.alive:
                return node.id
            return topo.closest_edge_node(pos, avoid)
        return self.bootstrap(pos, avoid)

    def bootstrap(self, pos: GeoCoordinate, avoid: frozenset = frozenset()) -> int:
        return self.topology.client_bootstrap(pos, avoid, avoid)

    # ---- report ------------------------------------------------------

    def extra_summary(self) -> dict:
        counts = list(self.session_trace.values())
        return {
            "pools": self._pool_stats[0],
            "mean_pool_size": self._pool_stats[1],
            "gossip_sessions_completed": counts.count(3),
            "gossip_syn_unanswered": counts.count(1),
            "gossip_sessions_aborted": counts.count(2),
        }
