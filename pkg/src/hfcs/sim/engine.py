"""Discrete-event core shared by HFCS and the baseline systems."""

from __future__ import annotations

import heapq
import itertools
import math
from collections import Counter
from typing import Callable, NamedTuple

from hfcs.geo import GeoCoordinate
from hfcs.metrics import FailureRecord, IntervalRow, MetricsReport, NodeRow, finalize_summary
from hfcs.protocol.messages import (
    Escalation,
    Message,
    RedirectReply,
    RedirectRequest,
    TaskReply,
    TaskRequest,
)
from hfcs.protocol.node import ClientState, Layer, NodeRuntime, Task, TaskState
from hfcs.sim.config import ScenarioConfig
from hfcs.sim.failures import ScheduledFailure, failure_producer
from hfcs.sim.scenario import Deployment, stream

CLOUD_ID = 0


class SimEvent(NamedTuple):
    time: float
    seq: int
    action: Callable
    args: tuple


class EventQueue:
    """Min-heap of events ordered by (time, seq); seq is assigned at scheduling."""

    def __init__(self):
        self._heap: list[SimEvent] = []
        self._seq = itertools.count()
        self.now = 0.0
        self.processed = 0

    def __len__(self):
        return len(self._heap)

    def schedule(self, time: float, action: Callable, *args) -> SimEvent:
        if time < self.now:
            raise ValueError(f"cannot schedule at {time} < now {self.now}")
        ev = SimEvent(time, next(self._seq), action, args)
        heapq.heappush(self._heap, ev)
        return ev

    def run_until(self, end: float) -> None:
        heap = self._heap
        while heap and heap[0].time <= end:
            ev = heapq.heappop(heap)
            self.now = ev.time
            self.processed += 1
            ev.action(*ev.args)
        self.now = max(self.now, end)

    def drain(self, keep: Callable[[SimEvent], bool]) -> None:
        """Run the events accepted by ``keep`` (and whatever they schedule); discard the rest."""
        heap = self._heap
        while heap:
            ev = heapq.heappop(heap)
            if keep(ev):
                self.now = ev.time
                self.processed += 1
                ev.action(*ev.args)


class Simulation:
    """Clients, task bookkeeping, failures and interval accounting.

    Subclasses provide ``setup``, ``route``, ``closest_for``, ``bootstrap``
    and optionally ``on_interval``/``on_death``/``pool_live_size``.
    """

    variant = "base"

    def __init__(self, deployment: Deployment, config: ScenarioConfig):
        self.cfg = config.validate()
        self.dep = deployment
        self.seed = deployment.seed
        self.q = EventQueue()
        self.rng_gossip = stream(self.seed, "gossip")
        self.rng_work = stream(self.seed, "workload")
        self.rng_move = stream(self.seed, "movement")
        self.cost = config.capacity.message_cost
        self._latency = self._latency_table()
        self.nodes: dict[int, NodeRuntime] = {}
        self.clients: dict[int, ClientState] = {}
        self.tasks: dict[int, Task] = {}
        self.count: Counter = Counter()
        self.failure_log: dict[int, FailureRecord] = {}
        self.intervals: list[IntervalRow] = []
        self._task_ids = itertools.count()
        self._routing: dict[int, set[int]] = {}
        self._redirects: dict[int, list] = {}
        self._window_sent = 0
        self._window_death = False
        self._window_live = 0
        self._handlers: dict[type, Callable] = {
            TaskRequest: self._on_task_request,
            RedirectRequest: self._on_redirect_request,
            RedirectReply: self._on_redirect_reply,
            Escalation: self._on_escalation,
        }

    # ---- hooks -------------------------------------------------------

    def setup(self) -> None:
        raise NotImplementedError

    def route(self, node: NodeRuntime, task: Task) -> None:
        raise NotImplementedError

    def closest_for(self, node: NodeRuntime, pos: GeoCoordinate, avoid: frozenset) -> int:
        return node.id

    def bootstrap(self, pos: GeoCoordinate, avoid: frozenset = frozenset()) -> int:
        return CLOUD_ID

    def on_interval(self, k: int) -> None:
        pass

    def on_death(self, node: NodeRuntime) -> None:
        pass

    def pool_live_size(self, node: NodeRuntime) -> int:
        return 0

    def reachable(self, node: NodeRuntime) -> bool:
        return True

    def undetected_dead(self) -> bool:
        return any(not n.alive for n in self.nodes.values()) and any(
            r.detected_at is None for r in self.failure_log.values()
        )

    # ---- plumbing ----------------------------------------------------

    @property
    def now(self) -> float:
        return self.q.now

    def add_node(self, node: NodeRuntime) -> NodeRuntime:
        self.nodes[node.id] = node
        self._routing[node.id] = set()
        self.count["registrations"] += 1
        return node

    def latency(self, a: Layer | str, b: Layer | str) -> float:
        return self._latency[(getattr(a, "value", a), getattr(b, "value", b))]

    def _latency_table(self) -> dict[tuple[str, str], float]:
        lat = self.cfg.latency
        table = {}
        for a in ("client", "edge", "cnl", "cloud"):
            for b in ("client", "edge", "cnl", "cloud"):
                pair = {a, b}
                if pair <= {"edge", "client"}:
                    d = lat.intra_pool
                elif "cloud" in pair and pair & {"edge", "client"}:
                    d = lat.pool_cnl + lat.cnl_cloud
                elif "cloud" in pair:
                    d = lat.cnl_cloud
                else:
                    d = lat.pool_cnl
                table[(a, b)] = d
        return table

    def layer_of(self, node_id: int) -> Layer:
        return self.nodes[node_id].layer

    def send(self, msg: Message, delay: float) -> None:
        msg.send_time = self.now
        self.q.schedule(self.now + delay, self._deliver, msg)

    def send_between(self, msg: Message) -> None:
        self.send(msg, self.latency(self.layer_of(msg.src), self.layer_of(msg.dst)))

    def _deliver(self, msg: Message) -> None:
        if isinstance(msg, TaskReply):
            self._on_reply(msg)
            return
        node = self.nodes.get(msg.dst)
        if node is None or not node.alive or not self.reachable(node):
            self.on_dropped(msg)
            return
        self._handlers[type(msg)](msg)

    def on_dropped(self, msg: Message) -> None:
        if isinstance(msg, (TaskRequest, Escalation)):
            self.lose(msg.task)

    def count_sent(self, node: NodeRuntime, n: int = 1) -> None:
        node.messages += n
        node.window_messages += n
        self.count["metadata_messages"] += n
        self._window_sent += n

    def count_received(self, node: NodeRuntime, n: int = 1) -> None:
        node.messages += n
        node.window_messages += n

    # ---- run ---------------------------------------------------------

    def run(self) -> MetricsReport:
        if self.cfg.duration <= 0:
            # nothing happens in an empty time window, not even registration
            return self.report()
        self.setup()
        for node in self.nodes.values():
            node.publish_capacity(self.cost)
        self._start_clients()
        self._schedule_failures()
        self.q.schedule(0.0, self._interval, 0)
        self.q.run_until(self.cfg.duration)
        self.q.drain(self.finish_after_end)
        return self.report()

    def finish_after_end(self, ev: SimEvent) -> bool:
        """Events still allowed once the clock passes the duration (default: none)."""
        return False

    def _interval(self, k: int) -> None:
        if k > 0:
            self.intervals.append(IntervalRow(k - 1, self._window_live, self._window_sent, self._window_death))
        for node in self.nodes.values():
            node.load_messages = node.window_messages
            node.window_messages = 0
            if node.alive:
                node.publish_capacity(self.cost)
        self._window_sent = 0
        self.on_interval(k)
        self._window_death = self.undetected_dead()
        self._window_live = sum(1 for n in self.nodes.values() if n.alive)
        nxt = (k + 1) * self.cfg.gossip.interval
        if nxt <= self.cfg.duration:
            self.q.schedule(nxt, self._interval, k + 1)

    # ---- clients -----------------------------------------------------

    def _start_clients(self) -> None:
        lo, hi = self.cfg.clients.interval
        for cid, pos in self.dep.clients:
            self.clients[cid] = ClientState(cid, pos, self.bootstrap(pos))
            self.q.schedule(self.rng_work.uniform(lo, hi), self._client_step, cid)

    def _client_step(self, cid: int) -> None:
        cl = self.clients[cid]
        if cl.awaiting is not None:
            if cl.contact != CLOUD_ID:
                cl.unresponsive.add(cl.contact)
            cl.contact = CLOUD_ID
            cl.awaiting = None
        tc = self.cfg.tasks
        task = Task(next(self._task_ids), self.rng_work.uniform(*tc.capacity), self.rng_work.uniform(*tc.duration),
                    cid, created=self.now)
        self.tasks[task.id] = task
        self.count["tasks_issued"] += 1
        cl.awaiting = task.id
        dst = cl.contact
        self.send(TaskRequest(src=cid, dst=dst, task=task, client_pos=cl.position,
                              avoid=frozenset(cl.unresponsive)),
                  self.latency("client", self.layer_of(dst)))
        step = self.cfg.clients.max_step
        cl.position = GeoCoordinate.clamped(cl.position.lon + self.rng_move.uniform(-step, step),
                                            cl.position.lat + self.rng_move.uniform(-step, step))
        lo, hi = self.cfg.clients.interval
        self.q.schedule(self.now + self.rng_work.uniform(lo, hi), self._client_step, cid)

    def _on_reply(self, msg: TaskReply) -> None:
        cl = self.clients[msg.dst]
        if cl.awaiting == msg.task_id:
            cl.awaiting = None
        if msg.closest not in cl.unresponsive:
            cl.contact = msg.closest

    def _on_task_request(self, msg: TaskRequest) -> None:
        node = self.nodes[msg.dst]
        task = msg.task
        closest = self.closest_for(node, msg.client_pos, msg.avoid)
        accepted = node.fits(task.required_capacity, self.cost)
        self.send(TaskReply(src=node.id, dst=msg.src, task_id=task.id, accepted=accepted, closest=closest),
                  self.latency(node.layer, "client"))
        task.holder = node.id
        self.route(node, task)

    # ---- task lifecycle ----------------------------------------------

    def accept(self, node: NodeRuntime, task: Task) -> None:
        req = task.required_capacity
        if not math.isinf(node.capacity_total):
            node.capacity_available -= req
        node.running[task.id] = req
        task.state = TaskState.RUNNING
        task.holder = node.id
        self._routing[node.id].discard(task.id)
        node.publish_capacity(self.cost)
        self.q.schedule(self.now + task.duration, self._finish, node.id, task.id)

    def _finish(self, node_id: int, task_id: int) -> None:
        task = self.tasks[task_id]
        if task.state is not TaskState.RUNNING or task.holder != node_id:
            return
        node = self.nodes[node_id]
        req = node.running.pop(task_id)
        if not math.isinf(node.capacity_total):
            node.capacity_available += req
        task.state = TaskState.COMPLETED
        self.count["tasks_completed"] += 1
        node.publish_capacity(self.cost)

    def lose(self, task: Task) -> None:
        if task.state in (TaskState.ROUTING, TaskState.RUNNING):
            task.state = TaskState.LOST
            self.count["tasks_lost"] += 1

    def reject(self, node: NodeRuntime, task: Task) -> None:
        self._routing[node.id].discard(task.id)
        task.state = TaskState.REJECTED
        self.count["tasks_rejected"] += 1

    def escalate(self, node: NodeRuntime, task: Task, target: int | None) -> None:
        self._routing[node.id].discard(task.id)
        self.count["tasks_escalated"] += 1
        task.hops += 1
        if target is None or target not in self.nodes:
            self.lose(task)
            return
        task.holder = None
        self.send(Escalation(src=node.id, dst=target, task=task), self.latency(node.layer, self.layer_of(target)))

    def _on_escalation(self, msg: Escalation) -> None:
        node = self.nodes[msg.dst]
        msg.task.holder = node.id
        self.route(node, msg.task)

    def start_redirect(self, node: NodeRuntime, task: Task, candidates: list[int],
                       on_exhausted: Callable[[NodeRuntime, Task], None]) -> None:
        """Ask ``candidates`` in order to take the task; fall back to ``on_exhausted``."""
        self._routing[node.id].add(task.id)
        self._redirects[task.id] = [node.id, list(candidates), 0, on_exhausted]
        self._try_redirect(task.id)

    def _try_redirect(self, task_id: int) -> None:
        state = self._redirects[task_id]
        requester, cands, idx, on_exhausted = state
        node = self.nodes[requester]
        task = self.tasks[task_id]
        if idx >= len(cands):
            del self._redirects[task_id]
            on_exhausted(node, task)
            return
        target = cands[idx]
        self.send(RedirectRequest(src=requester, dst=target, task=task), self.latency(node.layer, self.layer_of(target)))
        self.q.schedule(self.now + self.cfg.tasks.redirect_timeout, self._redirect_timeout, task_id, idx)

    def _advance_redirect(self, task_id: int, idx: int) -> None:
        state = self._redirects.get(task_id)
        if state is None or state[2] != idx:
            return
        if not self.nodes[state[0]].alive:
            del self._redirects[task_id]
            return
        state[2] += 1
        self._try_redirect(task_id)

    def _redirect_timeout(self, task_id: int, idx: int) -> None:
        self._advance_redirect(task_id, idx)

    def _on_redirect_request(self, msg: RedirectRequest) -> None:
        node = self.nodes[msg.dst]
        task = msg.task
        ok = task.state is TaskState.ROUTING and node.fits(task.required_capacity, self.cost)
        if ok:
            prev = self.nodes.get(msg.src)
            if prev is not None:
                self._routing[prev.id].discard(task.id)
            self.accept(node, task)
            self.count["tasks_redirected"] += 1
        elif task.state is TaskState.ROUTING:
            self.count["redirect_denials"] += 1
        self.send(RedirectReply(src=node.id, dst=msg.src, task_id=task.id, accepted=ok),
                  self.latency(node.layer, self.layer_of(msg.src)))

    def _on_redirect_reply(self, msg: RedirectReply) -> None:
        state = self._redirects.get(msg.task_id)
        if state is None or state[0] != msg.dst:
            return
        if msg.accepted:
            del self._redirects[msg.task_id]
            return
        cands, idx = state[1], state[2]
        if idx < len(cands) and cands[idx] == msg.src:
            self._advance_redirect(msg.task_id, idx)

    # ---- failures ----------------------------------------------------

    def failure_schedule(self) -> list[ScheduledFailure]:
        return failure_producer(self.cfg, self.seed, [e.id for e in self.dep.edges], [c.id for c in self.dep.cnls])

    def _schedule_failures(self) -> None:
        for f in self.failure_schedule():
            self.q.schedule(f.time, self._kill, f.victim)

    def _kill(self, victim: int) -> None:
        node = self.nodes[victim]
        if not node.alive:
            return
        size = self.pool_live_size(node)
        node.alive = False
        self._window_death = True
        self.count["failures_triggered"] += 1
        self.failure_log[victim] = FailureRecord(self.now, victim, node.layer.value, size)
        self.drop_tasks(node)
        self.on_death(node)

    def drop_tasks(self, node: NodeRuntime) -> None:
        """Lose everything running on or being routed by ``node``."""
        for tid in list(node.running):
            self.lose(self.tasks[tid])
        node.running.clear()
        for tid in list(self._routing[node.id]):
            self.lose(self.tasks[tid])
            self._redirects.pop(tid, None)
        self._routing[node.id].clear()

    def mark_detected(self, victim: int) -> None:
        rec = self.failure_log.get(victim)
        if rec is not None and rec.detected_at is None:
            rec.detected_at = self.now
            self.count["failures_detected"] += 1

    # ---- report ------------------------------------------------------

    def extra_summary(self) -> dict:
        return {}

    def report(self) -> MetricsReport:
        in_flight = sum(1 for t in self.tasks.values() if t.state in (TaskState.ROUTING, TaskState.RUNNING))
        rows = [NodeRow(n.id, n.layer.value, n.position.lon, n.position.lat, n.messages)
                for n in sorted(self.nodes.values(), key=lambda n: n.id)]
        summary = dict(self.count)
        summary.update(
            variant=self.variant,
            seed=self.seed,
            duration=self.cfg.duration,
            tasks_in_flight=in_flight,
            mean_messages_per_node=(sum(r.messages for r in rows) / len(rows)) if rows else 0.0,
        )
        summary.update(self.extra_summary())
        failures = sorted(self.failure_log.values(), key=lambda f: (f.time, f.victim))
        return MetricsReport(finalize_summary(summary), rows, failures, list(self.intervals))
