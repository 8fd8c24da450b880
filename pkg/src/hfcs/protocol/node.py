"""Runtime state of simulated nodes, clients and tasks."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from hfcs.geo import GeoCoordinate
from hfcs.metadata import CAPACITY, MetadataStore, write_local


class Layer(str, enum.Enum):
    EDGE = "edge"
    CNL = "cnl"
    CLOUD = "cloud"


class TaskState(str, enum.Enum):
    ROUTING = "routing"
    RUNNING = "running"
    COMPLETED = "completed"
    LOST = "lost"
    REJECTED = "rejected"


TERMINAL = frozenset({TaskState.COMPLETED, TaskState.LOST, TaskState.REJECTED})


@dataclass(slots=True)
class Task:
    id: int
    required_capacity: float
    duration: float
    origin_client: int
    created: float = 0.0
    state: TaskState = TaskState.ROUTING
    holder: int | None = None
    hops: int = 0

    def __post_init__(self):
        if self.required_capacity <= 0 or self.duration <= 0:
            raise ValueError("task capacity and duration must be positive")


@dataclass(eq=False)
class NodeRuntime:
    id: int
    layer: Layer
    position: GeoCoordinate
    capacity_total: float
    capacity_available: float | None = None
    store: MetadataStore | None = None
    peers: list[int] = field(default_factory=list)
    peer_positions: dict[int, GeoCoordinate] = field(default_factory=dict)
    supervisor: int | None = None
    pending_gossip: dict[int, tuple[int, float]] = field(default_factory=dict)
    alive: bool = True
    messages: int = 0
    window_messages: int = 0
    load_messages: int = 0
    running: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.capacity_available is None:
            self.capacity_available = self.capacity_total
        if self.store is None:
            self.store = MetadataStore(self.id, {"position": self.position, "privacy_degree": 0})

    def overhead(self, message_cost: float) -> float:
        return message_cost * self.load_messages

    def effective_capacity(self, message_cost: float = 0.0) -> float:
        if math.isinf(self.capacity_total):
            return math.inf
        return self.capacity_available - self.overhead(message_cost)

    def fits(self, required: float, message_cost: float = 0.0) -> bool:
        return self.effective_capacity(message_cost) >= required

    def publish_capacity(self, message_cost: float = 0.0) -> None:
        value = max(0.0, self.effective_capacity(message_cost))
        if self.store.value(self.id, CAPACITY) != value:
            write_local(self.store, CAPACITY, value)

    def set_peers(self, peers, positions: dict[int, GeoCoordinate] | None = None) -> None:
        self.peers = sorted(p for p in peers if p != self.id)
        if positions is not None:
            self.peer_positions = {p: positions[p] for p in self.peers}
        else:
            self.peer_positions = {p: self.peer_positions[p] for p in self.peers if p in self.peer_positions}
        for p in self.peers:
            self.store.add_peer(p, {"position": self.peer_positions.get(p)})

    def drop_peer(self, peer: int) -> None:
        if peer in self.peer_positions:
            del self.peer_positions[peer]
        if peer in self.peers:
            self.peers.remove(peer)
        if peer != self.id:
            self.store.remove(peer)


@dataclass(eq=False)
class ClientState:
    id: int
    position: GeoCoordinate
    contact: int
    awaiting: int | None = None
    unresponsive: set[int] = field(default_factory=set)
    active: bool = True
