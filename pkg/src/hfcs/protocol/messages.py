"""Message types exchanged between simulated nodes and clients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from hfcs.geo import GeoCoordinate


@dataclass(slots=True, kw_only=True)
class Message:
    src: int
    dst: int
    send_time: float = 0.0


@dataclass(slots=True, kw_only=True)
class GossipSyn(Message):
    session: int
    digest: dict


@dataclass(slots=True, kw_only=True)
class GossipAck(Message):
    session: int
    requests: set
    fresher: set


@dataclass(slots=True, kw_only=True)
class GossipAck2(Message):
    session: int
    deltas: set


@dataclass(slots=True, kw_only=True)
class TaskRequest(Message):
    task: Any
    client_pos: GeoCoordinate
    avoid: frozenset = frozenset()


@dataclass(slots=True, kw_only=True)
class TaskReply(Message):
    task_id: int
    accepted: bool
    closest: int


@dataclass(slots=True, kw_only=True)
class RedirectRequest(Message):
    task: Any


@dataclass(slots=True, kw_only=True)
class RedirectReply(Message):
    task_id: int
    accepted: bool


@dataclass(slots=True, kw_only=True)
class Escalation(Message):
    task: Any


@dataclass(slots=True, kw_only=True)
class FailureReport(Message):
    suspect: int
    reporter: int


@dataclass(slots=True, kw_only=True)
class Probe(Message):
    pass


@dataclass(slots=True, kw_only=True)
class ProbeReply(Message):
    pass


@dataclass(slots=True, kw_only=True)
class SupervisorChange(Message):
    supervisor: int


@dataclass(slots=True, kw_only=True)
class MemberRemoved(Message):
    node: int


@dataclass(slots=True, kw_only=True)
class InsertOrder(Message):
    coord: GeoCoordinate
    node: int


@dataclass(slots=True, kw_only=True)
class MetadataPush(Message):
    """Child-to-parent metadata push of the hierarchical baseline."""

    values: dict = field(default_factory=dict)


GOSSIP_KINDS = (GossipSyn, GossipAck, GossipAck2)
