"""Overload handling: accept locally, redirect to peers, or escalate."""

from __future__ import annotations

from dataclasses import dataclass

from hfcs.metadata import CAPACITY
from hfcs.protocol.node import NodeRuntime, Task

REDIRECT_ATTEMPTS = 3


@dataclass(frozen=True)
class Accepted:
    node: int


@dataclass(frozen=True)
class Redirected:
    target: int


@dataclass(frozen=True)
class Escalated:
    supervisor: int | None


def redirect_candidates(node: NodeRuntime, attempts: int = REDIRECT_ATTEMPTS, exclude=()) -> list[int]:
    """Peers ranked by the capacity gossip last reported for them (ties: lower id)."""
    store = node.store
    ranked = sorted(
        (p for p in node.peers if p != node.id and p not in exclude),
        key=lambda p: (-store.value(p, CAPACITY, 0.0), p),
    )
    return ranked[:attempts]


def handle_task(node: NodeRuntime, task: Task, peers: dict[int, NodeRuntime],
                attempts: int = REDIRECT_ATTEMPTS, message_cost: float = 0.0):
    """Synchronous form of the overload procedure; mutates capacities on success.

    ``peers`` maps node id to the live runtime that answers redirect queries.
    """
    if node.fits(task.required_capacity, message_cost):
        node.capacity_available -= task.required_capacity
        node.running[task.id] = task.required_capacity
        return Accepted(node.id)
    for cand in redirect_candidates(node, attempts):
        peer = peers.get(cand)
        if peer is not None and peer.alive and peer.fits(task.required_capacity, message_cost):
            peer.capacity_available -= task.required_capacity
            peer.running[task.id] = task.required_capacity
            return Redirected(cand)
    return Escalated(node.supervisor)
