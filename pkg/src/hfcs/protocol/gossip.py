"""Three-message anti-entropy sessions (Syn, Ack, Ack2)."""

from __future__ import annotations

import random
from typing import Callable

from hfcs.metadata import POOLS, deltas_for, diff, digest, merge, write_local
from hfcs.protocol.messages import GossipAck, GossipAck2, GossipSyn
from hfcs.protocol.node import NodeRuntime

DEFAULT_FANOUT = 3


def gossip_tick(node: NodeRuntime, rng: random.Random, now: float, next_session: Callable[[], int],
                fanout: int = DEFAULT_FANOUT, reply_deadline: float = 6.0) -> list[GossipSyn]:
    """Open up to ``fanout`` sessions with distinct, uniformly chosen peers."""
    if not node.alive or not node.peers:
        return []
    targets = rng.sample(node.peers, min(fanout, len(node.peers)))
    d = digest(node.store)
    out = []
    for partner in targets:
        sid = next_session()
        node.pending_gossip[sid] = (partner, now + reply_deadline)
        out.append(GossipSyn(src=node.id, dst=partner, send_time=now, session=sid, digest=d))
    return out


def on_syn(partner: NodeRuntime, syn: GossipSyn, now: float = 0.0) -> GossipAck:
    requests, fresher = diff(partner.store, syn.digest)
    return GossipAck(src=partner.id, dst=syn.src, send_time=now, session=syn.session,
                     requests=requests, fresher=fresher)


def on_ack(initiator: NodeRuntime, ack: GossipAck, now: float = 0.0) -> GossipAck2:
    initiator.pending_gossip.pop(ack.session, None)
    merge(initiator.store, ack.fresher)
    return GossipAck2(src=initiator.id, dst=ack.src, send_time=now, session=ack.session,
                      deltas=deltas_for(initiator.store, ack.requests))


def on_ack2(partner: NodeRuntime, ack2: GossipAck2) -> None:
    merge(partner.store, ack2.deltas)


def gossip_session(initiator: NodeRuntime, partner: NodeRuntime, session: int = 0, now: float = 0.0) -> list:
    """Run one complete session synchronously; returns the messages exchanged."""
    syn = GossipSyn(src=initiator.id, dst=partner.id, send_time=now, session=session,
                    digest=digest(initiator.store))
    if not partner.alive:
        return [syn]
    ack = on_syn(partner, syn, now)
    ack2 = on_ack(initiator, ack, now)
    on_ack2(partner, ack2)
    return [syn, ack, ack2]


def cnl_gossip_payload(pools) -> tuple:
    """Canonical (pool key, member ids) listing of a CNL's supervised pools."""
    return tuple(sorted((p.cell.key, tuple(sorted(p.members))) for p in pools))


def refresh_pool_payload(node: NodeRuntime, pools) -> bool:
    """Write the pool listing into the CNL's store if it changed."""
    payload = cnl_gossip_payload(pools)
    if node.store.value(node.id, POOLS) != payload:
        write_local(node.store, POOLS, payload)
        return True
    return False


def pools_from_payload(payload) -> dict:
    return {key: list(members) for key, members in (payload or ())}
