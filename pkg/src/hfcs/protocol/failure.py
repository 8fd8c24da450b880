"""Supervisor-side failure detection and CNL takeover."""

from __future__ import annotations

from dataclasses import dataclass, field

from hfcs import geo
from hfcs.metadata import POOLS
from hfcs.protocol.gossip import pools_from_payload
from hfcs.protocol.messages import FailureReport
from hfcs.protocol.node import NodeRuntime
from hfcs.topology import Topology


def report_failure(node: NodeRuntime, suspect: int, now: float = 0.0) -> FailureReport | None:
    if node.supervisor is None:
        return None
    return FailureReport(src=node.id, dst=node.supervisor, send_time=now, suspect=suspect, reporter=node.id)


@dataclass
class FailureDetector:
    """Collects failure reports; asks for a probe once enough distinct reporters agree."""

    window: float = 10.0
    min_reporters: int = 2
    reports: dict[int, list[tuple[float, int]]] = field(default_factory=dict)
    probing: set[int] = field(default_factory=set)

    def on_report(self, report: FailureReport, now: float) -> bool:
        suspect = report.suspect
        if suspect in self.probing:
            return False
        recent = [(t, r) for t, r in self.reports.get(suspect, []) if now - t <= self.window]
        recent.append((now, report.reporter))
        self.reports[suspect] = recent
        if len({r for _, r in recent}) >= self.min_reporters:
            self.probing.add(suspect)
            return True
        return False

    def cleared(self, suspect: int) -> None:
        self.probing.discard(suspect)
        self.reports.pop(suspect, None)

    def confirmed(self, suspect: int) -> None:
        self.cleared(suspect)


def supervisor_on_report(detector: FailureDetector, report: FailureReport, now: float) -> bool:
    """True when the supervisor should probe ``report.suspect``."""
    return detector.on_report(report, now)


@dataclass
class Takeover:
    cell: geo.HexCell
    new_supervisor: int | None
    members: list[int]


def cnl_failure_recovery(topology: Topology, failed_cnl: int, stores: dict[int, "object"]) -> list[Takeover]:
    """Reassign the failed CNL's pools to the nearest CNL that gossiped their member lists.

    ``stores`` maps every live CNL id to its metadata store.  Pools nobody
    holds an address list for come back with ``new_supervisor=None``.
    """
    orphaned = topology.remove_cnl(failed_cnl)
    takeovers = []
    for cell in orphaned:
        center = cell.center
        holders = []
        for cid in sorted(stores):
            if cid == failed_cnl or cid not in topology.cnls:
                continue
            listing = pools_from_payload(stores[cid].value(failed_cnl, POOLS))
            if cell.key in listing:
                holders.append((geo.distance(topology.cnls[cid].position, center), cid, listing[cell.key]))
        if not holders:
            takeovers.append(Takeover(cell, None, []))
            continue
        _, winner, members = min(holders, key=lambda h: (h[0], h[1]))
        topology.assign_supervisor(cell, winner)
        takeovers.append(Takeover(cell, winner, list(members)))
    return takeovers
