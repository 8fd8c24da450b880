"""Versioned per-node metadata and the digest/diff/merge algebra of gossip.

Every dynamic field carries a per-owner write counter.  Only the owning node
ever creates a new version, so "strictly greater version wins" is a total,
conflict-free merge rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable

NodeId = Hashable
Digest = dict  # node_id -> {field: version}
Delta = tuple  # (node_id, field, value, version)

CAPACITY = "available_capacity"
POOLS = "pools"


class StaticFieldError(ValueError):
    pass


@dataclass
class FieldValue:
    value: Any
    version: int = 0


@dataclass
class NodeMetadata:
    node_id: NodeId
    static_fields: dict[str, Any] = field(default_factory=dict)
    dynamic_fields: dict[str, FieldValue] = field(default_factory=dict)


class MetadataStore:
    """The owner's record plus whatever it has learned about peers."""

    def __init__(self, owner: NodeId, static_fields: dict | None = None, dynamic_fields: Iterable[str] = (CAPACITY,)):
        self.owner = owner
        self.dynamic_names = frozenset(dynamic_fields)
        self.records: dict[NodeId, NodeMetadata] = {owner: NodeMetadata(owner, dict(static_fields or {}))}

    @property
    def own(self) -> NodeMetadata:
        return self.records[self.owner]

    def value(self, node_id: NodeId, name: str, default=None):
        rec = self.records.get(node_id)
        if rec is None:
            return default
        fv = rec.dynamic_fields.get(name)
        return default if fv is None else fv.value

    def version(self, node_id: NodeId, name: str) -> int:
        rec = self.records.get(node_id)
        if rec is None:
            return 0
        fv = rec.dynamic_fields.get(name)
        return 0 if fv is None else fv.version

    def add_peer(self, node_id: NodeId, static_fields: dict | None = None) -> None:
        rec = self.records.get(node_id)
        if rec is None:
            self.records[node_id] = NodeMetadata(node_id, dict(static_fields or {}))
        elif static_fields and not rec.static_fields:
            rec.static_fields = dict(static_fields)

    def remove(self, node_id: NodeId) -> None:
        if node_id == self.owner:
            raise ValueError("a store cannot drop its owner's record")
        self.records.pop(node_id, None)

    def retain(self, keep: Iterable[NodeId]) -> None:
        keep = set(keep)
        keep.add(self.owner)
        for nid in [n for n in self.records if n not in keep]:
            del self.records[nid]

    def snapshot(self) -> tuple:
        """Canonical, comparable image of the store (ordering independent)."""
        out = []
        for nid in sorted(self.records, key=repr):
            rec = self.records[nid]
            fields = tuple(
                (name, fv.version, repr(fv.value)) for name, fv in sorted(rec.dynamic_fields.items())
            )
            out.append((repr(nid), fields))
        return tuple(out)


def write_local(store: MetadataStore, name: str, value: Any) -> int:
    """Write one of the owner's dynamic fields and bump its version."""
    rec = store.own
    if name in rec.static_fields or name not in store.dynamic_names:
        raise StaticFieldError(f"{name!r} is not a dynamic field of node {store.owner!r}")
    fv = rec.dynamic_fields.get(name)
    if fv is None:
        fv = rec.dynamic_fields[name] = FieldValue(value, 0)
    fv.value = value
    fv.version += 1
    return fv.version


def digest(store: MetadataStore) -> Digest:
    return {
        nid: {name: fv.version for name, fv in rec.dynamic_fields.items()}
        for nid, rec in store.records.items()
    }


def diff(local: MetadataStore, remote_digest: Digest) -> tuple[set, set]:
    """Compare ``local`` against a peer's digest.

    Returns ``(requests, fresher)``: the (node, field) pairs the peer holds
    newer versions of, and the (node, field, value, version) deltas where
    ``local`` is ahead or the peer has never heard of the field.
    """
    requests = set()
    fresher = set()
    for nid, fields in remote_digest.items():
        rec = local.records.get(nid)
        for name, rver in fields.items():
            fv = rec.dynamic_fields.get(name) if rec is not None else None
            if fv is None or rver > fv.version:
                requests.add((nid, name))
    for nid, rec in local.records.items():
        rfields = remote_digest.get(nid, {})
        for name, fv in rec.dynamic_fields.items():
            if fv.version > rfields.get(name, 0):
                fresher.add((nid, name, fv.value, fv.version))
    return requests, fresher


def deltas_for(store: MetadataStore, requests: Iterable[tuple]) -> set:
    """Current values for the requested (node, field) pairs that we hold."""
    out = set()
    for nid, name in requests:
        rec = store.records.get(nid)
        if rec is None:
            continue
        fv = rec.dynamic_fields.get(name)
        if fv is not None:
            out.add((nid, name, fv.value, fv.version))
    return out


def merge(store: MetadataStore, deltas: Iterable[Delta]) -> int:
    """Apply deltas whose version beats what we hold; returns how many applied."""
    applied = 0
    for nid, name, value, version in deltas:
        rec = store.records.get(nid)
        if rec is None:
            rec = store.records[nid] = NodeMetadata(nid)
        fv = rec.dynamic_fields.get(name)
        if fv is None:
            rec.dynamic_fields[name] = FieldValue(value, version)
            applied += 1
        elif version > fv.version:
            fv.value = value
            fv.version = version
            applied += 1
    return applied
