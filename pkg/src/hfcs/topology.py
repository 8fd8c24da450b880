"""Edge pools, CNL supervision and the cloud's registries.

The pool tree is rooted in the base hex grid.  A pool whose insertion would
exceed ``max_members`` is retired and replaced by its seven sub-pools; later
lookups descend through retired cells to the leaf that holds a coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from hfcs import geo
from hfcs.geo import GeoCoordinate, HexCell

CLOUD_ID = 0


class TopologyError(RuntimeError):
    pass


class NoCnlAvailable(TopologyError):
    pass


@dataclass
class EdgePool:
    cell: HexCell
    supervisor: int
    members: set[int] = field(default_factory=set)
    max_members: int | None = None

    @property
    def full(self) -> bool:
        return self.max_members is not None and len(self.members) >= self.max_members


@dataclass
class CnlNode:
    id: int
    position: GeoCoordinate
    supervised_pools: set[HexCell] = field(default_factory=set)


@dataclass
class CloudNode:
    id: int = CLOUD_ID
    position: GeoCoordinate = GeoCoordinate(8.68, 50.11)
    cnl_registry: dict[int, GeoCoordinate] = field(default_factory=dict)


@dataclass
class Registration:
    node_id: int
    supervisor: int
    peers: list[int]
    cell: HexCell
    splits: list[HexCell]


@dataclass
class Transfer:
    cell: HexCell
    old_supervisor: int
    new_supervisor: int
    members: tuple[int, ...]


class Topology:
    def __init__(self, base_size: float = geo.DEFAULT_BASE_SIZE, max_members: int | None = None,
                 cloud: CloudNode | None = None):
        if max_members is not None and max_members < 1:
            raise ValueError("max_members must be positive or None")
        self.base_size = base_size
        self.max_members = max_members
        self.cloud = cloud or CloudNode()
        self.cnls: dict[int, CnlNode] = {}
        self.pools: dict[HexCell, EdgePool] = {}
        self.retired: set[HexCell] = set()
        self.node_pool: dict[int, HexCell] = {}
        self.node_pos: dict[int, GeoCoordinate] = {}
        self._next_id = self.cloud.id + 1

    def _allocate(self, node_id: int | None) -> int:
        if node_id is None:
            node_id = self._next_id
        if node_id in self.node_pos or node_id in self.cnls or node_id == self.cloud.id:
            raise TopologyError(f"duplicate node id {node_id}")
        self._next_id = max(self._next_id, node_id + 1)
        return node_id

    # ---- lookups -------------------------------------------------------

    def leaf_cell(self, coord: GeoCoordinate) -> HexCell:
        cell = geo.base_cell_of(coord, self.base_size)
        while cell in self.retired:
            cell = geo.nearest_child(cell, coord)
        return cell

    def pool_of(self, node_id: int) -> EdgePool:
        return self.pools[self.node_pool[node_id]]

    def nearest_cnl(self, coord: GeoCoordinate, exclude: Iterable[int] = ()) -> int | None:
        exclude = set(exclude)
        items = [(cid, pos) for cid, pos in self.cloud.cnl_registry.items() if cid not in exclude]
        return geo.nearest(items, coord) if items else None

    def pools_of(self, cnl_id: int) -> list[EdgePool]:
        return [self.pools[c] for c in sorted(self.cnls[cnl_id].supervised_pools, key=lambda c: c.key)]

    # ---- registration --------------------------------------------------

    def register_cnl_node(self, coord: GeoCoordinate, cnl_id: int | None = None) -> tuple[int, list[Transfer]]:
        cnl_id = self._allocate(cnl_id)
        new = CnlNode(cnl_id, coord)
        transfers = []
        for other in sorted(self.cnls.values(), key=lambda c: c.id):
            for cell in sorted(other.supervised_pools, key=lambda c: c.key):
                center = cell.center
                if geo.distance(center, coord) < geo.distance(center, other.position):
                    transfers.append(Transfer(cell, other.id, cnl_id, tuple(sorted(self.pools[cell].members))))
        for t in transfers:
            self.cnls[t.old_supervisor].supervised_pools.discard(t.cell)
            new.supervised_pools.add(t.cell)
            self.pools[t.cell].supervisor = cnl_id
        self.cnls[cnl_id] = new
        self.cloud.cnl_registry[cnl_id] = coord
        return cnl_id, transfers

    def register_edge_node(self, coord: GeoCoordinate, node_id: int | None = None) -> Registration:
        if not self.cloud.cnl_registry:
            raise NoCnlAvailable("no CNL node registered")
        node_id = self._allocate(node_id)
        splits = []
        cell = self.leaf_cell(coord)
        pool = self.pools.get(cell)
        if pool is None:
            sup = self.nearest_cnl(cell.center)
            pool = self._materialize(cell, sup)
        while pool.full:
            if cell.level >= geo.MAX_LEVEL:
                raise TopologyError(f"cannot split {cell} further")
            splits.append(cell)
            self.split_pool(pool)
            cell = self.leaf_cell(coord)
            pool = self.pools[cell]
        peers = sorted(pool.members)
        pool.members.add(node_id)
        self.node_pool[node_id] = cell
        self.node_pos[node_id] = coord
        return Registration(node_id, pool.supervisor, peers, cell, splits)

    def _materialize(self, cell: HexCell, supervisor: int) -> EdgePool:
        pool = EdgePool(cell, supervisor, set(), self.max_members)
        self.pools[cell] = pool
        self.cnls[supervisor].supervised_pools.add(cell)
        return pool

    def split_pool(self, pool: EdgePool) -> list[EdgePool]:
        """Replace ``pool`` by its seven sub-pools, moving members to the nearest child."""
        children = geo.subdivide(pool.cell)
        subpools = [self._materialize(c, pool.supervisor) for c in children]
        cxs = [c.center_xy for c in children]
        for nid in sorted(pool.members):
            p = self.node_pos[nid]
            k = min(range(7), key=lambda k: (geo._distance_xy(cxs[k][0], cxs[k][1], p.lon, p.lat), cxs[k]))
            subpools[k].members.add(nid)
            self.node_pool[nid] = children[k]
        del self.pools[pool.cell]
        self.cnls[pool.supervisor].supervised_pools.discard(pool.cell)
        self.retired.add(pool.cell)
        # a sub-pool can still be over-full under heavy clustering
        for sp in list(subpools):
            if self.max_members is not None and len(sp.members) > self.max_members:
                self.split_pool(sp)
        return subpools

    # ---- removal and reassignment --------------------------------------

    def remove_edge_node(self, node_id: int) -> EdgePool:
        pool = self.pool_of(node_id)
        pool.members.discard(node_id)
        del self.node_pool[node_id]
        del self.node_pos[node_id]
        return pool

    def remove_cnl(self, cnl_id: int) -> list[HexCell]:
        """Drop a CNL from the registry; returns the pools it left orphaned."""
        self.cloud.cnl_registry.pop(cnl_id, None)
        cnl = self.cnls.pop(cnl_id)
        return sorted(cnl.supervised_pools, key=lambda c: c.key)

    def assign_supervisor(self, cell: HexCell, cnl_id: int) -> None:
        pool = self.pools[cell]
        old = self.cnls.get(pool.supervisor)
        if old is not None:
            old.supervised_pools.discard(cell)
        pool.supervisor = cnl_id
        self.cnls[cnl_id].supervised_pools.add(cell)

    # ---- client bootstrap ----------------------------------------------

    def client_bootstrap(self, coord: GeoCoordinate, exclude: Iterable[int] = (),
                         cnl_exclude: Iterable[int] = ()) -> int:
        """Nearest edge node under the nearest CNL, or that CNL itself.

        Falls back to the cloud when no CNL is registered.
        """
        cnl = self.nearest_cnl(coord, cnl_exclude)
        if cnl is None:
            return self.cloud.id
        exclude = set(exclude)
        items = [
            (nid, self.node_pos[nid])
            for pool in self.pools_of(cnl)
            for nid in pool.members
            if nid not in exclude
        ]
        return geo.nearest(items, coord) if items else cnl

    def closest_edge_node(self, coord: GeoCoordinate, exclude: Iterable[int] = ()) -> int:
        """Closest member of the pool covering ``coord``, else bootstrap lookup."""
        exclude = set(exclude)
        pool = self.pools.get(self.leaf_cell(coord))
        if pool is not None:
            items = [(nid, self.node_pos[nid]) for nid in pool.members if nid not in exclude]
            if items:
                return geo.nearest(items, coord)
        return self.client_bootstrap(coord, exclude)

    # ---- invariants ----------------------------------------------------

    def check(self) -> None:
        seen = {}
        for cell, pool in self.pools.items():
            if self.max_members is not None and len(pool.members) > self.max_members:
                raise AssertionError(f"{cell} holds {len(pool.members)} > {self.max_members}")
            for nid in pool.members:
                if nid in seen:
                    raise AssertionError(f"node {nid} in {seen[nid]} and {cell}")
                seen[nid] = cell
        if set(seen) != set(self.node_pool):
            raise AssertionError("pool membership and node registry disagree")
        owners = {}
        for cid, cnl in self.cnls.items():
            for cell in cnl.supervised_pools:
                if cell in owners:
                    raise AssertionError(f"{cell} supervised twice")
                owners[cell] = cid
        for cell, pool in self.pools.items():
            if owners.get(cell) != pool.supervisor and pool.supervisor in self.cnls:
                raise AssertionError(f"{cell} supervisor mismatch")
