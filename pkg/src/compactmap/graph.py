"""Pose-graph container: vertices, constraint edges, and an adjacency index.

The map is a single-writer structure: all mutation happens on one logical
thread. `copy()` produces an independent snapshot that is safe to share
read-only, since vertices and edges are immutable records.

Vertex and edge ids are assigned monotonically and never reused, so a
deleted id stays a valid historical reference in logs and reports.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterator

from .geometry import Pose2, RelativeConstraint


class GraphError(ValueError):
    """Violation of a structural rule of the pose graph."""


class EdgeKind(Enum):
    SEQUENTIAL = "SEQ"
    LOOP_CLOSURE = "LOOP"


@dataclass(frozen=True)
class Vertex:
    id: int
    pose: Pose2
    stamp: float


@dataclass(frozen=True)
class Edge:
    id: int
    from_id: int
    to_id: int
    constraint: RelativeConstraint
    kind: EdgeKind
    stamp: float


class CognitiveMap:
    """The vertex/edge graph built during mapping.

    Sequential edges come from odometry, loop-closure edges from place
    recognition. An adjacency index (vertex id -> incident edge ids) is
    maintained alongside the edge collection.
    """

    def __init__(self) -> None:
        self._vertices: dict[int, Vertex] = {}
        self._edges: dict[int, Edge] = {}
        self._adjacency: dict[int, set[int]] = {}
        self._sequential_pairs: dict[tuple[int, int], int] = {}
        self._next_vertex_id = 0
        self._next_edge_id = 0
        self._last_auto_stamp = -float("inf")

    # ------------------------------------------------------------------
    # Queries
    # ------------------------------------------------------------------

    @property
    def vertex_count(self) -> int:
        return len(self._vertices)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def has_vertex(self, vertex_id: int) -> bool:
        return vertex_id in self._vertices

    def has_edge(self, edge_id: int) -> bool:
        return edge_id in self._edges

    def vertex(self, vertex_id: int) -> Vertex:
        try:
            return self._vertices[vertex_id]
        except KeyError:
            raise GraphError(f"unknown vertex id {vertex_id}") from None

    def edge(self, edge_id: int) -> Edge:
        try:
            return self._edges[edge_id]
        except KeyError:
            raise GraphError(f"unknown edge id {edge_id}") from None

    def vertices(self) -> Iterator[Vertex]:
        """Vertices in ascending id order."""
        for vid in sorted(self._vertices):
            yield self._vertices[vid]

    def edges(self) -> Iterator[Edge]:
        """Edges in ascending id order."""
        for eid in sorted(self._edges):
            yield self._edges[eid]

    def vertex_ids(self) -> list[int]:
        return sorted(self._vertices)

    def incident_edges(self, vertex_id: int) -> list[int]:
        """Ids of edges touching a vertex, ascending."""
        self.vertex(vertex_id)
        return sorted(self._adjacency[vertex_id])

    def neighbors(self, vertex_id: int) -> set[int]:
        out: set[int] = set()
        for eid in self._adjacency.get(vertex_id, ()):
            e = self._edges[eid]
            out.add(e.to_id if e.from_id == vertex_id else e.from_id)
        return out

    def sequential_degree(self, vertex_id: int) -> int:
        """Number of incident sequential edges."""
        return sum(
            1
            for eid in self._adjacency.get(vertex_id, ())
            if self._edges[eid].kind is EdgeKind.SEQUENTIAL
        )

    def find_edge(self, from_id: int, to_id: int, kind: EdgeKind) -> int | None:
        """Lowest id of an edge matching (from, to, kind) exactly, if any."""
        if kind is EdgeKind.SEQUENTIAL:
            return self._sequential_pairs.get((from_id, to_id))
        best: int | None = None
        for eid in self._adjacency.get(from_id, ()):
            e = self._edges[eid]
            if e.from_id == from_id and e.to_id == to_id and e.kind is kind:
                if best is None or eid < best:
                    best = eid
        return best

    def edge_ids_between(self, a: int, b: int) -> list[int]:
        """All edges joining a and b, in either orientation, ascending id."""
        ids = self._adjacency.get(a, set()) & self._adjacency.get(b, set())
        return sorted(ids)

    # ------------------------------------------------------------------
    # Mutation
    # ------------------------------------------------------------------

    def add_vertex(self, pose: Pose2, stamp: float, vertex_id: int | None = None) -> Vertex:
        """Add a vertex; ids auto-increment unless an unused id is given.

        Auto-assigned vertices must arrive in non-decreasing stamp order.
        Explicit ids bypass the stamp check (used by file loading and by
        rollback, which restores historical records).
        """
        if vertex_id is None:
            if stamp < self._last_auto_stamp:
                raise GraphError(
                    f"vertex stamp {stamp} regresses below {self._last_auto_stamp}"
                )
            vertex_id = self._next_vertex_id
            self._last_auto_stamp = stamp
        elif vertex_id in self._vertices:
            raise GraphError(f"duplicate vertex id {vertex_id}")
        v = Vertex(vertex_id, pose, stamp)
        self._vertices[vertex_id] = v
        self._adjacency[vertex_id] = set()
        self._next_vertex_id = max(self._next_vertex_id, vertex_id + 1)
        return v

    def add_edge(
        self,
        from_id: int,
        to_id: int,
        constraint: RelativeConstraint,
        kind: EdgeKind,
        stamp: float,
        edge_id: int | None = None,
    ) -> Edge:
        if from_id == to_id:
            raise GraphError(f"self-loop edge on vertex {from_id} is not allowed")
        self.vertex(from_id)
        self.vertex(to_id)
        if kind is EdgeKind.SEQUENTIAL and (from_id, to_id) in self._sequential_pairs:
            raise GraphError(f"duplicate sequential edge {from_id} -> {to_id}")
        if edge_id is None:
            edge_id = self._next_edge_id
        elif edge_id in self._edges:
            raise GraphError(f"duplicate edge id {edge_id}")
        e = Edge(edge_id, from_id, to_id, constraint, kind, stamp)
        self._edges[edge_id] = e
        self._adjacency[from_id].add(edge_id)
        self._adjacency[to_id].add(edge_id)
        if kind is EdgeKind.SEQUENTIAL:
            self._sequential_pairs[(from_id, to_id)] = min(
                edge_id, self._sequential_pairs.get((from_id, to_id), edge_id)
            )
        self._next_edge_id = max(self._next_edge_id, edge_id + 1)
        return e

    def remove_edge(self, edge_id: int) -> Edge:
        e = self.edge(edge_id)
        del self._edges[edge_id]
        self._adjacency[e.from_id].discard(edge_id)
        self._adjacency[e.to_id].discard(edge_id)
        if e.kind is EdgeKind.SEQUENTIAL:
            key = (e.from_id, e.to_id)
            if self._sequential_pairs.get(key) == edge_id:
                del self._sequential_pairs[key]
        return e

    def remove_vertex(self, vertex_id: int) -> Vertex:
        """Remove an isolated vertex; callers must remove incident edges first."""
        v = self.vertex(vertex_id)
        if self._adjacency[vertex_id]:
            raise GraphError(
                f"vertex {vertex_id} still has incident edges {sorted(self._adjacency[vertex_id])}"
            )
        del self._vertices[vertex_id]
        del self._adjacency[vertex_id]
        return v

    def set_pose(self, vertex_id: int, pose: Pose2) -> None:
        self._vertices[vertex_id] = replace(self.vertex(vertex_id), pose=pose)

    # ------------------------------------------------------------------
    # Integrity
    # ------------------------------------------------------------------

    def is_connected(self) -> bool:
        """True when the graph is weakly connected (or empty)."""
        if not self._vertices:
            return True
        start = next(iter(self._vertices))
        seen = {start}
        queue = deque([start])
        while queue:
            vid = queue.popleft()
            for nb in self.neighbors(vid):
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        return len(seen) == len(self._vertices)

    def verify(self) -> None:
        """Rebuild the adjacency index from the edge collection and compare.

        Raises GraphError on any mismatch or dangling reference.
        """
        rebuilt: dict[int, set[int]] = {vid: set() for vid in self._vertices}
        for eid, e in self._edges.items():
            if e.from_id not in self._vertices or e.to_id not in self._vertices:
                raise GraphError(f"edge {eid} references a missing vertex")
            rebuilt[e.from_id].add(eid)
            rebuilt[e.to_id].add(eid)
        if rebuilt != self._adjacency:
            raise GraphError("adjacency index does not mirror the edge collection")

    def copy(self) -> "CognitiveMap":
        """Independent snapshot; the records themselves are immutable."""
        out = CognitiveMap()
        out._vertices = dict(self._vertices)
        out._edges = dict(self._edges)
        out._adjacency = {vid: set(eids) for vid, eids in self._adjacency.items()}
        out._sequential_pairs = dict(self._sequential_pairs)
        out._next_vertex_id = self._next_vertex_id
        out._next_edge_id = self._next_edge_id
        out._last_auto_stamp = self._last_auto_stamp
        return out
