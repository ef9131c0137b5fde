"""Post-optimization map compaction.

Two passes shrink the graph after each batch optimization without moving
any surviving pose:

* `integrate_cluster` walks a cluster's loop edges; whenever the two
  endpoints landed on (nearly) the same spot, the newer vertex is folded
  into the older one. Every other edge of the removed vertex is rerouted
  onto the survivor by constraint composition, so composed transforms
  along rerouted paths are preserved exactly.
* `remove_short_edges` collapses sequential edges shorter than a
  threshold (motion-noise stubs), merging the redundant vertex's two
  sequential edges into one through-edge and rerouting any loop edges.

Removals that would disconnect the graph are rolled back and reported
instead of performed. Both passes run to a fixpoint of their own rule
and are idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .geometry import compose, invert, planar_distance
from .graph import CognitiveMap, Edge, EdgeKind


@dataclass
class IntegrationConfig:
    """merge_radius gates vertex folding; short_edge_threshold gates stub removal."""

    merge_radius: float = 0.05
    short_edge_threshold: float = 0.02

    def __post_init__(self) -> None:
        if self.merge_radius <= 0.0 or self.short_edge_threshold <= 0.0:
            raise ValueError("integration thresholds must be positive")
        if self.short_edge_threshold > self.merge_radius:
            raise ValueError("short_edge_threshold must not exceed merge_radius")


@dataclass
class IntegrationReport:
    """What a compaction pass did.

    `vertex_map` sends each removed vertex to its survivor; `edge_map`
    sends each removed edge to its replacement id, or to None when it was
    dropped outright (consumed merge edges, parallel duplicates,
    would-be self-loops).
    """

    removed_vertices: list[int] = field(default_factory=list)
    removed_edges: list[int] = field(default_factory=list)
    merged_edges: list[int] = field(default_factory=list)
    skipped_vertices: list[int] = field(default_factory=list)
    vertex_map: dict[int, int] = field(default_factory=dict)
    edge_map: dict[int, int | None] = field(default_factory=dict)

    def absorb(self, other: "IntegrationReport") -> None:
        self.removed_vertices += other.removed_vertices
        self.removed_edges += other.removed_edges
        self.merged_edges += other.merged_edges
        self.skipped_vertices += other.skipped_vertices
        self.vertex_map.update(other.vertex_map)
        self.edge_map.update(other.edge_map)


def resolve_vertex(vertex_map: dict[int, int], vertex_id: int) -> int:
    """Follow a merge chain to the surviving vertex."""
    seen = set()
    while vertex_id in vertex_map and vertex_id not in seen:
        seen.add(vertex_id)
        vertex_id = vertex_map[vertex_id]
    return vertex_id


def resolve_edge(edge_map: dict[int, int | None], edge_id: int | None) -> int | None:
    """Follow reroute replacements to the live edge id, or None if dropped."""
    seen = set()
    while edge_id is not None and edge_id in edge_map and edge_id not in seen:
        seen.add(edge_id)
        edge_id = edge_map[edge_id]
    return edge_id


# ----------------------------------------------------------------------
# Core merge: fold one vertex into another, rerouting every incident edge
# ----------------------------------------------------------------------


def _merge_vertex(
    graph: CognitiveMap,
    removed: int,
    kept: int,
    c_removed_to_kept,
    report: IntegrationReport,
) -> bool:
    """Fold `removed` into `kept`; returns False (and rolls back) on disconnect.

    Every edge between the pair is dropped. Every other incident edge is
    replaced by one between its far endpoint and `kept`, composing the
    constraint through c_removed_to_kept. Replacements that duplicate an
    existing (from, to, kind) edge collapse onto the first-created one.
    """
    removed_edges: list[Edge] = []
    added_edges: list[Edge] = []
    local_map: dict[int, int | None] = {}
    merged_ids: list[int] = []

    c_kept_to_removed = invert(c_removed_to_kept)
    for eid in graph.incident_edges(removed):
        e = graph.remove_edge(eid)
        removed_edges.append(e)
        if e.from_id == kept or e.to_id == kept:
            local_map[eid] = None
            continue
        if e.from_id == removed:
            new_from, new_to = kept, e.to_id
            new_c = compose(c_kept_to_removed, e.constraint)
        else:
            new_from, new_to = e.from_id, kept
            new_c = compose(e.constraint, c_removed_to_kept)
        existing = graph.find_edge(new_from, new_to, e.kind)
        if existing is not None:
            local_map[eid] = existing
            continue
        new_edge = graph.add_edge(new_from, new_to, new_c, e.kind, e.stamp)
        added_edges.append(new_edge)
        local_map[eid] = new_edge.id
        merged_ids.append(new_edge.id)

    removed_vertex = graph.remove_vertex(removed)

    if not graph.is_connected():
        graph.add_vertex(removed_vertex.pose, removed_vertex.stamp, vertex_id=removed)
        for e in added_edges:
            graph.remove_edge(e.id)
        for e in removed_edges:
            graph.add_edge(e.from_id, e.to_id, e.constraint, e.kind, e.stamp, edge_id=e.id)
        report.skipped_vertices.append(removed)
        return False

    report.removed_vertices.append(removed)
    report.removed_edges += [e.id for e in removed_edges]
    report.merged_edges += merged_ids
    report.vertex_map[removed] = kept
    report.edge_map.update(local_map)
    return True


# ----------------------------------------------------------------------
# Passes
# ----------------------------------------------------------------------


def integrate_cluster(
    graph: CognitiveMap, loop_edge_ids: Sequence[int], cfg: IntegrationConfig
) -> IntegrationReport:
    """Fold revisited vertices of an optimized cluster into their originals.

    Loop edges are processed in the given (stamp) order. A pair merges
    only when its endpoints converged to within merge_radius; the newer
    endpoint is removed and the older kept.
    """
    report = IntegrationReport()
    for eid in loop_edge_ids:
        live = resolve_edge(report.edge_map, eid)
        if live is None or not graph.has_edge(live):
            continue
        e = graph.edge(live)
        if e.kind is not EdgeKind.LOOP_CLOSURE:
            continue
        va = graph.vertex(e.from_id)
        vb = graph.vertex(e.to_id)
        if planar_distance(va.pose, vb.pose) > cfg.merge_radius:
            continue
        removed, kept = (va.id, vb.id) if va.id > vb.id else (vb.id, va.id)
        c_rk = e.constraint if e.from_id == removed else invert(e.constraint)
        _merge_vertex(graph, removed, kept, c_rk, report)
    return report


def remove_short_edges(graph: CognitiveMap, cfg: IntegrationConfig) -> IntegrationReport:
    """Collapse sequential edges not longer than the threshold.

    Candidates are processed in ascending length. The endpoint removed is
    the one with exactly two incident sequential edges (so its chain can
    be merged into a through-edge); when both qualify the newer goes,
    and when neither does the edge is left in place and reported. Merges
    can create new short edges; the pass repeats until none remain.
    """
    report = IntegrationReport()
    while True:
        candidates = sorted(
            (e.constraint.d, e.id)
            for e in graph.edges()
            if e.kind is EdgeKind.SEQUENTIAL and e.constraint.d <= cfg.short_edge_threshold
        )
        progressed = False
        for _, eid in candidates:
            if not graph.has_edge(eid):
                continue
            e = graph.edge(eid)
            newer, older = max(e.from_id, e.to_id), min(e.from_id, e.to_id)
            if graph.sequential_degree(newer) == 2:
                removed = newer
            elif graph.sequential_degree(older) == 2:
                removed = older
            else:
                if newer not in report.skipped_vertices:
                    report.skipped_vertices.append(newer)
                continue
            kept = older if removed == newer else newer
            c_rk = e.constraint if e.from_id == removed else invert(e.constraint)
            if _merge_vertex(graph, removed, kept, c_rk, report):
                progressed = True
        if not progressed:
            break
    return report
