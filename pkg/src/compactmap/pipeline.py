"""End-to-end mapping driver.

Events stream through the sparsifier into the graph; loop closures are
attached, clustered by time, and each closed cluster triggers one batch
optimization followed by scene integration and short-edge pruning. One
metrics record is sampled after every ingested event, so growth curves
are deterministic functions of the input stream.

Three modes reproduce the experimental conditions:

* ``standard``             -- keep every step, never integrate.
* ``compact-integration-only`` -- keep every step, integrate revisits.
* ``compact-full``         -- novelty-gated steps plus integration.

Loop events name a past odometry step. Steps that kept no vertex have
no stored place to match against, so loop events pointing at them are
dropped (counted in the totals); events matching a since-merged vertex
are redirected to its survivor.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

from .clustering import ClusterConfig, LoopCluster, LoopClusterManager, on_cluster_closed
from .dataset_io import (
    MetricsRecord,
    parse_events,
    write_events,
    write_graph,
    write_metrics,
)
from .geometry import Pose2
from .graph import CognitiveMap, EdgeKind
from .integration import (
    IntegrationConfig,
    IntegrationReport,
    integrate_cluster,
    remove_short_edges,
    resolve_edge,
    resolve_vertex,
)
from .optimizer import SolverConfig
from .simulator import LoopEvent, OdomEvent, SimConfig, SimEvent, generate
from .sparsifier import (
    NeighborhoodAccumulator,
    NeighborhoodConfig,
    flush_pending,
    ingest_odometry,
)

MODES = ("standard", "compact-integration-only", "compact-full")


@dataclass
class PipelineConfig:
    mode: str = "compact-full"
    neighborhood: NeighborhoodConfig = field(default_factory=NeighborhoodConfig)
    clusters: ClusterConfig = field(default_factory=ClusterConfig)
    integration: IntegrationConfig = field(default_factory=IntegrationConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sim: SimConfig | None = None
    input_path: str | None = None
    out_dir: str | None = None
    figures: bool = True

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def gate_enabled(self) -> bool:
        return self.mode == "compact-full"

    @property
    def integration_enabled(self) -> bool:
        return self.mode in ("compact-integration-only", "compact-full")


@dataclass
class RunReport:
    map_path: str
    metrics_path: str
    totals: dict


class MappingSession:
    """Stateful event processor; one instance per run.

    `on_batch` (if given) is called after each cluster's optimization and
    integration with (cluster, optimize_report).
    """

    def __init__(
        self,
        config: PipelineConfig,
        on_batch: Callable[[LoopCluster, object], None] | None = None,
    ):
        self.config = config
        neigh = config.neighborhood
        if not config.gate_enabled:
            # Gate off: g(0, 0) = 1 > 0, so every step keeps a vertex.
            neigh = dataclasses.replace(neigh, delta_threshold=0.0)
        self.neighborhood = neigh
        self.on_batch = on_batch

        self.graph = CognitiveMap()
        origin = self.graph.add_vertex(Pose2(0.0, 0.0, 0.0), stamp=0.0)
        self.accumulator = NeighborhoodAccumulator(anchor_vertex=origin.id, t_last=0.0)
        self.clusters = LoopClusterManager(config.clusters)
        self.vertex_at_step: list[int | None] = [origin.id]
        self.vertex_map: dict[int, int] = {}
        self.edge_map: dict[int, int | None] = {}
        self.metrics: list[MetricsRecord] = []
        self.optimize_calls = 0
        self.last_cost = 0.0
        self.totals = {
            "events": 0,
            "odom_events": 0,
            "loop_events": 0,
            "loops_attached": 0,
            "loops_dropped": 0,
            "optimizations": 0,
            "vertices_removed": 0,
            "edges_removed": 0,
            "removals_skipped": 0,
        }

    # ------------------------------------------------------------------

    def process(self, event: SimEvent) -> MetricsRecord:
        self.totals["events"] += 1
        if isinstance(event, OdomEvent):
            self._ingest_odometry(event)
        elif isinstance(event, LoopEvent):
            self._ingest_loop(event)
        else:
            raise TypeError(f"unknown event type {type(event).__name__}")
        return self._sample(event.stamp)

    def finish(self) -> MetricsRecord | None:
        """Close the open cluster, run its batch, and sample a final record."""
        cluster = self.clusters.flush()
        if cluster is None:
            return None
        self._run_batch(cluster)
        return self._sample(cluster.t_last)

    # ------------------------------------------------------------------

    def _ingest_odometry(self, event: OdomEvent) -> None:
        self.totals["odom_events"] += 1
        kept = ingest_odometry(
            self.graph, self.accumulator, event.step, event.stamp, self.neighborhood
        )
        self.vertex_at_step.append(kept)

    def _ingest_loop(self, event: LoopEvent) -> None:
        self.totals["loop_events"] += 1
        if event.matched_index >= len(self.vertex_at_step):
            raise ValueError(
                f"loop target hint {event.matched_index} is ahead of the stream "
                f"(only {len(self.vertex_at_step) - 1} odometry steps seen)"
            )
        target = self.vertex_at_step[event.matched_index]
        if target is None:
            self.totals["loops_dropped"] += 1
            return
        current = self.vertex_at_step[-1]
        if current is None:
            current = flush_pending(self.graph, self.accumulator, event.stamp)
            self.vertex_at_step[-1] = current
        current = resolve_vertex(self.vertex_map, current)
        target = resolve_vertex(self.vertex_map, target)
        if current == target:
            self.totals["loops_dropped"] += 1
            return
        edge = self.graph.add_edge(
            current, target, event.constraint, EdgeKind.LOOP_CLOSURE, event.stamp
        )
        self.totals["loops_attached"] += 1
        closed = self.clusters.assign(edge.id, event.stamp)
        if closed is not None:
            self._run_batch(closed)

    def _run_batch(self, cluster: LoopCluster) -> None:
        report = on_cluster_closed(self.graph, cluster, self.config.solver)
        self.optimize_calls += 1
        self.totals["optimizations"] += 1
        self.last_cost = report.final_cost

        if self.config.integration_enabled:
            live_ids = []
            for eid in cluster.edge_ids:
                resolved = resolve_edge(self.edge_map, eid)
                if resolved is not None:
                    live_ids.append(resolved)
            merged = integrate_cluster(self.graph, live_ids, self.config.integration)
            merged.absorb(remove_short_edges(self.graph, self.config.integration))
            self._absorb_integration(merged)

        if self.on_batch is not None:
            self.on_batch(cluster, report)

    def _absorb_integration(self, report: IntegrationReport) -> None:
        self.vertex_map.update(report.vertex_map)
        self.edge_map.update(report.edge_map)
        self.totals["vertices_removed"] += len(report.removed_vertices)
        self.totals["edges_removed"] += len(report.removed_edges)
        self.totals["removals_skipped"] += len(report.skipped_vertices)
        anchor = resolve_vertex(self.vertex_map, self.accumulator.anchor_vertex)
        if anchor != self.accumulator.anchor_vertex:
            self.accumulator.anchor_vertex = anchor

    def _sample(self, stamp: float) -> MetricsRecord:
        record = MetricsRecord(
            stamp=stamp,
            vertex_count=self.graph.vertex_count,
            edge_count=self.graph.edge_count,
            optimize_calls=self.optimize_calls,
            final_cost=self.last_cost,
        )
        self.metrics.append(record)
        return record


# ----------------------------------------------------------------------
# File-level drivers
# ----------------------------------------------------------------------


def run(cfg: PipelineConfig) -> RunReport:
    """Simulate or load a dataset, map it, and write all outputs.

    Writes the final graph, the metrics CSV, a JSON totals report, and
    (unless disabled) map and growth figures into cfg.out_dir.
    """
    if cfg.out_dir is None:
        raise ValueError("out_dir is required")
    if (cfg.input_path is None) == (cfg.sim is None):
        raise ValueError("exactly one of input_path or sim must be given")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if cfg.input_path is not None:
        events = parse_events(cfg.input_path)
    else:
        events, _ = generate(cfg.sim)
        write_events(events, out / "events.txt")

    session = MappingSession(cfg)
    for event in events:
        session.process(event)
    session.finish()

    map_path = out / "map.txt"
    metrics_path = out / "metrics.csv"
    write_graph(session.graph, map_path)
    write_metrics(session.metrics, metrics_path)

    totals = dict(session.totals)
    totals["vertices_final"] = session.graph.vertex_count
    totals["edges_final"] = session.graph.edge_count
    totals["final_cost"] = session.last_cost
    totals["mode"] = cfg.mode
    (out / "report.json").write_text(json.dumps(totals, indent=2, sort_keys=True) + "\n")

    if cfg.figures:
        from . import plots

        plots.plot_map(session.graph, out / "map.png")
        plots.plot_growth(session.metrics, out / "growth.png")

    return RunReport(str(map_path), str(metrics_path), totals)


@dataclass
class ComparisonReport:
    """Per-stamp count ratios between two runs, aligned on common stamps."""

    stamps: list[float]
    vertex_ratio: list[float]
    edge_ratio: list[float]
    final_vertex_delta: int
    final_edge_delta: int


def compare(
    metrics_a: Union[str, Path, Sequence[MetricsRecord]],
    metrics_b: Union[str, Path, Sequence[MetricsRecord]],
) -> ComparisonReport:
    """Align two metrics series by stamp and compute count ratios (a / b).

    Duplicate stamps keep their last record. Raises ValueError when the
    stamp domains do not intersect.
    """
    from .dataset_io import read_metrics

    rec_a = read_metrics(metrics_a) if isinstance(metrics_a, (str, Path)) else list(metrics_a)
    rec_b = read_metrics(metrics_b) if isinstance(metrics_b, (str, Path)) else list(metrics_b)
    by_a = {r.stamp: r for r in rec_a}
    by_b = {r.stamp: r for r in rec_b}
    common = sorted(set(by_a) & set(by_b))
    if not common:
        raise ValueError("metrics stamp domains do not intersect; nothing to align")
    def ratio(a: int, b: int) -> float:
        if b == 0:
            return 1.0 if a == 0 else float("inf")
        return a / b

    v_ratio = [ratio(by_a[s].vertex_count, by_b[s].vertex_count) for s in common]
    e_ratio = [ratio(by_a[s].edge_count, by_b[s].edge_count) for s in common]
    return ComparisonReport(
        stamps=common,
        vertex_ratio=v_ratio,
        edge_ratio=e_ratio,
        final_vertex_delta=rec_a[-1].vertex_count - rec_b[-1].vertex_count,
        final_edge_delta=rec_a[-1].edge_count - rec_b[-1].edge_count,
    )
