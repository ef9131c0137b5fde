"""Time-based grouping of loop-closure edges.

Loop closures arriving close together in time describe one revisited
stretch of the environment, so they are batched into clusters and the
graph is optimized once per cluster instead of once per edge. A new edge
joins the open cluster while both hold: the gap to the previous loop
edge is at most t_interval, and the span since the cluster's first edge
is at most t_total. Either rule failing closes the cluster and opens a
new one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import CognitiveMap
from .optimizer import OptimizeReport, SolverConfig, optimize


@dataclass
class ClusterConfig:
    t_interval: float = 2.0
    t_total: float = 100.0

    def __post_init__(self) -> None:
        if self.t_interval <= 0.0 or self.t_total <= 0.0:
            raise ValueError("cluster time thresholds must be positive")
        if self.t_total < self.t_interval:
            raise ValueError("t_total must be at least t_interval")


@dataclass
class LoopCluster:
    """A batch of loop-closure edges ordered by stamp."""

    edge_ids: list[int] = field(default_factory=list)
    t_start: float = 0.0
    t_last: float = 0.0
    closed: bool = False

    def __len__(self) -> int:
        return len(self.edge_ids)


class LoopClusterManager:
    """Incremental assignment of loop edges to clusters."""

    def __init__(self, config: ClusterConfig | None = None) -> None:
        self.config = config or ClusterConfig()
        self._open: LoopCluster | None = None

    @property
    def open_cluster(self) -> LoopCluster | None:
        return self._open

    def assign(self, edge_id: int, stamp: float) -> LoopCluster | None:
        """Place one loop edge; returns the cluster this edge closed, if any.

        Stamps must be monotone. The first edge ever (or after a flush)
        opens a cluster and closes nothing.
        """
        cur = self._open
        if cur is None:
            self._open = LoopCluster([edge_id], stamp, stamp)
            return None
        if stamp < cur.t_last:
            raise ValueError(f"loop stamp {stamp} regresses below {cur.t_last}")
        cfg = self.config
        if stamp - cur.t_last <= cfg.t_interval and stamp - cur.t_start <= cfg.t_total:
            cur.edge_ids.append(edge_id)
            cur.t_last = stamp
            return None
        cur.closed = True
        self._open = LoopCluster([edge_id], stamp, stamp)
        return cur

    def flush(self) -> LoopCluster | None:
        """Close and return the open cluster, if any; idempotent."""
        cur = self._open
        if cur is None:
            return None
        cur.closed = True
        self._open = None
        return cur


def on_cluster_closed(
    graph: CognitiveMap, cluster: LoopCluster, solver_cfg: SolverConfig | None = None
) -> OptimizeReport:
    """Run the one batch optimization a closed cluster triggers."""
    if not cluster.closed:
        raise ValueError("cluster is still open")
    return optimize(graph, solver_cfg)
