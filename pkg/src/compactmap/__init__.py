"""Compact 2D pose-graph SLAM backend.

Keeps the map size tracking the size of the environment instead of the
length of the trajectory: odometry is sparsified through a motion-novelty
gate, loop closures are clustered by time and optimized in batches with a
robust sparse Levenberg-Marquardt solver, and revisited vertices are
merged away after each optimization.
"""

from .clustering import ClusterConfig, LoopCluster, LoopClusterManager, on_cluster_closed
from .dataset_io import (
    MetricsRecord,
    ParseError,
    parse_events,
    read_graph,
    read_metrics,
    write_events,
    write_graph,
    write_metrics,
)
from .geometry import (
    IDENTITY,
    Pose2,
    RelativeConstraint,
    compose,
    constraint_to_xy,
    invert,
    planar_distance,
    predict,
    transform_between,
    wrap_angle,
    xy_to_constraint,
)
from .graph import CognitiveMap, Edge, EdgeKind, GraphError, Vertex
from .integration import (
    IntegrationConfig,
    IntegrationReport,
    integrate_cluster,
    remove_short_edges,
)
from .optimizer import (
    NumericalError,
    OptimizeReport,
    SolverConfig,
    huber_weight,
    optimize,
    residual,
    residual_jacobians,
    robust_cost,
)
from .pipeline import (
    MODES,
    ComparisonReport,
    MappingSession,
    PipelineConfig,
    RunReport,
    compare,
    run,
)
from .simulator import ROUTE_PRESETS, LoopEvent, OdomEvent, SimConfig, SimEvent, generate
from .sparsifier import (
    NeighborhoodAccumulator,
    NeighborhoodConfig,
    flush_pending,
    ingest_odometry,
    merged_chain_constraint,
    neighborhood_field,
)

__version__ = "0.1.0"

__all__ = [
    "IDENTITY",
    "MODES",
    "ROUTE_PRESETS",
    "ClusterConfig",
    "CognitiveMap",
    "ComparisonReport",
    "Edge",
    "EdgeKind",
    "GraphError",
    "IntegrationConfig",
    "IntegrationReport",
    "LoopCluster",
    "LoopClusterManager",
    "LoopEvent",
    "MappingSession",
    "MetricsRecord",
    "NeighborhoodAccumulator",
    "NeighborhoodConfig",
    "NumericalError",
    "OdomEvent",
    "OptimizeReport",
    "ParseError",
    "PipelineConfig",
    "Pose2",
    "RelativeConstraint",
    "RunReport",
    "SimConfig",
    "SimEvent",
    "SolverConfig",
    "Vertex",
    "compare",
    "compose",
    "constraint_to_xy",
    "flush_pending",
    "generate",
    "huber_weight",
    "ingest_odometry",
    "integrate_cluster",
    "invert",
    "merged_chain_constraint",
    "neighborhood_field",
    "on_cluster_closed",
    "optimize",
    "parse_events",
    "planar_distance",
    "predict",
    "read_graph",
    "read_metrics",
    "remove_short_edges",
    "residual",
    "residual_jacobians",
    "robust_cost",
    "run",
    "transform_between",
    "wrap_angle",
    "write_events",
    "write_graph",
    "write_metrics",
    "xy_to_constraint",
]
