"""Odometry gating through a motion-novelty field.

Incoming odometry steps are folded into a pending constraint anchored at
the last kept vertex. A vertex is created only when the accumulated
novelty g(d, theta) = (1 + alpha*d) * (1 + beta*theta) exceeds the
threshold, where d is the accumulated path length and theta the
accumulated absolute rotation since the anchor. Long straight travel and
turning both force a vertex eventually; turns do so sooner.

Skipped steps lose nothing: the pending constraint is the exact
composition of everything since the anchor, so the dead-reckoned
endpoint of the sparse chain equals the endpoint of the raw stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import IDENTITY, RelativeConstraint, compose, predict
from .graph import CognitiveMap, EdgeKind


@dataclass
class NeighborhoodConfig:
    """Novelty-gate parameters.

    alpha weighs translation (1/m), beta rotation (1/rad). Values of
    delta_threshold below 1 disable gating entirely, since g(0, 0) = 1
    and the gate is strict: every step then keeps a vertex.
    """

    alpha: float = 10.0
    beta: float = 10.0
    delta_threshold: float = 3.746

    def __post_init__(self) -> None:
        if self.alpha < 0.0 or self.beta < 0.0:
            raise ValueError("alpha and beta must be non-negative")
        if self.delta_threshold < 0.0:
            raise ValueError("delta_threshold must be non-negative")


@dataclass
class NeighborhoodAccumulator:
    """Motion folded since the last kept vertex (the anchor)."""

    anchor_vertex: int
    pending: RelativeConstraint = IDENTITY
    d_acc: float = 0.0
    theta_acc: float = 0.0
    t_last: float = field(default=-float("inf"))


def neighborhood_field(d: float, theta: float, cfg: NeighborhoodConfig) -> float:
    """Novelty of accumulated motion: (1 + alpha*d) * (1 + beta*theta)."""
    if d < 0.0 or theta < 0.0:
        raise ValueError("accumulated distance and rotation must be non-negative")
    return (1.0 + cfg.alpha * d) * (1.0 + cfg.beta * theta)


def ingest_odometry(
    graph: CognitiveMap,
    acc: NeighborhoodAccumulator,
    step: RelativeConstraint,
    stamp: float,
    cfg: NeighborhoodConfig,
) -> int | None:
    """Fold one odometry step into the accumulator; keep a vertex if novel.

    Returns the new vertex id when the gate fires, else None. A kept
    vertex gets one sequential edge from the anchor carrying the whole
    pending constraint, and the accumulator re-anchors there.
    """
    if stamp < acc.t_last:
        raise ValueError(f"odometry stamp {stamp} regresses below {acc.t_last}")
    acc.pending = compose(acc.pending, step)
    acc.d_acc += step.d
    acc.theta_acc += abs(step.facing)
    acc.t_last = stamp
    if neighborhood_field(acc.d_acc, acc.theta_acc, cfg) > cfg.delta_threshold:
        return _emit(graph, acc, stamp)
    return None


def flush_pending(graph: CognitiveMap, acc: NeighborhoodAccumulator, stamp: float) -> int:
    """Force pending motion into a vertex regardless of the gate.

    Used when a loop closure needs a concrete endpoint at the robot's
    current position. Returns the vertex the robot is at: a new one if
    motion was pending, otherwise the anchor itself.
    """
    if acc.d_acc == 0.0 and acc.theta_acc == 0.0 and acc.pending == IDENTITY:
        return acc.anchor_vertex
    return _emit(graph, acc, max(stamp, acc.t_last))


def _emit(graph: CognitiveMap, acc: NeighborhoodAccumulator, stamp: float) -> int:
    anchor_pose = graph.vertex(acc.anchor_vertex).pose
    v = graph.add_vertex(predict(anchor_pose, acc.pending), stamp)
    graph.add_edge(acc.anchor_vertex, v.id, acc.pending, EdgeKind.SEQUENTIAL, stamp)
    acc.anchor_vertex = v.id
    acc.pending = IDENTITY
    acc.d_acc = 0.0
    acc.theta_acc = 0.0
    acc.t_last = stamp
    return v.id


def merged_chain_constraint(steps: list[RelativeConstraint]) -> RelativeConstraint:
    """Left fold of compose over a step sequence; the single-edge equivalent."""
    if not steps:
        raise ValueError("cannot merge an empty step sequence")
    out = steps[0]
    for c in steps[1:]:
        out = compose(out, c)
    return out
