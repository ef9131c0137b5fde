"""Figure rendering: map snapshots and growth curves, saved to files."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .dataset_io import MetricsRecord
from .graph import CognitiveMap, EdgeKind


def plot_map(graph: CognitiveMap, path: Union[str, Path], title: str | None = None) -> None:
    """Draw vertices as dots and edges as segments (loop closures in red)."""
    fig, ax = plt.subplots(figsize=(6, 6))
    for e in graph.edges():
        a = graph.vertex(e.from_id).pose
        b = graph.vertex(e.to_id).pose
        if e.kind is EdgeKind.SEQUENTIAL:
            ax.plot([a.x, b.x], [a.y, b.y], color="steelblue", lw=0.8, zorder=1)
        else:
            ax.plot([a.x, b.x], [a.y, b.y], color="crimson", lw=0.6, alpha=0.6, zorder=2)
    xs = [v.pose.x for v in graph.vertices()]
    ys = [v.pose.y for v in graph.vertices()]
    ax.scatter(xs, ys, s=6, color="forestgreen", zorder=3)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(title or f"{graph.vertex_count} vertices, {graph.edge_count} edges")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_growth(records: Sequence[MetricsRecord], path: Union[str, Path]) -> None:
    """Vertex and edge counts over time for one run."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    stamps = [r.stamp for r in records]
    ax.plot(stamps, [r.vertex_count for r in records], color="forestgreen", label="vertices")
    ax.plot(stamps, [r.edge_count for r in records], color="steelblue", label="edges")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("count")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_growth_comparison(
    runs: Sequence[tuple[str, Sequence[MetricsRecord]]], path: Union[str, Path]
) -> None:
    """Overlay vertex-count curves of several runs."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for label, records in runs:
        ax.plot([r.stamp for r in records], [r.vertex_count for r in records], label=label)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("vertices")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
