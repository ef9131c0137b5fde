"""On-disk text formats: event streams, pose-graph snapshots, metrics.

Event stream (whitespace-delimited, `#` starts a comment, blank lines
ignored, stamps non-decreasing):

    ODOM <stamp> <d> <heading> <facing>
    LOOP <stamp> <target_hint> <d> <heading> <facing>

`target_hint` is the odometry step index the loop closure matched
(0 names the initial pose).

Pose graph (vertices must appear before edges that reference them):

    VERTEX2 <id> <x> <y> <theta>
    EDGE2 <from> <to> <d> <heading> <facing> <kind>     # kind: SEQ | LOOP

Metrics: CSV with header `stamp,vertex_count,edge_count,optimize_calls,final_cost`.

Floats are written with 17 significant digits so every round-trip is
exact. Files are UTF-8 with LF line endings. Parsers never raise
anything but ParseError on malformed input, whatever the bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

from .geometry import Pose2, RelativeConstraint
from .graph import CognitiveMap, EdgeKind, GraphError
from .simulator import LoopEvent, OdomEvent, SimEvent

METRICS_HEADER = "stamp,vertex_count,edge_count,optimize_calls,final_cost"

_KIND_TOKENS = {kind.value: kind for kind in EdgeKind}


class ParseError(ValueError):
    """Malformed input, with the offending line when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.message = message
        self.line = line
        self.path = path
        where = f"{path or '<input>'}:{line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


@dataclass
class MetricsRecord:
    """One growth-curve sample, taken at an ingestion event."""

    stamp: float
    vertex_count: int
    edge_count: int
    optimize_calls: int
    final_cost: float


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _read_text(path: Union[str, Path]) -> str:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}", path=str(path)) from exc
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8: {exc}", path=str(path)) from exc


def _lines(text: str) -> Iterable[tuple[int, list[str]]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        yield lineno, line.split()


def _parse_float(token: str, what: str, lineno: int, path: str | None) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"bad {what} {token!r}", lineno, path) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} must be finite, got {token!r}", lineno, path)
    return value


def _parse_int(token: str, what: str, lineno: int, path: str | None) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"bad {what} {token!r}", lineno, path) from None


# ----------------------------------------------------------------------
# Event streams
# ----------------------------------------------------------------------


def parse_events_text(text: str, path: str | None = None) -> list[SimEvent]:
    events: list[SimEvent] = []
    last_stamp = -math.inf
    for lineno, tokens in _lines(text):
        tag = tokens[0]
        if tag == "ODOM":
            if len(tokens) != 5:
                raise ParseError(f"ODOM needs 4 fields, got {len(tokens) - 1}", lineno, path)
            stamp = _parse_float(tokens[1], "stamp", lineno, path)
            d = _parse_float(tokens[2], "distance", lineno, path)
            heading = _parse_float(tokens[3], "heading", lineno, path)
            facing = _parse_float(tokens[4], "facing", lineno, path)
            try:
                constraint = RelativeConstraint(d, heading, facing)
            except ValueError as exc:
                raise ParseError(str(exc), lineno, path) from None
            event: SimEvent = OdomEvent(stamp, constraint)
        elif tag == "LOOP":
            if len(tokens) != 6:
                raise ParseError(f"LOOP needs 5 fields, got {len(tokens) - 1}", lineno, path)
            stamp = _parse_float(tokens[1], "stamp", lineno, path)
            hint = _parse_int(tokens[2], "target hint", lineno, path)
            if hint < 0:
                raise ParseError(f"target hint must be non-negative, got {hint}", lineno, path)
            d = _parse_float(tokens[3], "distance", lineno, path)
            heading = _parse_float(tokens[4], "heading", lineno, path)
            facing = _parse_float(tokens[5], "facing", lineno, path)
            try:
                constraint = RelativeConstraint(d, heading, facing)
            except ValueError as exc:
                raise ParseError(str(exc), lineno, path) from None
            event = LoopEvent(stamp, hint, constraint)
        else:
            raise ParseError(f"unknown record {tag!r}", lineno, path)
        if event.stamp < last_stamp:
            raise ParseError(
                f"stamp {event.stamp} regresses below {last_stamp}", lineno, path
            )
        last_stamp = event.stamp
        events.append(event)
    return events


def parse_events(path: Union[str, Path]) -> list[SimEvent]:
    return parse_events_text(_read_text(path), path=str(path))


def format_events(events: Sequence[SimEvent]) -> str:
    out = []
    for ev in events:
        if isinstance(ev, OdomEvent):
            c = ev.step
            out.append(f"ODOM {_fmt(ev.stamp)} {_fmt(c.d)} {_fmt(c.heading)} {_fmt(c.facing)}")
        else:
            c = ev.constraint
            out.append(
                f"LOOP {_fmt(ev.stamp)} {ev.matched_index} "
                f"{_fmt(c.d)} {_fmt(c.heading)} {_fmt(c.facing)}"
            )
    return "".join(line + "\n" for line in out)


def write_events(events: Sequence[SimEvent], path: Union[str, Path]) -> None:
    Path(path).write_bytes(format_events(events).encode("utf-8"))


# ----------------------------------------------------------------------
# Pose graphs
# ----------------------------------------------------------------------


def parse_graph_text(text: str, path: str | None = None) -> CognitiveMap:
    graph = CognitiveMap()
    for lineno, tokens in _lines(text):
        tag = tokens[0]
        if tag == "VERTEX2":
            if len(tokens) != 5:
                raise ParseError(f"VERTEX2 needs 4 fields, got {len(tokens) - 1}", lineno, path)
            vid = _parse_int(tokens[1], "vertex id", lineno, path)
            x = _parse_float(tokens[2], "x", lineno, path)
            y = _parse_float(tokens[3], "y", lineno, path)
            theta = _parse_float(tokens[4], "theta", lineno, path)
            try:
                graph.add_vertex(Pose2(x, y, theta), stamp=0.0, vertex_id=vid)
            except (ValueError, GraphError) as exc:
                raise ParseError(str(exc), lineno, path) from None
        elif tag == "EDGE2":
            if len(tokens) != 7:
                raise ParseError(f"EDGE2 needs 6 fields, got {len(tokens) - 1}", lineno, path)
            from_id = _parse_int(tokens[1], "edge endpoint", lineno, path)
            to_id = _parse_int(tokens[2], "edge endpoint", lineno, path)
            d = _parse_float(tokens[3], "distance", lineno, path)
            heading = _parse_float(tokens[4], "heading", lineno, path)
            facing = _parse_float(tokens[5], "facing", lineno, path)
            kind = _KIND_TOKENS.get(tokens[6])
            if kind is None:
                raise ParseError(f"unknown edge kind {tokens[6]!r}", lineno, path)
            if not (graph.has_vertex(from_id) and graph.has_vertex(to_id)):
                raise ParseError(
                    f"edge references undefined vertex {from_id} or {to_id}", lineno, path
                )
            try:
                constraint = RelativeConstraint(d, heading, facing)
                graph.add_edge(from_id, to_id, constraint, kind, stamp=0.0)
            except (ValueError, GraphError) as exc:
                raise ParseError(str(exc), lineno, path) from None
        else:
            raise ParseError(f"unknown record {tag!r}", lineno, path)
    return graph


def read_graph(path: Union[str, Path]) -> CognitiveMap:
    return parse_graph_text(_read_text(path), path=str(path))


def format_graph(graph: CognitiveMap) -> str:
    out = []
    for v in graph.vertices():
        p = v.pose
        out.append(f"VERTEX2 {v.id} {_fmt(p.x)} {_fmt(p.y)} {_fmt(p.theta)}")
    for e in graph.edges():
        c = e.constraint
        out.append(
            f"EDGE2 {e.from_id} {e.to_id} {_fmt(c.d)} {_fmt(c.heading)} "
            f"{_fmt(c.facing)} {e.kind.value}"
        )
    return "".join(line + "\n" for line in out)


def write_graph(graph: CognitiveMap, path: Union[str, Path]) -> None:
    Path(path).write_bytes(format_graph(graph).encode("utf-8"))


# ----------------------------------------------------------------------
# Metrics
# ----------------------------------------------------------------------


def format_metrics(records: Sequence[MetricsRecord]) -> str:
    out = [METRICS_HEADER]
    for r in records:
        out.append(
            f"{_fmt(r.stamp)},{r.vertex_count},{r.edge_count},"
            f"{r.optimize_calls},{_fmt(r.final_cost)}"
        )
    return "".join(line + "\n" for line in out)


def write_metrics(records: Sequence[MetricsRecord], path: Union[str, Path]) -> None:
    Path(path).write_bytes(format_metrics(records).encode("utf-8"))


def parse_metrics_text(text: str, path: str | None = None) -> list[MetricsRecord]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != METRICS_HEADER:
        raise ParseError(f"expected header {METRICS_HEADER!r}", 1, path)
    records: list[MetricsRecord] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        parts = raw.split(",")
        if len(parts) != 5:
            raise ParseError(f"expected 5 columns, got {len(parts)}", lineno, path)
        stamp = _parse_float(parts[0], "stamp", lineno, path)
        counts = [_parse_int(p, "count", lineno, path) for p in parts[1:4]]
        if any(c < 0 for c in counts):
            raise ParseError("counts must be non-negative", lineno, path)
        cost = _parse_float(parts[4], "final cost", lineno, path)
        records.append(MetricsRecord(stamp, counts[0], counts[1], counts[2], cost))
    return records


def read_metrics(path: Union[str, Path]) -> list[MetricsRecord]:
    return parse_metrics_text(_read_text(path), path=str(path))
