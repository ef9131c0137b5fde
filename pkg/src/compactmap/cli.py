"""Command-line driver: simulate datasets, run the mapper, compare runs.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .clustering import ClusterConfig
from .dataset_io import ParseError, read_metrics, write_events
from .graph import GraphError
from .integration import IntegrationConfig
from .optimizer import NumericalError, SolverConfig
from .pipeline import MODES, PipelineConfig, compare, run
from .simulator import ROUTE_PRESETS, SimConfig, generate
from .sparsifier import NeighborhoodConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; this tool reserves 2 for data errors.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", default="square", choices=sorted(ROUTE_PRESETS),
                   help="route preset (default: square)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--laps", type=int, default=1)
    p.add_argument("--speed", type=float, default=0.5, help="m/s (default 0.5)")
    p.add_argument("--dt", type=float, default=0.1, help="step period in s (default 0.1)")
    p.add_argument("--sigma-d", type=float, default=0.0, help="odometry distance noise per step")
    p.add_argument("--sigma-theta", type=float, default=0.0, help="odometry facing noise per step")
    p.add_argument("--loop-radius", type=float, default=0.03,
                   help="loop detection radius in m (default 0.03)")
    p.add_argument("--loop-heading-tol", type=float, default=0.3,
                   help="loop detection heading tolerance in rad (default 0.3)")


def _sim_config(args: argparse.Namespace) -> SimConfig:
    return SimConfig(
        seed=args.seed,
        route=args.preset,
        speed=args.speed,
        step_dt=args.dt,
        sigma_d=args.sigma_d,
        sigma_theta=args.sigma_theta,
        loop_detect_radius=args.loop_radius,
        loop_heading_tolerance=args.loop_heading_tol,
        laps=args.laps,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="compactmap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate an event-stream file")
    _add_sim_args(p_sim)
    p_sim.add_argument("--out", required=True, help="output event file")

    p_run = sub.add_parser("run", help="map a dataset and write map, metrics, figures")
    p_run.add_argument("--mode", default="compact-full", choices=MODES)
    p_run.add_argument("--in", dest="input_path", help="event-stream file; omit to simulate")
    _add_sim_args(p_run)
    p_run.add_argument("--alpha", type=float, default=10.0, help="novelty weight on translation")
    p_run.add_argument("--beta", type=float, default=10.0, help="novelty weight on rotation")
    p_run.add_argument("--delta", type=float, default=3.746, help="novelty threshold")
    p_run.add_argument("--t-interval", type=float, default=2.0,
                       help="max gap between loop edges in a cluster (s)")
    p_run.add_argument("--t-total", type=float, default=100.0,
                       help="max span of a cluster (s)")
    p_run.add_argument("--merge-radius", type=float, default=0.05,
                       help="distance below which loop-closed vertices merge (m)")
    p_run.add_argument("--short-edge", type=float, default=0.02,
                       help="sequential edges at most this long are collapsed (m)")
    p_run.add_argument("--huber-delta", type=float, default=1.0)
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    p_cmp = sub.add_parser("compare", help="align two metrics files and report ratios")
    p_cmp.add_argument("metrics_a")
    p_cmp.add_argument("metrics_b")
    p_cmp.add_argument("--out", help="directory for compare.csv and compare.png")
    p_cmp.add_argument("--no-figures", action="store_true")

    return parser


def _cmd_simulate(args: argparse.Namespace) -> int:
    events, _ = generate(_sim_config(args))
    write_events(events, args.out)
    print(f"wrote {len(events)} events to {args.out}")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = PipelineConfig(
        mode=args.mode,
        neighborhood=NeighborhoodConfig(args.alpha, args.beta, args.delta),
        clusters=ClusterConfig(args.t_interval, args.t_total),
        integration=IntegrationConfig(args.merge_radius, args.short_edge),
        solver=SolverConfig(huber_delta=args.huber_delta),
        sim=None if args.input_path else _sim_config(args),
        input_path=args.input_path,
        out_dir=args.out,
        figures=not args.no_figures,
    )
    report = run(cfg)
    for key in sorted(report.totals):
        print(f"{key}: {report.totals[key]}")
    print(f"map: {report.map_path}")
    print(f"metrics: {report.metrics_path}")
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace) -> int:
    result = compare(args.metrics_a, args.metrics_b)
    print(f"aligned stamps: {len(result.stamps)}")
    print(f"final vertex ratio: {result.vertex_ratio[-1]:.4g}")
    print(f"final edge ratio:   {result.edge_ratio[-1]:.4g}")
    print(f"final vertex delta: {result.final_vertex_delta}")
    print(f"final edge delta:   {result.final_edge_delta}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        lines = ["stamp,vertex_ratio,edge_ratio"]
        for s, vr, er in zip(result.stamps, result.vertex_ratio, result.edge_ratio):
            lines.append(f"{s:.17g},{vr:.17g},{er:.17g}")
        (out / "compare.csv").write_text("".join(f"{ln}\n" for ln in lines))
        if not args.no_figures:
            from . import plots

            runs = [
                ("a", read_metrics(args.metrics_a)),
                ("b", read_metrics(args.metrics_b)),
            ]
            plots.plot_growth_comparison(runs, out / "compare.png")
        print(f"compare table: {out / 'compare.csv'}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_compare(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParseError, GraphError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
