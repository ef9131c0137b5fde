import math

import numpy as np
import pytest

from compactmap.geometry import Pose2, RelativeConstraint, predict, transform_between, wrap_angle
from compactmap.graph import CognitiveMap, EdgeKind
from compactmap.optimizer import (
    NumericalError,
    SolverConfig,
    huber_weight,
    optimize,
    residual,
    residual_jacobians,
    robust_cost,
)

C10 = RelativeConstraint(1.0, 0.0, 0.0)


# ----------------------------------------------------------------------
# Residual and loss
# ----------------------------------------------------------------------


def test_residual_perfect_measurement():
    r = residual(Pose2(0, 0, 0), Pose2(1, 0, 0), C10)
    assert r == (0.0, 0.0, 0.0)


def test_residual_unmoved_pose():
    r = residual(Pose2(0, 0, 0), Pose2(0, 0, 0), C10)
    assert r == (-1.0, 0.0, 0.0)


def test_residual_rotated_frame():
    r = residual(Pose2(0, 0, math.pi / 2), Pose2(0, 1, math.pi / 2), C10)
    assert r == pytest.approx((0.0, 0.0, 0.0), abs=1e-12)


def test_residual_of_predict_is_zero():
    p = Pose2(0.3, -0.8, 2.1)
    c = RelativeConstraint(1.7, 0.4, -0.9)
    r = residual(p, predict(p, c), c)
    assert r == pytest.approx((0.0, 0.0, 0.0), abs=1e-12)


def test_huber_weight_examples():
    assert huber_weight(0.0, 1.0) == 1.0
    assert huber_weight(1.0, 1.0) == 1.0  # continuous at the boundary
    assert huber_weight(4.0, 1.0) == pytest.approx(0.5)


def test_huber_weight_validation():
    with pytest.raises(ValueError):
        huber_weight(-1.0, 1.0)
    with pytest.raises(ValueError):
        huber_weight(1.0, 0.0)


# ----------------------------------------------------------------------
# Jacobians against central finite differences
# ----------------------------------------------------------------------


def fd_jacobians(e_i, e_j, c, step=1e-6):
    """Central-difference Jacobians of the residual, the independent oracle."""
    base_i = [e_i.x, e_i.y, e_i.theta]
    base_j = [e_j.x, e_j.y, e_j.theta]
    j_i = np.zeros((3, 3))
    j_j = np.zeros((3, 3))
    for k in range(3):
        for sign_target, j_out in ((0, j_i), (1, j_j)):
            plus_i, plus_j = list(base_i), list(base_j)
            minus_i, minus_j = list(base_i), list(base_j)
            if sign_target == 0:
                plus_i[k] += step
                minus_i[k] -= step
            else:
                plus_j[k] += step
                minus_j[k] -= step
            rp = np.array(residual(Pose2(*plus_i), Pose2(*plus_j), c))
            rm = np.array(residual(Pose2(*minus_i), Pose2(*minus_j), c))
            j_out[:, k] = (rp - rm) / (2 * step)
    return j_i, j_j


def random_block(rng):
    """Random residual block whose theta-residual stays clear of the wrap."""
    while True:
        e_i = Pose2(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-math.pi, math.pi))
        e_j = Pose2(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-math.pi, math.pi))
        c = RelativeConstraint(
            rng.uniform(0, 5), rng.uniform(-math.pi, math.pi), rng.uniform(-math.pi, math.pi)
        )
        r_theta = residual(e_i, e_j, c)[2]
        if abs(abs(r_theta) - math.pi) >= 0.1:
            return e_i, e_j, c


def test_jacobian_d_zero_third_column():
    j_i, _ = residual_jacobians(Pose2(1, 2, 0.5), Pose2(0, 0, 0), RelativeConstraint(0, 0.3, 0.1))
    assert list(j_i[:, 2]) == [0.0, 0.0, -1.0]


def test_jacobian_axis_aligned_values():
    j_i, j_j = residual_jacobians(Pose2(0, 0, 0), Pose2(1, 0, 0), C10)
    assert j_i[0][2] == pytest.approx(0.0)
    assert j_i[1][2] == pytest.approx(-1.0)
    assert np.allclose(j_j, np.eye(3))


def test_jacobians_match_finite_differences():
    rng = np.random.default_rng(7)
    for _ in range(200):
        e_i, e_j, c = random_block(rng)
        a_i, a_j = residual_jacobians(e_i, e_j, c)
        f_i, f_j = fd_jacobians(e_i, e_j, c)
        assert np.all(np.abs(a_i - f_i) <= 1e-5 * np.maximum(1.0, np.abs(f_i)))
        assert np.all(np.abs(a_j - f_j) <= 1e-5 * np.maximum(1.0, np.abs(f_j)))


# ----------------------------------------------------------------------
# Synthetic graphs
# ----------------------------------------------------------------------


def square_loop_truth(n=20, side=1.0):
    """Ground-truth poses around a square, heading along the travel direction."""
    per_side = n // 4
    step = side / per_side
    poses = []
    corners = [(0.0, 0.0, 0.0), (side, 0.0, math.pi / 2), (side, side, math.pi), (0.0, side, -math.pi / 2)]
    for cx, cy, heading in corners:
        for k in range(per_side):
            poses.append(
                Pose2(cx + k * step * math.cos(heading), cy + k * step * math.sin(heading), heading)
            )
    return poses


def build_loop_graph(truth, close_loop=True):
    g = CognitiveMap()
    for k, p in enumerate(truth):
        g.add_vertex(p, stamp=float(k))
    for k in range(len(truth) - 1):
        g.add_edge(k, k + 1, transform_between(truth[k], truth[k + 1]),
                   EdgeKind.SEQUENTIAL, stamp=float(k + 1))
    if close_loop:
        g.add_edge(len(truth) - 1, 0, transform_between(truth[-1], truth[0]),
                   EdgeKind.LOOP_CLOSURE, stamp=float(len(truth)))
    return g


def perturb(graph, rng, xy=0.1, theta=0.05, skip=(0,)):
    for v in list(graph.vertices()):
        if v.id in skip:
            continue
        graph.set_pose(
            v.id,
            Pose2(
                v.pose.x + rng.uniform(-xy, xy),
                v.pose.y + rng.uniform(-xy, xy),
                v.pose.theta + rng.uniform(-theta, theta),
            ),
        )


def max_position_error(graph, truth):
    return max(
        math.hypot(graph.vertex(k).pose.x - p.x, graph.vertex(k).pose.y - p.y)
        for k, p in enumerate(truth)
    )


def test_optimize_already_optimal():
    truth = square_loop_truth()
    g = build_loop_graph(truth)
    report = optimize(g, SolverConfig())
    assert report.iterations == 0
    # trig roundoff leaves ~1e-33 of residual cost at exact ground truth
    assert report.final_cost <= 1e-30
    assert report.converged


def test_optimize_recovers_perturbed_loop():
    truth = square_loop_truth()
    g = build_loop_graph(truth)
    perturb(g, np.random.default_rng(3))
    report = optimize(g, SolverConfig())
    assert report.converged
    assert report.final_cost <= report.initial_cost
    assert report.iterations <= 50
    assert max_position_error(g, truth) <= 1e-6


def test_anchor_pose_never_moves():
    truth = square_loop_truth()
    g = build_loop_graph(truth)
    perturb(g, np.random.default_rng(4), skip=(5,))
    anchor_before = g.vertex(5).pose
    optimize(g, SolverConfig(anchor=5))
    assert g.vertex(5).pose == anchor_before


def test_all_theta_normalized_after_optimize():
    truth = square_loop_truth()
    g = build_loop_graph(truth)
    perturb(g, np.random.default_rng(5))
    optimize(g, SolverConfig())
    for v in g.vertices():
        assert -math.pi <= v.pose.theta < math.pi


def test_huber_beats_quadratic_on_gross_outlier():
    truth = square_loop_truth()
    rng = np.random.default_rng(11)
    base = build_loop_graph(truth)
    phantom = Pose2(truth[15].x + 10.0, truth[15].y, truth[15].theta)
    base.add_edge(5, 15, transform_between(truth[5], phantom), EdgeKind.LOOP_CLOSURE, stamp=99.0)
    perturb(base, rng, xy=0.05, theta=0.02)

    g_huber = base.copy()
    g_quad = base.copy()
    optimize(g_huber, SolverConfig(loss="huber"))
    optimize(g_quad, SolverConfig(loss="quadratic"))
    assert max_position_error(g_huber, truth) < max_position_error(g_quad, truth)


def test_huber_equals_quadratic_when_all_inlier():
    truth = square_loop_truth()
    g1 = build_loop_graph(truth)
    perturb(g1, np.random.default_rng(6), xy=0.02, theta=0.01)
    g2 = g1.copy()
    optimize(g1, SolverConfig(loss="huber"))
    optimize(g2, SolverConfig(loss="quadratic"))
    for v1, v2 in zip(g1.vertices(), g2.vertices()):
        assert math.hypot(v1.pose.x - v2.pose.x, v1.pose.y - v2.pose.y) <= 1e-7
        assert abs(wrap_angle(v1.pose.theta - v2.pose.theta)) <= 1e-7


def test_gauge_invariance():
    truth = square_loop_truth()
    rng = np.random.default_rng(8)
    g = build_loop_graph(truth)
    # slightly inconsistent measurements so the optimum is away from the start
    for e in list(g.edges()):
        c = e.constraint
        g.remove_edge(e.id)
        g.add_edge(e.from_id, e.to_id,
                   RelativeConstraint(max(0.0, c.d + rng.normal(0, 0.01)),
                                      c.heading, c.facing + rng.normal(0, 0.01)),
                   e.kind, e.stamp, edge_id=e.id)
    phi, tx, ty = 0.7, 3.0, -2.0

    def rigid(p):
        return Pose2(
            tx + p.x * math.cos(phi) - p.y * math.sin(phi),
            ty + p.x * math.sin(phi) + p.y * math.cos(phi),
            p.theta + phi,
        )

    g_moved = g.copy()
    for v in list(g_moved.vertices()):
        g_moved.set_pose(v.id, rigid(v.pose))

    optimize(g, SolverConfig())
    optimize(g_moved, SolverConfig())
    for v in g.vertices():
        expect = rigid(v.pose)
        got = g_moved.vertex(v.id).pose
        assert math.hypot(got.x - expect.x, got.y - expect.y) <= 1e-8
        assert abs(wrap_angle(got.theta - expect.theta)) <= 1e-8


def test_cost_never_increases_across_reports():
    truth = square_loop_truth()
    g = build_loop_graph(truth)
    perturb(g, np.random.default_rng(9))
    r1 = optimize(g, SolverConfig(max_iterations=3))
    r2 = optimize(g, SolverConfig(max_iterations=3))
    assert r1.final_cost <= r1.initial_cost
    assert r2.final_cost <= r2.initial_cost
    assert r2.initial_cost == pytest.approx(r1.final_cost, rel=1e-12)


def test_chunked_cost_matches_serial():
    truth = square_loop_truth()
    g = build_loop_graph(truth)
    perturb(g, np.random.default_rng(10))
    cfg = SolverConfig()
    edge_ids = [e.id for e in g.edges()]
    total = robust_cost(g, cfg)
    for n_chunks in (2, 3, 7):
        parts = [edge_ids[k::n_chunks] for k in range(n_chunks)]
        chunked = sum(robust_cost(g, cfg, chunk) for chunk in parts)
        assert chunked == pytest.approx(total, abs=1e-9)


def test_edge_weight_hook():
    g = CognitiveMap()
    g.add_vertex(Pose2(0, 0, 0), stamp=0.0)
    g.add_vertex(Pose2(0.5, 0, 0), stamp=1.0)
    g.add_edge(0, 1, C10, EdgeKind.SEQUENTIAL, stamp=1.0)
    plain = robust_cost(g, SolverConfig(loss="quadratic"))
    doubled = robust_cost(g, SolverConfig(loss="quadratic", edge_weight=lambda e: 2.0))
    assert doubled == pytest.approx(2 * plain)


def test_non_finite_cost_raises():
    g = CognitiveMap()
    g.add_vertex(Pose2(0, 0, 0), stamp=0.0)
    g.add_vertex(Pose2(1e308, 0, 0), stamp=1.0)
    g.add_edge(0, 1, C10, EdgeKind.SEQUENTIAL, stamp=1.0)
    with pytest.raises(NumericalError):
        optimize(g, SolverConfig(loss="quadratic"))


def test_empty_graph_report():
    report = optimize(CognitiveMap(), SolverConfig())
    assert report.iterations == 0
    assert report.converged


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(huber_delta=0.0)
    with pytest.raises(ValueError):
        SolverConfig(loss="tukey")
    with pytest.raises(ValueError):
        SolverConfig(damping_up=0.5)
