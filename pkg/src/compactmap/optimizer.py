"""Robust nonlinear least-squares solver for the pose graph.

Minimizes 0.5 * sum_e rho(||r_e||^2) over all vertex poses, where each
edge (i -> j) contributes the 3-component residual

    r = [ x_j - x_i - d * cos(theta_i + heading),
          y_j - y_i - d * sin(theta_i + heading),
          wrap(theta_j - theta_i - facing) ]

and rho is either a Huber loss or the plain quadratic. Each iteration
assembles the damped normal equations (J^T W J + lambda I) dx = -J^T W r
as a sparse block system whose pattern follows graph adjacency, solves
them with a sparse direct factorization, and accepts the step only when
it lowers the robust cost; rejected steps raise the damping and retry
(Levenberg-Marquardt). One vertex, the anchor, is held fixed to remove
the rigid-transform gauge freedom of the graph.

Residual and normal-equation evaluation reduce associatively over edges,
so partial sums over any partition of the edge set agree with the serial
result to floating-point summation tolerance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from .geometry import Pose2, RelativeConstraint, wrap_angle
from .graph import CognitiveMap, Edge

_MAX_DAMPING = 1e32


class NumericalError(RuntimeError):
    """The solve produced non-finite values (corrupt input or singular system)."""


@dataclass
class SolverConfig:
    """Knobs for the robust Levenberg-Marquardt solve.

    `anchor` names the vertex whose pose is held fixed; None picks the
    lowest vertex id. `loss` selects "huber" (default) or "quadratic".
    `edge_weight` is an optional per-edge scalar weight hook; edges weigh
    1.0 when it is None.
    """

    huber_delta: float = 1.0
    max_iterations: int = 100
    gradient_tolerance: float = 1e-10
    relative_cost_tolerance: float = 1e-8
    initial_damping: float = 1e-4
    damping_up: float = 10.0
    damping_down: float = 0.1
    anchor: int | None = None
    loss: str = "huber"
    edge_weight: Callable[[Edge], float] | None = None

    def __post_init__(self) -> None:
        if self.huber_delta <= 0.0:
            raise ValueError("huber_delta must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        for name in ("gradient_tolerance", "relative_cost_tolerance", "initial_damping"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.damping_up <= 1.0 or not 0.0 < self.damping_down < 1.0:
            raise ValueError("damping factors must satisfy up > 1 and 0 < down < 1")
        if self.loss not in ("huber", "quadratic"):
            raise ValueError(f"unknown loss {self.loss!r}")


@dataclass
class OptimizeReport:
    iterations: int
    initial_cost: float
    final_cost: float
    converged: bool


# ----------------------------------------------------------------------
# Residual blocks
# ----------------------------------------------------------------------


def residual(e_i: Pose2, e_j: Pose2, e_ij: RelativeConstraint) -> tuple[float, float, float]:
    """Residual of one edge given its endpoint poses; theta component wrapped."""
    a = e_i.theta + e_ij.heading
    return (
        e_j.x - e_i.x - e_ij.d * math.cos(a),
        e_j.y - e_i.y - e_ij.d * math.sin(a),
        wrap_angle(e_j.theta - e_i.theta - e_ij.facing),
    )


def residual_jacobians(
    e_i: Pose2, e_j: Pose2, e_ij: RelativeConstraint
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic derivatives of the residual w.r.t. the two poses.

    Returns (J_i, J_j), each 3x3 with rows in residual order and columns
    (x, y, theta). J_j is the identity; only J_i couples into theta.
    """
    a = e_i.theta + e_ij.heading
    j_i = np.array(
        [
            [-1.0, 0.0, e_ij.d * math.sin(a)],
            [0.0, -1.0, -e_ij.d * math.cos(a)],
            [0.0, 0.0, -1.0],
        ]
    )
    return j_i, np.eye(3)


def huber_weight(squared_norm: float, delta: float) -> float:
    """IRLS weight rho'(s) for the Huber loss: 1 inside, delta/sqrt(s) outside."""
    if squared_norm < 0.0:
        raise ValueError("squared_norm must be non-negative")
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if squared_norm <= delta * delta:
        return 1.0
    return delta / math.sqrt(squared_norm)


def huber_rho(squared_norm: float, delta: float) -> float:
    """Huber loss on the squared residual norm: s inside, 2*delta*sqrt(s) - delta^2 outside."""
    if squared_norm <= delta * delta:
        return squared_norm
    return 2.0 * delta * math.sqrt(squared_norm) - delta * delta


# ----------------------------------------------------------------------
# Vectorized evaluation over the whole edge set
# ----------------------------------------------------------------------


def _wrap_array(a: np.ndarray) -> np.ndarray:
    w = (a + np.pi) % (2.0 * np.pi) - np.pi
    w[w >= np.pi] -= 2.0 * np.pi
    return w


class _Problem:
    """Flattened view of the graph for vectorized evaluation."""

    def __init__(self, graph: CognitiveMap, cfg: SolverConfig, edge_ids: Sequence[int] | None):
        ids = graph.vertex_ids()
        self.ids = ids
        self.slot = {vid: k for k, vid in enumerate(ids)}
        self.x = np.array(
            [[v.pose.x, v.pose.y, v.pose.theta] for v in graph.vertices()], dtype=float
        ).reshape(len(ids), 3)
        if edge_ids is None:
            edges = list(graph.edges())
        else:
            edges = [graph.edge(eid) for eid in edge_ids]
        self.m = len(edges)
        self.ei = np.array([self.slot[e.from_id] for e in edges], dtype=np.intp)
        self.ej = np.array([self.slot[e.to_id] for e in edges], dtype=np.intp)
        self.d = np.array([e.constraint.d for e in edges], dtype=float)
        self.heading = np.array([e.constraint.heading for e in edges], dtype=float)
        self.facing = np.array([e.constraint.facing for e in edges], dtype=float)
        if cfg.edge_weight is None:
            self.hook = np.ones(self.m)
        else:
            self.hook = np.array([cfg.edge_weight(e) for e in edges], dtype=float)

    def residuals(self, x: np.ndarray) -> np.ndarray:
        a = x[self.ei, 2] + self.heading
        r = np.empty((self.m, 3))
        r[:, 0] = x[self.ej, 0] - x[self.ei, 0] - self.d * np.cos(a)
        r[:, 1] = x[self.ej, 1] - x[self.ei, 1] - self.d * np.sin(a)
        r[:, 2] = _wrap_array(x[self.ej, 2] - x[self.ei, 2] - self.facing)
        return r

    def cost(self, x: np.ndarray, cfg: SolverConfig) -> float:
        r = self.residuals(x)
        s = np.einsum("kr,kr->k", r, r)
        if cfg.loss == "huber":
            dsq = cfg.huber_delta * cfg.huber_delta
            rho = np.where(s <= dsq, s, 2.0 * cfg.huber_delta * np.sqrt(s) - dsq)
        else:
            rho = s
        return 0.5 * float(np.sum(self.hook * rho))

    def robust_weights(self, s: np.ndarray, cfg: SolverConfig) -> np.ndarray:
        if cfg.loss == "huber":
            dsq = cfg.huber_delta * cfg.huber_delta
            with np.errstate(divide="ignore"):
                w = np.where(s <= dsq, 1.0, cfg.huber_delta / np.sqrt(np.maximum(s, dsq)))
        else:
            w = np.ones_like(s)
        return w * self.hook

    def normal_equations(
        self, x: np.ndarray, cfg: SolverConfig
    ) -> tuple[sp.csr_matrix, np.ndarray]:
        """Assemble H = J^T W J and g = J^T W r over all edges."""
        n3 = 3 * len(self.ids)
        r = self.residuals(x)
        s = np.einsum("kr,kr->k", r, r)
        w = self.robust_weights(s, cfg)

        a = x[self.ei, 2] + self.heading
        ji = np.zeros((self.m, 3, 3))
        ji[:, 0, 0] = -1.0
        ji[:, 1, 1] = -1.0
        ji[:, 2, 2] = -1.0
        ji[:, 0, 2] = self.d * np.sin(a)
        ji[:, 1, 2] = -self.d * np.cos(a)
        jj = np.broadcast_to(np.eye(3), (self.m, 3, 3))

        g = np.zeros(n3)
        rows: list[np.ndarray] = []
        cols: list[np.ndarray] = []
        data: list[np.ndarray] = []
        offs = np.arange(3)
        bi = 3 * self.ei
        bj = 3 * self.ej

        shape = (self.m, 3, 3)
        for ja, ba in ((ji, bi), (jj, bj)):
            ga = np.einsum("kri,kr->ki", ja, r) * w[:, None]
            np.add.at(g, (ba[:, None] + offs).ravel(), ga.ravel())
            for jb, bb in ((ji, bi), (jj, bj)):
                blocks = np.einsum("kri,krj->kij", ja, jb) * w[:, None, None]
                rows.append(np.broadcast_to((ba[:, None] + offs)[:, :, None], shape).ravel())
                cols.append(np.broadcast_to((bb[:, None] + offs)[:, None, :], shape).ravel())
                data.append(blocks.ravel())

        h = sp.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n3, n3),
        ).tocsr()
        return h, g


def robust_cost(
    graph: CognitiveMap, cfg: SolverConfig | None = None, edge_ids: Sequence[int] | None = None
) -> float:
    """Total robust cost of the graph, optionally restricted to a subset of edges.

    The sum is associative over edge subsets: partition the edge set,
    evaluate each part, and the parts add up to the whole (to float
    summation tolerance).
    """
    cfg = cfg or SolverConfig()
    if (edge_ids is not None and len(edge_ids) == 0) or graph.edge_count == 0:
        return 0.0
    prob = _Problem(graph, cfg, edge_ids)
    return prob.cost(prob.x, cfg)


# ----------------------------------------------------------------------
# Levenberg-Marquardt driver
# ----------------------------------------------------------------------


def optimize(graph: CognitiveMap, cfg: SolverConfig | None = None) -> OptimizeReport:
    """Optimize all vertex poses in place; the anchor pose never moves.

    Terminates on small gradient, small relative cost decrease, or the
    iteration cap. Cost never increases between accepted iterations.
    """
    cfg = cfg or SolverConfig()
    if graph.vertex_count == 0 or graph.edge_count == 0:
        return OptimizeReport(0, 0.0, 0.0, True)

    anchor = cfg.anchor if cfg.anchor is not None else min(graph.vertex_ids())
    graph.vertex(anchor)

    prob = _Problem(graph, cfg, None)
    x = prob.x.copy()
    free = np.ones(3 * len(prob.ids), dtype=bool)
    free[3 * prob.slot[anchor] : 3 * prob.slot[anchor] + 3] = False
    n_free = int(free.sum())

    cost = prob.cost(x, cfg)
    if not math.isfinite(cost):
        raise NumericalError(f"non-finite cost {cost} on entry; input graph is corrupt")
    initial_cost = cost

    lam = cfg.initial_damping
    iterations = 0
    converged = False

    for _ in range(cfg.max_iterations):
        h, g = prob.normal_equations(x, cfg)
        if float(np.max(np.abs(g[free]), initial=0.0)) <= cfg.gradient_tolerance:
            converged = True
            break
        h_ff = h[free][:, free]
        g_f = g[free]

        accepted = False
        singular = False
        while lam <= _MAX_DAMPING:
            damped = (h_ff + lam * sp.identity(n_free, format="csr")).tocsc()
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", MatrixRankWarning)
                delta = spsolve(damped, -g_f)
            if not np.all(np.isfinite(delta)):
                singular = True
                lam *= cfg.damping_up
                continue
            singular = False
            x_new = x.copy()
            x_new.reshape(-1)[free] += delta
            x_new[:, 2] = _wrap_array(x_new[:, 2])
            new_cost = prob.cost(x_new, cfg)
            if math.isfinite(new_cost) and new_cost < cost:
                accepted = True
                break
            lam *= cfg.damping_up
        if not accepted:
            if singular:
                raise NumericalError("normal equations stayed singular despite damping")
            break  # damping exhausted without progress; keep the best state

        iterations += 1
        lam = max(lam * cfg.damping_down, 1e-18)
        drop = cost - new_cost
        x, cost = x_new, new_cost
        if drop <= cfg.relative_cost_tolerance * max(cost, 1e-300):
            converged = True
            break

    for vid in prob.ids:
        k = prob.slot[vid]
        graph.set_pose(vid, Pose2(x[k, 0], x[k, 1], x[k, 2]))
    return OptimizeReport(iterations, initial_cost, cost, converged)
