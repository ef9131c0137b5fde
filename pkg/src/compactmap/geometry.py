"""SE(2) primitives: planar poses and relative constraints.

Angles live on the half-open interval [-pi, pi) and are re-normalized on
every construction. Relative constraints are stored in (d, heading,
facing) form: `d` is the straight-line distance to the target frame,
`heading` the direction of that displacement expressed in the source
frame, and `facing` the change of orientation. Heading and facing are
independent quantities; a constraint may point one way while the frame
turns another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Normalize an angle to [-pi, pi).

    Raises ValueError on non-finite input. The interval is half-open, so
    +pi maps to -pi.
    """
    if not math.isfinite(a):
        raise ValueError(f"angle must be finite, got {a!r}")
    w = (a + math.pi) % TWO_PI - math.pi
    # Float rounding can land the modulo exactly on 2*pi for tiny
    # negative inputs; fold the resulting +pi back to the lower bound.
    if w >= math.pi:
        w = -math.pi
    return w


@dataclass(frozen=True)
class Pose2:
    """A planar pose (x, y, theta); theta is normalized on construction."""

    x: float
    y: float
    theta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"pose coordinates must be finite, got ({self.x!r}, {self.y!r})")
        object.__setattr__(self, "theta", wrap_angle(self.theta))


@dataclass(frozen=True)
class RelativeConstraint:
    """A relative measurement between two poses in (d, heading, facing) form."""

    d: float
    heading: float
    facing: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.d):
            raise ValueError(f"constraint distance must be finite, got {self.d!r}")
        if self.d < 0.0:
            raise ValueError(f"constraint distance must be non-negative, got {self.d!r}")
        object.__setattr__(self, "heading", wrap_angle(self.heading))
        object.__setattr__(self, "facing", wrap_angle(self.facing))


IDENTITY = RelativeConstraint(0.0, 0.0, 0.0)


def constraint_to_xy(c: RelativeConstraint) -> tuple[float, float, float]:
    """Convert a constraint to displacement form (dx, dy, dtheta) in the source frame."""
    return c.d * math.cos(c.heading), c.d * math.sin(c.heading), c.facing


def xy_to_constraint(dx: float, dy: float, dtheta: float) -> RelativeConstraint:
    """Convert a frame displacement (dx, dy, dtheta) to (d, heading, facing) form.

    Pure rotations (dx = dy = 0) use heading 0 by convention, since the
    heading of a zero-length displacement is unobservable.
    """
    if not (math.isfinite(dx) and math.isfinite(dy)):
        raise ValueError(f"displacement must be finite, got ({dx!r}, {dy!r})")
    d = math.hypot(dx, dy)
    heading = math.atan2(dy, dx) if d > 0.0 else 0.0
    return RelativeConstraint(d, heading, wrap_angle(dtheta))


def compose(c1: RelativeConstraint, c2: RelativeConstraint) -> RelativeConstraint:
    """Chain two relative constraints into one (SE(2) composition)."""
    dx1, dy1, f1 = constraint_to_xy(c1)
    dx2, dy2, f2 = constraint_to_xy(c2)
    cf, sf = math.cos(f1), math.sin(f1)
    return xy_to_constraint(
        dx1 + cf * dx2 - sf * dy2,
        dy1 + sf * dx2 + cf * dy2,
        f1 + f2,
    )


def invert(c: RelativeConstraint) -> RelativeConstraint:
    """SE(2) inverse: compose(c, invert(c)) is the identity constraint."""
    dx, dy, f = constraint_to_xy(c)
    cf, sf = math.cos(f), math.sin(f)
    return xy_to_constraint(-(cf * dx + sf * dy), sf * dx - cf * dy, -f)


def predict(p: Pose2, c: RelativeConstraint) -> Pose2:
    """Pose reached by applying constraint c from pose p (zero-residual target)."""
    return Pose2(
        p.x + c.d * math.cos(p.theta + c.heading),
        p.y + c.d * math.sin(p.theta + c.heading),
        p.theta + c.facing,
    )


def transform_between(a: Pose2, b: Pose2) -> RelativeConstraint:
    """The constraint that maps pose a onto pose b: predict(a, result) == b."""
    dx = b.x - a.x
    dy = b.y - a.y
    ct, st = math.cos(a.theta), math.sin(a.theta)
    return xy_to_constraint(ct * dx + st * dy, -st * dx + ct * dy, b.theta - a.theta)


def planar_distance(a: Pose2, b: Pose2) -> float:
    """Euclidean distance between two pose positions (orientation ignored)."""
    return math.hypot(b.x - a.x, b.y - a.y)
