"""Vehicle kinematics, angle-of-projection geometry and the ground-truth
relative-speed metric between jammer and receiver."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Vec2:
    """Immutable 2D vector (meters or m/s depending on use)."""

    x: float
    y: float

    def __add__(self, other: Vec2) -> Vec2:
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Vec2) -> Vec2:
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, scalar: float) -> Vec2:
        return Vec2(self.x * scalar, self.y * scalar)

    def __rmul__(self, scalar: float) -> Vec2:
        return self * scalar

    def __neg__(self) -> Vec2:
        return Vec2(-self.x, -self.y)

    def dot(self, other: Vec2) -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def unit(self) -> Vec2:
        n = self.norm()
        if n == 0.0:
            return Vec2(0.0, 0.0)
        return Vec2(self.x / n, self.y / n)


class Role(enum.Enum):
    TX = "Tx"
    RX = "Rx"
    JX = "Jx"


class DirectionMode(enum.Enum):
    SAME = "same"
    OPPOSITE = "opposite"


@dataclass(frozen=True)
class VehicleState:
    position: Vec2
    velocity: Vec2
    role: Role
    max_speed: float = math.inf

    @property
    def speed(self) -> float:
        return self.velocity.norm()


@dataclass(frozen=True)
class AopGeometry:
    """Right triangle between jammer and receiver.

    ``dx`` and ``dy`` are the (nonnegative) legs along and across the
    receiver's motion axis, ``d`` the hypotenuse.
    """

    dx: float
    dy: float
    d: float
    cos_theta: float


@dataclass(frozen=True)
class RelativeSpeed:
    value: float
    direction_mode: DirectionMode


def _motion_axis(rx: VehicleState) -> Vec2:
    axis = rx.velocity.unit()
    if axis.norm() == 0.0:
        # stationary receiver: fall back to the global x-axis
        return Vec2(1.0, 0.0)
    return axis


def aop_geometry(jx: VehicleState, rx: VehicleState) -> AopGeometry:
    """Angle-of-projection triangle, with the x-axis along the receiver's
    current direction of motion."""
    axis = _motion_axis(rx)
    normal = Vec2(-axis.y, axis.x)
    sep = jx.position - rx.position
    dx = abs(sep.dot(axis))
    dy = abs(sep.dot(normal))
    d = math.hypot(dx, dy)
    cos_theta = 1.0 if d == 0.0 else min(dx / d, 1.0)
    return AopGeometry(dx=dx, dy=dy, d=d, cos_theta=cos_theta)


def direction_mode(jx: VehicleState, rx: VehicleState) -> DirectionMode:
    """Same direction unless the jammer's velocity points against the
    receiver's motion axis."""
    along = jx.velocity.dot(_motion_axis(rx))
    return DirectionMode.SAME if along >= 0.0 else DirectionMode.OPPOSITE


def relative_speed_truth(
    u_jx: float, u_rx: float, cos_theta: float, mode: DirectionMode
) -> RelativeSpeed:
    """|u_jx cos(theta) +/- u_rx|; the sign follows ``mode``."""
    if u_jx < 0 or u_rx < 0:
        raise ValueError("speeds must be nonnegative")
    if abs(cos_theta) > 1.0:
        raise ValueError(f"cos_theta={cos_theta} outside [-1, 1]")
    projected = u_jx * cos_theta
    if mode is DirectionMode.SAME:
        value = abs(projected + u_rx)
    else:
        value = abs(projected - u_rx)
    return RelativeSpeed(value=value, direction_mode=mode)


def true_relative_speed(jx: VehicleState, rx: VehicleState) -> RelativeSpeed:
    geo = aop_geometry(jx, rx)
    return relative_speed_truth(jx.speed, rx.speed, geo.cos_theta, direction_mode(jx, rx))


def advance(state: VehicleState, dt: float, accel: Vec2 = Vec2(0.0, 0.0)) -> VehicleState:
    """Constant-acceleration step with the speed capped at ``state.max_speed``.

    When the cap is reached mid-step and the acceleration is aligned with the
    velocity, the step is split into an accelerating and a cruising part so
    the position stays exact.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    v0 = state.velocity
    v1 = v0 + accel * dt
    vmax = state.max_speed
    if v1.norm() <= vmax:
        pos = state.position + v0 * dt + accel * (0.5 * dt * dt)
        return replace(state, position=pos, velocity=v1)

    if v0.norm() >= vmax:
        # already at the cap: hold speed, keep heading
        return replace(state, position=state.position + v0 * dt)

    # time at which |v0 + a t| reaches vmax (positive root of a quadratic)
    a2 = accel.dot(accel)
    b = 2.0 * v0.dot(accel)
    c = v0.dot(v0) - vmax * vmax
    t_cap = (-b + math.sqrt(b * b - 4.0 * a2 * c)) / (2.0 * a2)
    v_cap = v0 + accel * t_cap
    pos = state.position + v0 * t_cap + accel * (0.5 * t_cap * t_cap)
    pos = pos + v_cap * (dt - t_cap)
    return replace(state, position=pos, velocity=v_cap)
