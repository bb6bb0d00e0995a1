"""
Shared planar types and frame utilities.

Wrench components are always ordered (f_z, f_y, tau_x): the force-controlled
axis first, then the lateral force, then the torque about tool X. All
quantities are SI, angles in radians.
"""
import math
from dataclasses import dataclass

import numpy as np


def _check_finite(name: str, values) -> None:
    for value in values:
        if not math.isfinite(value):
            raise ValueError(f"{name} components must be finite, got {tuple(values)}")


@dataclass(frozen=True)
class PlanarWrench:
    """Force along tool Z and Y [N] and torque about tool X [N·m]."""

    f_z: float = 0.0
    f_y: float = 0.0
    tau_x: float = 0.0

    def __post_init__(self):
        _check_finite("PlanarWrench", (self.f_z, self.f_y, self.tau_x))

    def __add__(self, other: "PlanarWrench") -> "PlanarWrench":
        return PlanarWrench(self.f_z + other.f_z, self.f_y + other.f_y, self.tau_x + other.tau_x)

    def __sub__(self, other: "PlanarWrench") -> "PlanarWrench":
        return PlanarWrench(self.f_z - other.f_z, self.f_y - other.f_y, self.tau_x - other.tau_x)

    def __neg__(self) -> "PlanarWrench":
        return PlanarWrench(-self.f_z, -self.f_y, -self.tau_x)

    def scale(self, factor: float) -> "PlanarWrench":
        return PlanarWrench(factor * self.f_z, factor * self.f_y, factor * self.tau_x)

    def as_array(self) -> np.ndarray:
        return np.array([self.f_z, self.f_y, self.tau_x])

    @classmethod
    def from_array(cls, values) -> "PlanarWrench":
        f_z, f_y, tau_x = (float(v) for v in values)
        return cls(f_z, f_y, tau_x)


ZERO_WRENCH = PlanarWrench()


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped == -math.pi:
        return math.pi
    return wrapped


@dataclass(frozen=True)
class PlanarPose:
    """Position in the Y-Z plane [m] and orientation about X [rad]."""

    y: float = 0.0
    z: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        _check_finite("PlanarPose", (self.y, self.z, self.theta))
        object.__setattr__(self, "theta", normalize_angle(self.theta))


@dataclass(frozen=True)
class PlanarTwist:
    v_y: float = 0.0
    v_z: float = 0.0
    omega_x: float = 0.0

    def __post_init__(self):
        _check_finite("PlanarTwist", (self.v_y, self.v_z, self.omega_x))


@dataclass(frozen=True)
class TimeStamp:
    """Simulation time at a controller boundary."""

    tick: int
    t: float

    def __post_init__(self):
        if self.tick < 0 or self.t < 0:
            raise ValueError("TimeStamp tick and t must be nonnegative")

    @classmethod
    def at_tick(cls, tick: int, control_period: float) -> "TimeStamp":
        return cls(tick, tick * control_period)


@dataclass(frozen=True)
class DiagonalSelector:
    """
    Diagonal {0, 1} projector over the (z, y, x) axes.

    Args:
        z: Selection of the f_z axis
        y: Selection of the f_y axis
        x: Selection of the tau_x axis
    """

    z: int = 1
    y: int = 0
    x: int = 0

    def __post_init__(self):
        for entry in (self.z, self.y, self.x):
            if entry not in (0, 1):
                raise ValueError(f"selector entries must be 0 or 1, got {(self.z, self.y, self.x)}")

    def complement(self) -> "DiagonalSelector":
        return DiagonalSelector(1 - self.z, 1 - self.y, 1 - self.x)

    def is_complement_of(self, other: "DiagonalSelector") -> bool:
        return (self.z + other.z, self.y + other.y, self.x + other.x) == (1, 1, 1)


# W selects the force-controlled Z axis
FORCE_AXIS_SELECTOR = DiagonalSelector(1, 0, 0)


def wrench_project(w: PlanarWrench, selector: DiagonalSelector) -> PlanarWrench:
    """Keep the components the selector picks and zero the rest."""
    return PlanarWrench(
        w.f_z if selector.z else 0.0,
        w.f_y if selector.y else 0.0,
        w.tau_x if selector.x else 0.0,
    )


def rotate_wrench(w: PlanarWrench, theta: float) -> PlanarWrench:
    """
    Rotate the force part of a wrench by theta in the Y-Z plane.

    [f_y', f_z'] = R(theta) [f_y, f_z] with R = [[cos, -sin], [sin, cos]].
    A tool-frame wrench of a body at angle theta is expressed in the world
    frame with rotate_wrench(w, theta), and back with rotate_wrench(w, -theta).
    The torque component is unchanged.
    """
    if not math.isfinite(theta):
        raise ValueError("rotation angle must be finite")
    c = math.cos(theta)
    s = math.sin(theta)
    f_y = c * w.f_y - s * w.f_z
    f_z = s * w.f_y + c * w.f_z
    return PlanarWrench(f_z, f_y, w.tau_x)


def world_to_tool(w: PlanarWrench, theta: float) -> PlanarWrench:
    return rotate_wrench(w, -theta)


def tool_to_world(w: PlanarWrench, theta: float) -> PlanarWrench:
    return rotate_wrench(w, theta)


def saturate(x: float) -> float:
    """Clamp to [-1, 1]."""
    return 1.0 if x > 1.0 else (-1.0 if x < -1.0 else x)
