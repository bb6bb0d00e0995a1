"""
Planar (Y, Z, theta_x) rigid-body plant of the air-bed testbed.

An actuated end-effector carries a tool whose tip is a disk of radius
tip_radius, tool_length ahead of the body origin along tool +Z. A free-floating
target carries a V-groove of two wall segments whose apex sits standoff
behind the target origin, with the mouth opening towards tool -Z. Contact is
a penalty force clamped at zero with regularised Coulomb friction. There is
no gravity in the plane.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .core import (PlanarPose, PlanarTwist, PlanarWrench, ZERO_WRENCH, saturate,
                   world_to_tool)
from .errors import GeometryError, check_divergence

LOGGER = logging.getLogger(__name__)

Vec2 = Tuple[float, float]

DEFAULT_HALF_ANGLE_DEG = 30.0


class BodyKind(Enum):
    ACTUATED = "actuated"
    FREE_FLOATING = "free_floating"


@dataclass(frozen=True)
class PlanarBody:
    """Rigid body in the plane with its current pose and twist."""

    mass: float
    inertia: float
    pose: PlanarPose = PlanarPose()
    twist: PlanarTwist = PlanarTwist()
    kind: BodyKind = BodyKind.FREE_FLOATING

    def __post_init__(self):
        if not (self.mass > 0 and self.inertia > 0):
            raise ValueError("body mass and inertia must be strictly positive")

    def momentum(self) -> Vec2:
        return self.mass * self.twist.v_y, self.mass * self.twist.v_z


@dataclass(frozen=True)
class FunnelGeometry:
    """
    Funnel dimensions shared by the tool and the groove.

    Args:
        half_angle: Groove wall angle from the groove axis [rad]
        mouth_half_width: Half width of the groove mouth [m]
        depth: Distance from mouth to apex along the axis [m]
        tip_radius: Radius of the tool tip disk [m]
        tool_length: Tip centre offset ahead of the body origin [m]
        standoff: Apex offset behind the body origin along +Z [m]
    """

    half_angle: float = math.radians(DEFAULT_HALF_ANGLE_DEG)
    mouth_half_width: float = 0.05
    depth: float = 0.05 / math.tan(math.radians(DEFAULT_HALF_ANGLE_DEG))
    tip_radius: float = 0.01
    tool_length: float = 0.1
    standoff: float = 0.04

    def __post_init__(self):
        if not 0.0 < self.half_angle < math.pi / 2:
            raise ValueError("half_angle must lie in (0, pi/2)")
        if not (self.mouth_half_width > 0 and self.depth > 0):
            raise ValueError("mouth_half_width and depth must be positive")
        if not self.tip_radius >= 0:
            raise ValueError("tip_radius must be nonnegative")
        if self.depth * math.tan(self.half_angle) < 0.5 * self.mouth_half_width:
            raise ValueError("groove walls must meet before the mouth degenerates")

    @classmethod
    def v_groove(cls, half_angle: float, mouth_half_width: float, **kwargs) -> "FunnelGeometry":
        """Groove whose two walls meet exactly at the apex."""
        return cls(half_angle, mouth_half_width, mouth_half_width / math.tan(half_angle), **kwargs)

    def walls(self) -> List[Tuple[float, Vec2, Vec2]]:
        """(side, mouth end, apex end) of the right (+1) and left (-1) walls, body frame."""
        tan_a = math.tan(self.half_angle)
        mouth_z = self.standoff - self.depth
        inner = self.mouth_half_width - self.depth * tan_a
        return [(side, (side * self.mouth_half_width, mouth_z), (side * inner, self.standoff))
                for side in (1.0, -1.0)]


@dataclass(frozen=True)
class ContactPoint:
    """
    One tip-wall contact.

    The normal points from the target wall towards the end-effector tip.
    Lever arms run from each body origin to the contact point.
    """

    position: Vec2
    normal: Vec2
    penetration: float
    relative_velocity: Vec2
    ee_lever: Vec2 = (0.0, 0.0)
    target_lever: Vec2 = (0.0, 0.0)

    def __post_init__(self):
        if self.penetration < 0:
            raise ValueError("penetration must be nonnegative")
        if abs(math.hypot(*self.normal) - 1.0) > 1e-12:
            raise ValueError("contact normal must be a unit vector")


@dataclass(frozen=True)
class FrictionModel:
    """Coulomb friction regularised below eps_v."""

    mu: float = 0.3
    eps_v: float = 1e-3

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must lie in [0, 1]")
        if not self.eps_v > 0:
            raise ValueError("eps_v must be positive")

    def tangential(self, normal_force: float, slip_velocity: float) -> float:
        return -self.mu * normal_force * saturate(slip_velocity / self.eps_v)


@dataclass(frozen=True)
class PlantParams:
    """
    Physical parameters of the planar plant.

    Args:
        ee_mass: End-effector mass [kg]
        ee_inertia: End-effector inertia about X [kg·m²]
        target_mass: Target mass [kg]
        target_inertia: Target inertia about X [kg·m²]
        contact_stiffness: Penalty stiffness k_c [N/m]
        contact_damping: Penalty damping b_c [N·s/m]
        funnel_friction: Tip-wall Coulomb friction
        mu_airbed: Air-bed friction coefficient on the target
        airbed_radius: Effective radius of the air-bed rotational friction [m]
        gravity: Gravity magnitude loading the air bed [m/s²]
        joint_friction_force: Arm friction along tool Y [N]
        joint_friction_torque: Arm friction about X [N·m]
        ee_geometry: Tool tip geometry
        target_geometry: Groove geometry
    """

    ee_mass: float = 7.5
    ee_inertia: float = 0.3
    target_mass: float = 12.0
    target_inertia: float = 0.15
    contact_stiffness: float = 1000.0
    contact_damping: float = 20.0
    funnel_friction: FrictionModel = field(default_factory=FrictionModel)
    mu_airbed: float = 0.0
    airbed_radius: float = 0.1
    gravity: float = 9.81
    joint_friction_force: float = 0.5
    joint_friction_torque: float = 0.01
    ee_geometry: FunnelGeometry = field(default_factory=FunnelGeometry)
    target_geometry: FunnelGeometry = field(default_factory=FunnelGeometry)

    def __post_init__(self):
        for name in ("ee_mass", "ee_inertia", "target_mass", "target_inertia", "contact_stiffness"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("contact_damping", "mu_airbed", "airbed_radius", "gravity",
                     "joint_friction_force", "joint_friction_torque"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class PlantState:
    """
    Both bodies plus impulse bookkeeping on the target.

    target_impulse integrates the contact and air-bed force on the target;
    contact_impulse integrates the magnitude of the contact force alone.
    """

    ee: PlanarBody
    target: PlanarBody
    target_impulse: Vec2 = (0.0, 0.0)
    contact_impulse: float = 0.0

    @classmethod
    def initial(cls, params: PlantParams, ee_pose: PlanarPose, target_pose: PlanarPose = PlanarPose(),
                ee_twist: PlanarTwist = PlanarTwist(), target_twist: PlanarTwist = PlanarTwist()) -> "PlantState":
        ee = PlanarBody(params.ee_mass, params.ee_inertia, ee_pose, ee_twist, BodyKind.ACTUATED)
        target = PlanarBody(params.target_mass, params.target_inertia, target_pose, target_twist)
        return cls(ee, target)

    def as_vector(self) -> Tuple[float, ...]:
        e, t = self.ee, self.target
        return (e.pose.y, e.pose.z, e.pose.theta, e.twist.v_y, e.twist.v_z, e.twist.omega_x,
                t.pose.y, t.pose.z, t.pose.theta, t.twist.v_y, t.twist.v_z, t.twist.omega_x)


def tip_center(ee_pose: PlanarPose, ee_geom: FunnelGeometry) -> Vec2:
    """World position of the tool tip centre."""
    return (ee_pose.y - math.sin(ee_pose.theta) * ee_geom.tool_length,
            ee_pose.z + math.cos(ee_pose.theta) * ee_geom.tool_length)


def funnel_contact(ee_pose: PlanarPose, target_pose: PlanarPose, ee_geom: FunnelGeometry,
                   target_geom: FunnelGeometry, ee_twist: PlanarTwist = PlanarTwist(),
                   target_twist: PlanarTwist = PlanarTwist()) -> List[ContactPoint]:
    """
    Contacts between the tool tip disk and the two groove walls.

    A wall is in contact while the tip centre projects onto the segment and
    lies within one tip radius of the wall line on either side; the
    penetration is tip_radius minus the signed distance to the line.

    Args:
        ee_pose: End-effector body pose
        target_pose: Target body pose
        ee_geom: Tool geometry (tip_radius, tool_length)
        target_geom: Groove geometry
        ee_twist: End-effector twist, for the contact relative velocity
        target_twist: Target twist, for the contact relative velocity

    Returns:
        Zero, one or two contacts, right wall first
    """
    if math.hypot(ee_pose.y - target_pose.y, ee_pose.z - target_pose.z) < 1e-9:
        raise GeometryError("end-effector and target poses coincide")
    radius = ee_geom.tip_radius
    c_y, c_z = tip_center(ee_pose, ee_geom)
    ct = math.cos(target_pose.theta)
    st = math.sin(target_pose.theta)
    contacts = []
    for side, (ay, az), (by, bz) in target_geom.walls():
        a_y = target_pose.y + ct * ay - st * az
        a_z = target_pose.z + st * ay + ct * az
        b_y = target_pose.y + ct * by - st * bz
        b_z = target_pose.z + st * by + ct * bz
        e_y = b_y - a_y
        e_z = b_z - a_z
        length_sq = e_y * e_y + e_z * e_z
        length = math.sqrt(length_sq)
        s = ((c_y - a_y) * e_y + (c_z - a_z) * e_z) / length_sq
        if s < 0 or s > 1:
            continue
        n_y = side * (-e_z) / length
        n_z = side * e_y / length
        distance = (c_y - a_y) * n_y + (c_z - a_z) * n_z
        if distance >= radius or distance < -radius:
            continue
        p_y = c_y - distance * n_y
        p_z = c_z - distance * n_z
        re_y = p_y - ee_pose.y
        re_z = p_z - ee_pose.z
        rt_y = p_y - target_pose.y
        rt_z = p_z - target_pose.z
        ve_y = ee_twist.v_y - ee_twist.omega_x * re_z
        ve_z = ee_twist.v_z + ee_twist.omega_x * re_y
        vt_y = target_twist.v_y - target_twist.omega_x * rt_z
        vt_z = target_twist.v_z + target_twist.omega_x * rt_y
        contacts.append(ContactPoint(
            position=(p_y, p_z),
            normal=(n_y, n_z),
            penetration=radius - distance,
            relative_velocity=(ve_y - vt_y, ve_z - vt_z),
            ee_lever=(re_y, re_z),
            target_lever=(rt_y, rt_z),
        ))
    return contacts


def contact_force_components(contact: ContactPoint, k_c: float, b_c: float,
                             friction: FrictionModel) -> Tuple[float, float]:
    """(normal, tangential) force magnitudes of one contact; the normal is clamped at 0."""
    n_y, n_z = contact.normal
    vr_y, vr_z = contact.relative_velocity
    penetration_rate = -(vr_y * n_y + vr_z * n_z)
    normal = k_c * contact.penetration + b_c * penetration_rate
    if normal < 0:
        normal = 0.0
    slip = vr_y * (-n_z) + vr_z * n_y
    return normal, friction.tangential(normal, slip)


def penalty_wrench(contacts: List[ContactPoint], k_c: float, b_c: float,
                   friction: FrictionModel) -> Tuple[PlanarWrench, PlanarWrench]:
    """
    World-frame contact wrenches on the end-effector and on the target.

    Torques are taken about each body's origin through the contact lever arms.
    """
    ee_fy = ee_fz = ee_tau = 0.0
    tg_fy = tg_fz = tg_tau = 0.0
    for contact in contacts:
        n_y, n_z = contact.normal
        normal, tangential = contact_force_components(contact, k_c, b_c, friction)
        f_y = normal * n_y + tangential * (-n_z)
        f_z = normal * n_z + tangential * n_y
        re_y, re_z = contact.ee_lever
        rt_y, rt_z = contact.target_lever
        ee_fy += f_y
        ee_fz += f_z
        ee_tau += re_y * f_z - re_z * f_y
        tg_fy -= f_y
        tg_fz -= f_z
        tg_tau -= rt_y * f_z - rt_z * f_y
    return PlanarWrench(ee_fz, ee_fy, ee_tau), PlanarWrench(tg_fz, tg_fy, tg_tau)


def contacts_of(state: PlantState, params: PlantParams) -> List[ContactPoint]:
    return funnel_contact(state.ee.pose, state.target.pose, params.ee_geometry,
                          params.target_geometry, state.ee.twist, state.target.twist)


def _integrate(body: PlanarBody, f_y: float, f_z: float, tau: float, dt: float) -> PlanarBody:
    v_y = body.twist.v_y + dt * f_y / body.mass
    v_z = body.twist.v_z + dt * f_z / body.mass
    omega = body.twist.omega_x + dt * tau / body.inertia
    pose = PlanarPose(body.pose.y + dt * v_y, body.pose.z + dt * v_z, body.pose.theta + dt * omega)
    return replace(body, pose=pose, twist=PlanarTwist(v_y, v_z, omega))


def step_plant(state: PlantState, actuation: PlanarWrench, params: PlantParams, dt: float,
               tick: int = 0) -> PlantState:
    """
    One semi-implicit Euler substep of both bodies.

    Velocities are updated from the wrenches at the start of the substep, then
    poses from the new velocities. The actuation is a world-frame wrench on
    the end-effector; the target only feels contact and air-bed friction.

    Args:
        state: Plant state at the start of the substep
        actuation: World-frame actuator wrench on the end-effector
        params: Plant parameters
        dt: Substep length [s]
        tick: Control tick, reported if the step diverges

    Returns:
        PlantState after dt
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    eps = params.funnel_friction.eps_v
    ee_w, tg_w = penalty_wrench(contacts_of(state, params), params.contact_stiffness,
                                params.contact_damping, params.funnel_friction)

    ee = state.ee
    c = math.cos(ee.pose.theta)
    s = math.sin(ee.pose.theta)
    lateral_speed = c * ee.twist.v_y + s * ee.twist.v_z
    joint_fy = -params.joint_friction_force * saturate(lateral_speed / eps)
    joint_tau = -params.joint_friction_torque * saturate(ee.twist.omega_x / eps)
    f_y = actuation.f_y + ee_w.f_y + c * joint_fy
    f_z = actuation.f_z + ee_w.f_z + s * joint_fy
    tau = actuation.tau_x + ee_w.tau_x + joint_tau

    tg = state.target
    speed = math.sqrt(tg.twist.v_y ** 2 + tg.twist.v_z ** 2)
    bed_force = params.mu_airbed * tg.mass * params.gravity
    if speed > 0:
        bed_y = -bed_force * saturate(speed / eps) * tg.twist.v_y / speed
        bed_z = -bed_force * saturate(speed / eps) * tg.twist.v_z / speed
    else:
        bed_y = bed_z = 0.0
    radius = params.airbed_radius
    bed_tau = -bed_force * radius * saturate(tg.twist.omega_x * radius / eps)

    new_state = PlantState(
        ee=_integrate(ee, f_y, f_z, tau, dt),
        target=_integrate(tg, tg_w.f_y + bed_y, tg_w.f_z + bed_z, tg_w.tau_x + bed_tau, dt),
        target_impulse=(state.target_impulse[0] + dt * (tg_w.f_y + bed_y),
                        state.target_impulse[1] + dt * (tg_w.f_z + bed_z)),
        contact_impulse=state.contact_impulse + dt * math.hypot(tg_w.f_y, tg_w.f_z),
    )
    check_divergence(new_state.as_vector(), tick, float("nan"))
    return new_state


class ForceTorqueSensor:
    """
    Wrench sensor between flange and tool with additive noise and tick latency.

    Args:
        noise_std: Standard deviation of zero-mean Gaussian noise per component
        latency_ticks: Number of control ticks a reading is delayed
        rng: Random generator for the noise; seeded by the caller
    """

    def __init__(self, noise_std: float = 0.0, latency_ticks: int = 1,
                 rng: Optional[np.random.Generator] = None):
        if noise_std < 0 or latency_ticks < 0:
            raise ValueError("noise_std and latency_ticks must be nonnegative")
        self.noise_std = noise_std
        self.latency_ticks = latency_ticks
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self._buffer = deque()

    def sample(self, true_wrench: PlanarWrench) -> PlanarWrench:
        """Record the current true wrench and return the reading due this tick."""
        reading = true_wrench
        if self.noise_std > 0:
            reading = reading + PlanarWrench.from_array(self.rng.normal(0.0, self.noise_std, 3))
        self._buffer.append(reading)
        if len(self._buffer) > self.latency_ticks:
            return self._buffer.popleft()
        return ZERO_WRENCH


def measure_wrench(state: PlantState, contacts: List[ContactPoint], params: PlantParams,
                   sensor: Optional[ForceTorqueSensor] = None) -> PlanarWrench:
    """
    Net contact wrench on the end-effector in the tool frame.

    With a sensor the reading carries its noise and latency; without one the
    true wrench is returned.
    """
    ee_w, _ = penalty_wrench(contacts, params.contact_stiffness, params.contact_damping,
                             params.funnel_friction)
    true_wrench = world_to_tool(ee_w, state.ee.pose.theta)
    if sensor is None:
        return true_wrench
    return sensor.sample(true_wrench)


class WallContactPlant:
    """
    Actuated mass pressed against a penalty wall along one tool axis.

    The wall pushes back with f = k_c * x + b_c * v while x > 0 and f > 0
    (or always, when bilateral). The sensor reports the wall force on the
    mass, -f, on the chosen axis.

    Args:
        mass: Actuated mass [kg]
        k_c: Wall stiffness [N/m]
        b_c: Wall damping [N·s/m]
        axis: 'z' or 'y', the tool axis the wall acts along
        bilateral: Keep the wall force for negative penetration too
        x0: Initial penetration [m]
        sensor: Sensor giving the reading latency; defaults to one tick, no noise
    """

    def __init__(self, mass: float = 7.5, k_c: float = 250.0, b_c: float = 20.0, axis: str = "z",
                 bilateral: bool = False, x0: float = 0.0, sensor: Optional[ForceTorqueSensor] = None):
        if axis not in ("z", "y"):
            raise ValueError("axis must be 'z' or 'y'")
        self.mass = mass
        self.k_c = k_c
        self.b_c = b_c
        self.axis = axis
        self.bilateral = bilateral
        self.x = x0
        self.v = 0.0
        self.sensor = sensor if sensor is not None else ForceTorqueSensor()
        self.tick = 0

    def wall_force(self) -> float:
        f = self.k_c * self.x + self.b_c * self.v
        if not self.bilateral and (self.x <= 0 or f < 0):
            return 0.0
        return f

    def read_sensor(self) -> PlanarWrench:
        f = self.wall_force()
        if self.axis == "z":
            return self.sensor.sample(PlanarWrench(f_z=-f))
        return self.sensor.sample(PlanarWrench(f_y=-f))

    def step(self, actuation: PlanarWrench, control_period: float, substeps: int = 5) -> float:
        """Apply the actuation over one control tick; returns the wall force at the end."""
        force = actuation.f_z if self.axis == "z" else actuation.f_y
        dt = control_period / substeps
        f = 0.0
        for _ in range(substeps):
            f = self.wall_force()
            self.v += dt * (force - f) / self.mass
            self.x += dt * self.v
        self.tick += 1
        check_divergence((self.x, self.v), self.tick, self.tick * control_period)
        return f
