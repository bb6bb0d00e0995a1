"""
Controller stack for the planar end-effector.

In free space the end-effector runs an impedance law towards a setpoint that
moves along Z at the chase speed. Once contact is detected it switches to a
PI force loop on Z, positive feedback of the measured lateral force and
torque on the remaining axes, and operational-space decoupling to the
desired inertia. All wrenches handled here are in the tool frame except the
impedance law, which works on world poses.
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple

from .core import (FORCE_AXIS_SELECTOR, DiagonalSelector, PlanarPose, PlanarTwist,
                   PlanarWrench, ZERO_WRENCH, normalize_angle, world_to_tool,
                   wrench_project)

LOGGER = logging.getLogger(__name__)

Axes = Tuple[float, float, float]


def _check_nonnegative(name: str, values) -> None:
    for value in values:
        if not value >= 0:
            raise ValueError(f"{name} entries must be nonnegative, got {tuple(values)}")


@dataclass(frozen=True)
class ImpedanceGains:
    """Diagonal stiffness and damping over the (z, y, x) axes."""

    k_z: float = 500.0
    k_y: float = 0.0
    k_x: float = 0.0
    b_z: float = 1.0
    b_y: float = 1.0
    b_x: float = 1.0

    def __post_init__(self):
        _check_nonnegative("ImpedanceGains", (self.k_z, self.k_y, self.k_x, self.b_z, self.b_y, self.b_x))


@dataclass(frozen=True)
class ForceControllerGains:
    """
    PI gains of the Z force loop.

    Args:
        k_zp: Proportional gain (force to force)
        k_zi: Integral gain [1/s]
        f_z_ref: Desired pressing force [N]
        integral_limit: Clamp on the integral state [N·s]
    """

    k_zp: float = 1.0
    k_zi: float = 0.07
    f_z_ref: float = 0.8
    integral_limit: float = 10.0

    def __post_init__(self):
        _check_nonnegative("ForceControllerGains", (self.k_zp, self.k_zi))
        if not self.integral_limit > 0:
            raise ValueError("integral_limit must be positive")


@dataclass(frozen=True)
class InertiaReductionGains:
    k_yp: float = 0.2
    k_xp: float = 0.5

    def __post_init__(self):
        _check_nonnegative("InertiaReductionGains", (self.k_yp, self.k_xp))

    @property
    def is_zero(self) -> bool:
        return self.k_yp == 0 and self.k_xp == 0


class ControllerMode(Enum):
    FREE_SPACE_IMPEDANCE = "FreeSpaceImpedance"
    CONTACT_FORCE_CONTROL = "ContactForceControl"


@dataclass(frozen=True)
class DecouplingModel:
    """
    Operational-space decoupling F = M_hat * M_d^-1 * F* + C_hat + G_hat - w_meas.

    Inertias are diagonal over the (z, y, x) axes. The measured wrench is the
    contact wrench on the end-effector, so subtracting it cancels the contact.
    """

    m_hat: Axes = (7.5, 7.5, 0.3)
    m_d: Axes = (0.5, 2.0, 0.3)
    c_hat: PlanarWrench = ZERO_WRENCH
    g_hat: PlanarWrench = ZERO_WRENCH
    compensation_enabled: bool = True

    def __post_init__(self):
        for value in self.m_hat + self.m_d:
            if not value > 0:
                raise ValueError("M_hat and M_d diagonal entries must be positive")


@dataclass(frozen=True)
class ModeSwitching:
    """
    Contact detection with hysteresis.

    Contact is detected when |f_z| or |f_y| exceeds force_threshold, or |tau_x|
    exceeds torque_threshold, for detect_ticks consecutive ticks; it is lost
    after loss_debounce_ticks consecutive ticks below.
    """

    force_threshold: float = 0.1
    torque_threshold: float = 0.01
    detect_ticks: int = 2
    loss_debounce_ticks: int = 10
    enabled: bool = True

    def detects(self, w: PlanarWrench) -> bool:
        return (abs(w.f_y) > self.force_threshold or abs(w.f_z) > self.force_threshold
                or abs(w.tau_x) > self.torque_threshold)


@dataclass(frozen=True)
class ControllerConfig:
    impedance: ImpedanceGains = field(default_factory=ImpedanceGains)
    force: ForceControllerGains = field(default_factory=ForceControllerGains)
    inertia_reduction: InertiaReductionGains = field(default_factory=InertiaReductionGains)
    decoupling: DecouplingModel = field(default_factory=DecouplingModel)
    switching: ModeSwitching = field(default_factory=ModeSwitching)
    chase_speed: float = 0.08
    selector: DiagonalSelector = FORCE_AXIS_SELECTOR


@dataclass(frozen=True)
class ControllerState:
    """
    Internal state carried between ticks.

    The impedance setpoint is anchor + (0, chase_speed * t, 0) along Z.
    """

    mode: ControllerMode = ControllerMode.FREE_SPACE_IMPEDANCE
    above: int = 0
    below: int = 0
    integral: float = 0.0
    anchor: PlanarPose = PlanarPose()
    f_star: PlanarWrench = ZERO_WRENCH

    @classmethod
    def start(cls, pose: PlanarPose) -> "ControllerState":
        return cls(anchor=PlanarPose(pose.y, pose.z, 0.0))

    def setpoint(self, t: float, chase_speed: float) -> PlanarPose:
        return PlanarPose(self.anchor.y, self.anchor.z + chase_speed * t, self.anchor.theta)


def impedance_cmd(x_current: PlanarPose, x_setpoint: PlanarPose, xdot: PlanarTwist,
                  gains: ImpedanceGains) -> PlanarWrench:
    """Restoring impedance K_e (x_setpoint - x_current) - B_e xdot."""
    f_z = gains.k_z * (x_setpoint.z - x_current.z) - gains.b_z * xdot.v_z
    f_y = gains.k_y * (x_setpoint.y - x_current.y) - gains.b_y * xdot.v_y
    tau = gains.k_x * normalize_angle(x_setpoint.theta - x_current.theta) - gains.b_x * xdot.omega_x
    return PlanarWrench(f_z, f_y, tau)


def _clamp(value: float, limit: float) -> float:
    return limit if value > limit else (-limit if value < -limit else value)


def force_pi_cmd(f_z_meas: float, gains: ForceControllerGains, integral_state: float, dt: float,
                 integrate: bool = True) -> Tuple[float, float]:
    """
    PI force command along tool +Z.

    Args:
        f_z_meas: Measured pressing force [N]
        gains: PI gains and reference
        integral_state: Integral of the error so far [N·s]
        dt: Control period [s]
        integrate: Accumulate this tick's error; off on the tick of mode entry

    Returns:
        (command [N], new integral state)
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    error = f_z_meas - gains.f_z_ref
    if integrate:
        integral_state = _clamp(integral_state + error * dt, gains.integral_limit)
    command = -(gains.k_zp * error + gains.k_zi * integral_state)
    return command, integral_state


def inertia_reduction_cmd(w_meas: PlanarWrench, gains: InertiaReductionGains) -> PlanarWrench:
    """Positive feedback of the measured lateral force and torque."""
    return PlanarWrench(0.0, gains.k_yp * w_meas.f_y, gains.k_xp * w_meas.tau_x)


def compose_control(force_part: PlanarWrench, inertia_part: PlanarWrench,
                    selector: DiagonalSelector = FORCE_AXIS_SELECTOR,
                    inertia_selector: Optional[DiagonalSelector] = None) -> PlanarWrench:
    """
    F* = W force_part + (I - W) inertia_part.

    Raises:
        ValueError: inertia_selector is given and is not the complement of selector
    """
    if inertia_selector is None:
        inertia_selector = selector.complement()
    elif not selector.is_complement_of(inertia_selector):
        raise ValueError("force and inertia-reduction selectors must be complementary")
    return wrench_project(force_part, selector) + wrench_project(inertia_part, inertia_selector)


def decouple_cmd(f_star: PlanarWrench, model: DecouplingModel, w_meas: PlanarWrench) -> PlanarWrench:
    """Actuator wrench realising F* on a body of inertia M_d."""
    if not model.compensation_enabled:
        return f_star
    scaled = PlanarWrench(
        model.m_hat[0] / model.m_d[0] * f_star.f_z,
        model.m_hat[1] / model.m_d[1] * f_star.f_y,
        model.m_hat[2] / model.m_d[2] * f_star.tau_x,
    )
    return scaled + model.c_hat + model.g_hat - w_meas


def update_mode(state: ControllerState, w_meas: PlanarWrench, pose: PlanarPose,
                config: ControllerConfig, t: float) -> Tuple[ControllerState, bool]:
    """Advance the mode state machine; the flag is set on the tick of contact entry."""
    switching = config.switching
    if not switching.enabled:
        return state, False
    detected = switching.detects(w_meas)
    if state.mode is ControllerMode.FREE_SPACE_IMPEDANCE:
        above = state.above + 1 if detected else 0
        if above >= switching.detect_ticks:
            LOGGER.debug("contact detected at t=%.3f", t)
            return replace(state, mode=ControllerMode.CONTACT_FORCE_CONTROL, above=above,
                           integral=0.0, below=0), True
        return replace(state, above=above), False
    below = state.below + 1 if not detected else 0
    if below >= switching.loss_debounce_ticks:
        LOGGER.debug("contact lost at t=%.3f", t)
        anchor = PlanarPose(state.anchor.y, pose.z - config.chase_speed * t, state.anchor.theta)
        return replace(state, mode=ControllerMode.FREE_SPACE_IMPEDANCE, above=0, below=below,
                       anchor=anchor), False
    return replace(state, below=below), False


def controller_step(state: ControllerState, w_meas: PlanarWrench, pose: PlanarPose,
                    twist: PlanarTwist, config: ControllerConfig, t: float,
                    dt: float) -> Tuple[PlanarWrench, ControllerMode, ControllerState]:
    """
    One control tick.

    Args:
        state: Controller state from the previous tick
        w_meas: Sensor reading (tool frame, contact wrench on the end-effector)
        pose: End-effector world pose
        twist: End-effector world twist
        config: Controller configuration
        t: Time of this tick [s]
        dt: Control period [s]

    Returns:
        (tool-frame actuator wrench, new mode, new state)
    """
    state, entering = update_mode(state, w_meas, pose, config, t)
    if state.mode is ControllerMode.FREE_SPACE_IMPEDANCE:
        world = impedance_cmd(pose, state.setpoint(t, config.chase_speed), twist, config.impedance)
        command = world_to_tool(world, pose.theta)
        return command, state.mode, replace(state, f_star=command)

    f_z_cmd, integral = force_pi_cmd(-w_meas.f_z, config.force, state.integral, dt,
                                     integrate=not entering)
    f_star = compose_control(PlanarWrench(f_z=f_z_cmd),
                             inertia_reduction_cmd(w_meas, config.inertia_reduction),
                             config.selector)
    command = decouple_cmd(f_star, config.decoupling, w_meas)
    return command, state.mode, replace(state, integral=integral, f_star=f_star)
