"""
Chase, contact and slide-to-alignment runs of the planar plant.

Each run starts with the target at rest at the origin and the end-effector at
rest, offset laterally from the groove axis and short of the groove mouth.
The controller chases along Z, touches the groove wall and, depending on the
method, either keeps its impedance or switches to force control.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .control import (ControllerConfig, ControllerState,
                      InertiaReductionGains, controller_step)
from .core import PlanarPose, TimeStamp, normalize_angle, tool_to_world
from .errors import BracketError, DivergenceError, FloatSimError
from .plant2d import (ForceTorqueSensor, PlantParams, PlantState, contacts_of, measure_wrench,
                      step_plant)

LOGGER = logging.getLogger(__name__)

TRACE_COLUMNS = ["tick", "t", "mode", "ee_y", "ee_z", "ee_th", "t_y", "t_z", "t_th",
                 "fz_meas", "fy_meas", "tx_meas", "fz_cmd", "fy_cmd", "tx_cmd", "n_contacts"]


class Method(Enum):
    FORCE_WITH_INERTIA_REDUCTION = "ForceWithInertiaReduction"
    FORCE_ONLY = "ForceOnly"
    IMPEDANCE_ONLY = "ImpedanceOnly"


@dataclass(frozen=True)
class ScenarioConfig:
    """
    One experiment run.

    Args:
        name: Label used in tables and output file names
        method: Control method
        controller: Gains; f_z_ref and the inertia-reduction gains are per method
        plant: Plant parameters
        lateral_offset: Initial tip offset from the groove axis [m]
        approach_distance: Initial gap from tip surface to the groove mouth [m]
        duration: Simulated time [s]
        control_period: Controller period [s]
        substeps: Physics substeps per control tick
        sensor_noise_std: Sensor noise per component [N, N·m]
        sensor_latency_ticks: Sensor delay in control ticks
        seed: Seed of the sensor noise generator
        tol_lateral: Alignment tolerance on the lateral offset [m]
        tol_angle: Alignment tolerance on the relative angle [rad]
    """

    name: str = "run"
    method: Method = Method.FORCE_WITH_INERTIA_REDUCTION
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    plant: PlantParams = field(default_factory=PlantParams)
    lateral_offset: float = 0.02
    approach_distance: float = 0.05
    duration: float = 10.0
    control_period: float = 0.005
    substeps: int = 5
    sensor_noise_std: float = 0.0
    sensor_latency_ticks: int = 1
    seed: int = 0
    tol_lateral: float = 1e-3
    tol_angle: float = 0.02

    def __post_init__(self):
        if not self.control_period > 0 or self.substeps < 1:
            raise ValueError("control_period must be positive and substeps at least 1")
        if self.duration < 0:
            raise ValueError("duration must be nonnegative")
        ticks = self.duration / self.control_period
        if abs(ticks - round(ticks)) > 1e-9 * max(1.0, ticks):
            raise ValueError("duration must be a whole number of control periods")
        if not (self.tol_lateral > 0 and self.tol_angle > 0):
            raise ValueError("alignment tolerances must be positive")
        if self.method is Method.FORCE_ONLY and not self.controller.inertia_reduction.is_zero:
            raise ValueError("ForceOnly requires k_xp = k_yp = 0")

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.control_period))

    def with_force_reference(self, f_z_ref: float) -> "ScenarioConfig":
        force = replace(self.controller.force, f_z_ref=f_z_ref)
        return replace(self, controller=replace(self.controller, force=force))

    def effective_controller(self) -> ControllerConfig:
        """Controller as run: ImpedanceOnly never leaves the impedance mode."""
        if self.method is Method.IMPEDANCE_ONLY:
            return replace(self.controller, switching=replace(self.controller.switching, enabled=False))
        return self.controller

    def initial_state(self) -> PlantState:
        ee_geom = self.plant.ee_geometry
        target_geom = self.plant.target_geometry
        tip_z = target_geom.standoff - target_geom.depth - self.approach_distance - ee_geom.tip_radius
        ee_pose = PlanarPose(self.lateral_offset, tip_z - ee_geom.tool_length, 0.0)
        return PlantState.initial(self.plant, ee_pose)


@dataclass
class RunMetrics:
    """
    Scalars derived from one run.

    steady_* and ripple cover the post-settling window, the final 30% of the
    time after first contact. Pressing force is -f_z of the measured wrench.
    """

    contact_break_count: int = 0
    first_contact_time: Optional[float] = None
    alignment_time: Optional[float] = None
    peak_fz: float = 0.0
    steady_mean_fz: float = 0.0
    steady_error: float = 0.0
    ripple: float = 0.0
    final_lateral_offset: float = 0.0
    final_relative_angle: float = 0.0
    final_target_speed: float = 0.0
    contact_impulse: float = 0.0

    @property
    def aligned(self) -> bool:
        return self.alignment_time is not None

    def to_dict(self) -> Dict:
        return asdict(self)

    def to_text(self) -> str:
        """Sorted key=value lines; floats as %.9e, missing times as 'none'."""
        lines = []
        for key, value in sorted(self.to_dict().items()):
            if value is None:
                text = "none"
            elif isinstance(value, float):
                text = f"{value:.9e}"
            else:
                text = str(value)
            lines.append(f"{key}={text}")
        return "\n".join(lines) + "\n"


def alignment_offsets(ee_pose: PlanarPose, target_pose: PlanarPose,
                      tool_length: float = 0.0) -> Tuple[float, float]:
    """(tip lateral offset from the groove axis, relative angle) of the two funnels."""
    tip_y = ee_pose.y - math.sin(ee_pose.theta) * tool_length
    tip_z = ee_pose.z + math.cos(ee_pose.theta) * tool_length
    ct = math.cos(target_pose.theta)
    st = math.sin(target_pose.theta)
    lateral = ct * (tip_y - target_pose.y) + st * (tip_z - target_pose.z)
    return lateral, normalize_angle(ee_pose.theta - target_pose.theta)


def alignment_check(ee_pose: PlanarPose, target_pose: PlanarPose, tol_lateral: float = 1e-3,
                    tol_angle: float = 0.02, tool_length: float = 0.0) -> bool:
    """True iff the tip offset and the relative angle are within tolerance (inclusive)."""
    if not (tol_lateral > 0 and tol_angle > 0):
        raise ValueError("tolerances must be positive")
    lateral, angle = alignment_offsets(ee_pose, target_pose, tool_length)
    return abs(lateral) <= tol_lateral and abs(angle) <= tol_angle


def run_scenario(config: ScenarioConfig) -> Tuple[pd.DataFrame, RunMetrics]:
    """
    Simulate one run.

    Each control tick measures contacts at the tick-start state, feeds the
    sensor reading to the controller, applies the resulting actuator wrench
    over the physics substeps and then checks alignment.

    Returns:
        (trace with one row per tick, metrics)

    Raises:
        DivergenceError: with the tick index and last state
    """
    controller = config.effective_controller()
    plant = config.plant
    sensor = ForceTorqueSensor(config.sensor_noise_std, config.sensor_latency_ticks,
                               np.random.default_rng(config.seed))
    dt_sub = config.control_period / config.substeps
    tool_length = plant.ee_geometry.tool_length
    f_ref = controller.force.f_z_ref

    state = config.initial_state()
    cstate = ControllerState.start(PlanarPose(state.ee.pose.y, state.ee.pose.z, 0.0))
    metrics = RunMetrics()
    rows = []
    pressing = []
    prev_contacts = 0
    LOGGER.info("run %s (%s) for %d ticks", config.name, config.method.value, config.n_ticks)

    for tick in range(config.n_ticks):
        t = TimeStamp.at_tick(tick, config.control_period).t
        contacts = contacts_of(state, plant)
        w = measure_wrench(state, contacts, plant, sensor)
        n_contacts = len(contacts)
        if n_contacts > 0 and prev_contacts == 0 and metrics.first_contact_time is not None:
            metrics.contact_break_count += 1
            LOGGER.debug("re-impact at t=%.3f", t)
        if n_contacts > 0 and metrics.first_contact_time is None:
            metrics.first_contact_time = t
        prev_contacts = n_contacts

        ee, tg = state.ee, state.target
        command, mode, cstate = controller_step(cstate, w, ee.pose, ee.twist, controller, t,
                                                config.control_period)
        actuation = tool_to_world(command, ee.pose.theta)
        rows.append((tick, t, mode.value, ee.pose.y, ee.pose.z, ee.pose.theta,
                     tg.pose.y, tg.pose.z, tg.pose.theta, w.f_z, w.f_y, w.tau_x,
                     command.f_z, command.f_y, command.tau_x, n_contacts))
        try:
            for _ in range(config.substeps):
                state = step_plant(state, actuation, plant, dt_sub, tick)
        except DivergenceError as exc:
            raise DivergenceError(f"run {config.name} diverged", tick=tick, time=t,
                                  state=exc.state) from exc

        if (metrics.alignment_time is None and n_contacts > 0
                and alignment_check(state.ee.pose, state.target.pose, config.tol_lateral,
                                    config.tol_angle, tool_length)):
            metrics.alignment_time = t
        pressing.append(-w.f_z)

    trace = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    if rows:
        _finish_metrics(metrics, config, state, np.asarray(pressing), f_ref, tool_length)
    if metrics.first_contact_time is not None and not metrics.aligned:
        LOGGER.warning("run %s made contact but did not align", config.name)
    return trace, metrics


def _finish_metrics(metrics: RunMetrics, config: ScenarioConfig, state: PlantState,
                    pressing: np.ndarray, f_ref: float, tool_length: float) -> None:
    metrics.peak_fz = float(np.max(np.abs(pressing)))
    first = metrics.first_contact_time
    if first is not None:
        times = np.arange(len(pressing)) * config.control_period
        window = pressing[times > first + 0.7 * (config.duration - first)]
        if window.size:
            metrics.steady_mean_fz = float(window.mean())
            metrics.steady_error = float(np.mean(np.abs(window - f_ref)))
            metrics.ripple = float(0.5 * (window.max() - window.min()))
    lateral, angle = alignment_offsets(state.ee.pose, state.target.pose, tool_length)
    metrics.final_lateral_offset = lateral
    metrics.final_relative_angle = angle
    metrics.final_target_speed = math.hypot(state.target.twist.v_y, state.target.twist.v_z)
    metrics.contact_impulse = state.contact_impulse


@dataclass
class ThresholdResult:
    """Final bracket of the sliding-threshold search and its probe log."""

    name: str
    lo: float
    hi: float
    log: pd.DataFrame

    def to_text(self) -> str:
        return f"name={self.name}\nlo={self.lo:.9e}\nhi={self.hi:.9e}\n"


def _probe(template: ScenarioConfig, f_z_ref: float) -> RunMetrics:
    _, metrics = run_scenario(template.with_force_reference(f_z_ref))
    LOGGER.info("%s probe f_z_ref=%.6g aligned=%s", template.name, f_z_ref, metrics.aligned)
    return metrics


def min_sliding_force_search(template: ScenarioConfig, f_lo: float, f_hi: float, resolution: float,
                             max_workers: int = 0) -> ThresholdResult:
    """
    Bisect f_z_ref for the smallest reference that still aligns.

    The bracket is verified first: f_hi must align and f_lo must not. At
    least one bisection probe runs even when the bracket is already within
    resolution.

    Args:
        template: Run configuration; its f_z_ref is overridden per probe
        f_lo: Lower end of the bracket [N]
        f_hi: Upper end of the bracket [N]
        resolution: Final bracket width [N]
        max_workers: Threads for the two bracket checks; 0 runs sequentially

    Returns:
        ThresholdResult with the final bracket and the probe log

    Raises:
        BracketError: the bracket is empty or does not bracket
    """
    if not f_lo < f_hi:
        raise BracketError(f"f_lo ({f_lo:g}) must be below f_hi ({f_hi:g})")
    if not resolution > 0:
        raise BracketError("resolution must be positive")
    if max_workers > 0:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            lo_metrics, hi_metrics = pool.map(lambda f: _probe(template, f), (f_lo, f_hi))
    else:
        lo_metrics, hi_metrics = _probe(template, f_lo), _probe(template, f_hi)

    log = [("bracket", f_lo, lo_metrics.aligned, lo_metrics.alignment_time),
           ("bracket", f_hi, hi_metrics.aligned, hi_metrics.alignment_time)]
    if lo_metrics.aligned or not hi_metrics.aligned:
        raise BracketError(f"{template.name}: [{f_lo:g}, {f_hi:g}] does not bracket the sliding threshold "
                           f"(aligned at f_lo: {lo_metrics.aligned}, at f_hi: {hi_metrics.aligned})")

    lo, hi = f_lo, f_hi
    while True:
        mid = 0.5 * (lo + hi)
        metrics = _probe(template, mid)
        log.append(("bisect", mid, metrics.aligned, metrics.alignment_time))
        if metrics.aligned:
            hi = mid
        else:
            lo = mid
        if hi - lo <= resolution:
            break
    frame = pd.DataFrame(log, columns=["phase", "f_z_ref", "aligned", "alignment_time"])
    return ThresholdResult(template.name, lo, hi, frame)


METRIC_COLUMNS = ["contact_break_count", "first_contact_time", "alignment_time", "peak_fz",
                  "steady_mean_fz", "steady_error", "ripple", "final_lateral_offset",
                  "final_relative_angle", "final_target_speed", "contact_impulse"]


class MethodComparison:
    """Run several method configurations and tabulate their metrics."""

    def __init__(self):
        self.configs: List[ScenarioConfig] = []
        self.traces: Dict[str, pd.DataFrame] = {}
        self.metrics: Dict[str, RunMetrics] = {}
        self.failures: Dict[str, FloatSimError] = {}

    def add_run(self, config: ScenarioConfig) -> ScenarioConfig:
        self.configs.append(config)
        return config

    def _run_one(self, config: ScenarioConfig
                 ) -> Tuple[Optional[pd.DataFrame], Optional[RunMetrics], Optional[FloatSimError]]:
        try:
            trace, metrics = run_scenario(config)
        except FloatSimError as exc:
            LOGGER.error("run %s failed: %s", config.name, exc)
            return None, None, exc
        return trace, metrics, None

    def compare_methods(self, max_workers: int = 0) -> pd.DataFrame:
        """One row per configuration, in insertion order; failures fill the error column."""
        if not self.configs:
            raise ValueError("no configurations to compare")
        if max_workers > 0:
            with ThreadPoolExecutor(max_workers=max_workers) as pool:
                outcomes = list(pool.map(self._run_one, self.configs))
        else:
            outcomes = [self._run_one(config) for config in self.configs]

        comparison_data = []
        for config, (trace, metrics, error) in zip(self.configs, outcomes):
            row = {
                "name": config.name,
                "method": config.method.value,
                "f_z_ref": config.controller.force.f_z_ref,
                "k_xp": config.controller.inertia_reduction.k_xp,
                "k_yp": config.controller.inertia_reduction.k_yp,
            }
            if metrics is not None:
                self.traces[config.name] = trace
                self.metrics[config.name] = metrics
                row.update(metrics.to_dict())
                row["aligned"] = metrics.aligned
            else:
                row.update({column: None for column in METRIC_COLUMNS})
                row["aligned"] = False
                self.failures[config.name] = error
            row["error"] = str(error) if error is not None else ""
            comparison_data.append(row)
        return pd.DataFrame(comparison_data)


def compare_methods(configs: List[ScenarioConfig], max_workers: int = 0) -> pd.DataFrame:
    comparison = MethodComparison()
    for config in configs:
        comparison.add_run(config)
    return comparison.compare_methods(max_workers)


def method_config(method: Method, f_z_ref: float, k_xp: float = 0.0, k_yp: float = 0.0,
                  name: Optional[str] = None, base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    """A run configuration for one method row on top of a base configuration."""
    base = base if base is not None else ScenarioConfig()
    controller = replace(base.controller,
                         force=replace(base.controller.force, f_z_ref=f_z_ref),
                         inertia_reduction=InertiaReductionGains(k_yp=k_yp, k_xp=k_xp))
    return replace(base, name=name or method.value, method=method, controller=controller)


def comparison_configs(base: Optional[ScenarioConfig] = None) -> List[ScenarioConfig]:
    """The four compared rows: two inertia-reduction cases, pure force and pure impedance."""
    return [
        method_config(Method.FORCE_WITH_INERTIA_REDUCTION, 0.8, k_xp=0.5, k_yp=0.2,
                      name="method1_case1", base=base),
        method_config(Method.FORCE_WITH_INERTIA_REDUCTION, 0.8, k_xp=0.0, k_yp=1.0,
                      name="method1_case2", base=base),
        method_config(Method.FORCE_ONLY, 1.5, name="method2", base=base),
        method_config(Method.IMPEDANCE_ONLY, 0.8, name="method3", base=base),
    ]
