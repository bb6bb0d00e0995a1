"""
INI configuration files.

Sections: [sweep], [plant], [controller], [scenario], [threshold] and one
[method.<name>] per compared run. Unknown sections and keys are rejected with
their line number; absent keys of a present section take their defaults with
a warning.
"""
import configparser
import logging
import math
import re
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from .control import (ControllerConfig, DecouplingModel, ForceControllerGains, ImpedanceGains,
                      ModeSwitching)
from .errors import ConfigError
from .plant2d import DEFAULT_HALF_ANGLE_DEG, FrictionModel, FunnelGeometry, PlantParams
from .scenario import Method, ScenarioConfig, comparison_configs, method_config
from .sim1d import Sim1dParams, SweepField, SweepSpec

LOGGER = logging.getLogger(__name__)

METHOD_PREFIX = "method."


@dataclass(frozen=True)
class ThresholdSpec:
    methods: Tuple[str, ...] = ("method1_case1", "method2")
    f_lo: float = 0.2
    f_hi: float = 2.0
    resolution: float = 0.05


@dataclass
class FloatSimConfig:
    """Everything one configuration file describes, with defaults filled in."""

    sweep: SweepSpec = field(default_factory=lambda: SweepSpec(Sim1dParams(), SweepField.MANIP_STIFFNESS,
                                                               (0.0, 500.0, 2000.0)))
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    methods: List[ScenarioConfig] = field(default_factory=comparison_configs)
    threshold: ThresholdSpec = field(default_factory=ThresholdSpec)

    def method(self, name: str) -> ScenarioConfig:
        for config in self.methods:
            if config.name == name:
                return config
        raise ConfigError(f"threshold method '{name}' has no [{METHOD_PREFIX}{name}] section")


class _SectionReader:
    """Typed access to one section that tracks which keys were consumed."""

    def __init__(self, name: str, section: Optional[configparser.SectionProxy], lines: List[str]):
        self.name = name
        self.section = section
        self.lines = lines
        self.used = set()

    def line_of(self, key: Optional[str] = None) -> Optional[int]:
        header = re.compile(r"^\s*\[\s*" + re.escape(self.name) + r"\s*\]")
        in_section = False
        for number, text in enumerate(self.lines, start=1):
            if text.lstrip().startswith("["):
                in_section = bool(header.match(text))
                if in_section and key is None:
                    return number
                continue
            if in_section and key is not None and re.match(r"^\s*" + re.escape(key) + r"\s*[=:]", text, re.I):
                return number
        return None

    def _raw(self, key: str, default):
        self.used.add(key)
        if self.section is None:
            return None
        if key not in self.section:
            LOGGER.warning("[%s] %s not set, using default %s", self.name, key, default)
            return None
        return self.section[key]

    def _convert(self, key: str, raw: str, kind):
        try:
            return kind(raw)
        except ValueError as exc:
            raise ConfigError(f"[{self.name}] {key}: invalid value '{raw}' ({exc})", self.line_of(key))

    def get_float(self, key: str, default: float) -> float:
        raw = self._raw(key, default)
        if raw is None:
            return default
        value = self._convert(key, raw, float)
        if not math.isfinite(value):
            raise ConfigError(f"[{self.name}] {key} must be finite", self.line_of(key))
        return value

    def get_int(self, key: str, default: int) -> int:
        raw = self._raw(key, default)
        return default if raw is None else self._convert(key, raw, int)

    def get_bool(self, key: str, default: bool) -> bool:
        raw = self._raw(key, default)
        if raw is None:
            return default
        lowered = raw.strip().lower()
        if lowered not in configparser.ConfigParser.BOOLEAN_STATES:
            raise ConfigError(f"[{self.name}] {key}: expected a boolean, got '{raw}'", self.line_of(key))
        return configparser.ConfigParser.BOOLEAN_STATES[lowered]

    def get_str(self, key: str, default: str) -> str:
        raw = self._raw(key, default)
        return default if raw is None else raw.strip()

    def get_list(self, key: str, default: Tuple[str, ...]) -> Tuple[str, ...]:
        raw = self._raw(key, ", ".join(default))
        if raw is None:
            return default
        return tuple(item.strip() for item in raw.split(",") if item.strip())

    def finish(self) -> None:
        if self.section is None:
            return
        for key in self.section:
            if key not in self.used:
                raise ConfigError(f"unknown key '{key}' in [{self.name}]", self.line_of(key))


def _validated(builder, reader: _SectionReader):
    try:
        return builder()
    except ValueError as exc:
        raise ConfigError(f"[{reader.name}] {exc}", reader.line_of()) from exc


def _read_sweep(reader: _SectionReader) -> SweepSpec:
    base = Sim1dParams()
    field_name = reader.get_str("field", SweepField.MANIP_STIFFNESS.value)
    try:
        varied = SweepField(field_name)
    except ValueError:
        choices = ", ".join(f.value for f in SweepField)
        raise ConfigError(f"[sweep] field must be one of {choices}, got '{field_name}'", reader.line_of("field"))
    values = reader.get_list("values", ("0", "500", "2000"))
    if not values:
        raise ConfigError("[sweep] values must not be empty", reader.line_of("values"))
    numbers = tuple(reader._convert("values", v, float) for v in values)
    params = dict(
        m_ri=reader.get_float("m_ri", base.m_ri),
        b_ri=reader.get_float("b_ri", base.b_ri),
        k_ri=reader.get_float("k_ri", base.k_ri),
        m_t=reader.get_float("m_t", base.m_t),
        k_c=reader.get_float("k_c", base.k_c),
        b_c=reader.get_float("b_c", base.b_c),
        f_f=reader.get_float("f_f", base.f_f),
    )
    duration = reader.get_float("duration", 5.0)
    dt = reader.get_float("dt", 1e-3)
    approach = reader.get_float("approach_velocity", 0.5)
    return _validated(lambda: SweepSpec(Sim1dParams(**params), varied, numbers, duration, dt, approach), reader)


def _read_plant(reader: _SectionReader) -> PlantParams:
    d = PlantParams()
    half_angle = math.radians(reader.get_float("half_angle_deg", DEFAULT_HALF_ANGLE_DEG))
    mouth = reader.get_float("mouth_half_width", d.target_geometry.mouth_half_width)
    depth = reader.get_float("depth", mouth / math.tan(half_angle))
    tip_radius = reader.get_float("tip_radius", d.ee_geometry.tip_radius)
    tool_length = reader.get_float("tool_length", d.ee_geometry.tool_length)
    standoff = reader.get_float("standoff", d.target_geometry.standoff)
    mu = reader.get_float("mu_funnel", d.funnel_friction.mu)
    eps_v = reader.get_float("eps_v", d.funnel_friction.eps_v)

    def build() -> PlantParams:
        geometry = FunnelGeometry(half_angle, mouth, depth, tip_radius, tool_length, standoff)
        return PlantParams(
            ee_mass=reader.get_float("ee_mass", d.ee_mass),
            ee_inertia=reader.get_float("ee_inertia", d.ee_inertia),
            target_mass=reader.get_float("target_mass", d.target_mass),
            target_inertia=reader.get_float("target_inertia", d.target_inertia),
            contact_stiffness=reader.get_float("contact_stiffness", d.contact_stiffness),
            contact_damping=reader.get_float("contact_damping", d.contact_damping),
            funnel_friction=FrictionModel(mu, eps_v),
            mu_airbed=reader.get_float("mu_airbed", d.mu_airbed),
            airbed_radius=reader.get_float("airbed_radius", d.airbed_radius),
            gravity=reader.get_float("gravity", d.gravity),
            joint_friction_force=reader.get_float("joint_friction_force", d.joint_friction_force),
            joint_friction_torque=reader.get_float("joint_friction_torque", d.joint_friction_torque),
            ee_geometry=geometry,
            target_geometry=geometry,
        )
    return _validated(build, reader)


def _read_controller(reader: _SectionReader) -> ControllerConfig:
    d = ControllerConfig()
    imp, force, dec, sw = d.impedance, d.force, d.decoupling, d.switching

    def build() -> ControllerConfig:
        return ControllerConfig(
            impedance=ImpedanceGains(
                k_z=reader.get_float("k_z", imp.k_z), k_y=reader.get_float("k_y", imp.k_y),
                k_x=reader.get_float("k_x", imp.k_x), b_z=reader.get_float("b_z", imp.b_z),
                b_y=reader.get_float("b_y", imp.b_y), b_x=reader.get_float("b_x", imp.b_x)),
            force=ForceControllerGains(
                k_zp=reader.get_float("k_zp", force.k_zp), k_zi=reader.get_float("k_zi", force.k_zi),
                f_z_ref=force.f_z_ref,
                integral_limit=reader.get_float("integral_limit", force.integral_limit)),
            decoupling=DecouplingModel(
                m_hat=(reader.get_float("m_hat_z", dec.m_hat[0]), reader.get_float("m_hat_y", dec.m_hat[1]),
                       reader.get_float("m_hat_x", dec.m_hat[2])),
                m_d=(reader.get_float("m_d_z", dec.m_d[0]), reader.get_float("m_d_y", dec.m_d[1]),
                     reader.get_float("m_d_x", dec.m_d[2])),
                compensation_enabled=reader.get_bool("compensation", dec.compensation_enabled)),
            switching=ModeSwitching(
                force_threshold=reader.get_float("force_threshold", sw.force_threshold),
                torque_threshold=reader.get_float("torque_threshold", sw.torque_threshold),
                detect_ticks=reader.get_int("detect_ticks", sw.detect_ticks),
                loss_debounce_ticks=reader.get_int("loss_debounce_ticks", sw.loss_debounce_ticks)),
            chase_speed=reader.get_float("chase_speed", d.chase_speed),
        )
    return _validated(build, reader)


def _read_scenario(reader: _SectionReader, plant: PlantParams, controller: ControllerConfig,
                   seed: Optional[int]) -> ScenarioConfig:
    d = ScenarioConfig()

    def build() -> ScenarioConfig:
        config = ScenarioConfig(
            controller=controller,
            plant=plant,
            lateral_offset=reader.get_float("lateral_offset", d.lateral_offset),
            approach_distance=reader.get_float("approach_distance", d.approach_distance),
            duration=reader.get_float("duration", d.duration),
            control_period=reader.get_float("control_period", d.control_period),
            substeps=reader.get_int("substeps", d.substeps),
            sensor_noise_std=reader.get_float("sensor_noise_std", d.sensor_noise_std),
            sensor_latency_ticks=reader.get_int("sensor_latency_ticks", d.sensor_latency_ticks),
            seed=reader.get_int("seed", d.seed),
            tol_lateral=reader.get_float("tol_lateral", d.tol_lateral),
            tol_angle=reader.get_float("tol_angle", d.tol_angle),
        )
        return config if seed is None else replace(config, seed=seed)
    return _validated(build, reader)


def _read_method(reader: _SectionReader, name: str, base: ScenarioConfig) -> ScenarioConfig:
    method_name = reader.get_str("method", Method.FORCE_WITH_INERTIA_REDUCTION.value)
    try:
        method = Method(method_name)
    except ValueError:
        choices = ", ".join(m.value for m in Method)
        raise ConfigError(f"[{reader.name}] method must be one of {choices}, got '{method_name}'",
                          reader.line_of("method"))
    f_z_ref = reader.get_float("f_z_ref", base.controller.force.f_z_ref)
    k_xp = reader.get_float("k_xp", 0.0)
    k_yp = reader.get_float("k_yp", 0.0)
    return _validated(lambda: method_config(method, f_z_ref, k_xp, k_yp, name=name, base=base), reader)


def _read_threshold(reader: _SectionReader) -> ThresholdSpec:
    d = ThresholdSpec()
    return ThresholdSpec(
        methods=reader.get_list("methods", d.methods),
        f_lo=reader.get_float("f_lo", d.f_lo),
        f_hi=reader.get_float("f_hi", d.f_hi),
        resolution=reader.get_float("resolution", d.resolution),
    )


def parse_config(text: str, seed: Optional[int] = None) -> FloatSimConfig:
    """
    Build a FloatSimConfig from INI text.

    Args:
        text: File contents
        seed: Overrides [scenario] seed when given

    Raises:
        ConfigError: on syntax errors, unknown sections or keys, bad values
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None)) from exc
    lines = text.splitlines()

    known = {"sweep", "plant", "controller", "scenario", "threshold"}
    for section in parser.sections():
        if section not in known and not section.startswith(METHOD_PREFIX):
            raise ConfigError(f"unknown section [{section}]", _SectionReader(section, None, lines).line_of())

    def reader(name: str) -> _SectionReader:
        return _SectionReader(name, parser[name] if parser.has_section(name) else None, lines)

    readers = {name: reader(name) for name in known}
    config = FloatSimConfig()
    if parser.has_section("sweep"):
        config.sweep = _read_sweep(readers["sweep"])
    plant = _read_plant(readers["plant"])
    controller = _read_controller(readers["controller"])
    config.scenario = _read_scenario(readers["scenario"], plant, controller, seed)

    method_sections = [s for s in parser.sections() if s.startswith(METHOD_PREFIX)]
    if method_sections:
        config.methods = []
        for section in method_sections:
            method_reader = reader(section)
            config.methods.append(_read_method(method_reader, section[len(METHOD_PREFIX):], config.scenario))
            method_reader.finish()
    else:
        config.methods = comparison_configs(config.scenario)
    config.threshold = _read_threshold(readers["threshold"])

    for section_reader in readers.values():
        section_reader.finish()
    return config


def load_config(path: str, seed: Optional[int] = None) -> FloatSimConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, seed)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(config: FloatSimConfig) -> str:
    """Every section and key of the effective configuration, in loadable INI form."""
    sweep = config.sweep
    base = sweep.base
    sc = config.scenario
    plant = sc.plant
    geom = plant.target_geometry
    ctrl = sc.controller
    sections: List[Tuple[str, Dict[str, object]]] = [
        ("sweep", {
            "field": sweep.varied_field.value,
            "values": ", ".join(repr(v) for v in sweep.values),
            "duration": sweep.duration, "dt": sweep.dt, "approach_velocity": sweep.approach_velocity,
            "m_ri": base.m_ri, "b_ri": base.b_ri, "k_ri": base.k_ri, "m_t": base.m_t,
            "k_c": base.k_c, "b_c": base.b_c, "f_f": base.f_f,
        }),
        ("plant", {
            "ee_mass": plant.ee_mass, "ee_inertia": plant.ee_inertia,
            "target_mass": plant.target_mass, "target_inertia": plant.target_inertia,
            "contact_stiffness": plant.contact_stiffness, "contact_damping": plant.contact_damping,
            "mu_funnel": plant.funnel_friction.mu, "eps_v": plant.funnel_friction.eps_v,
            "mu_airbed": plant.mu_airbed, "airbed_radius": plant.airbed_radius, "gravity": plant.gravity,
            "joint_friction_force": plant.joint_friction_force,
            "joint_friction_torque": plant.joint_friction_torque,
            "half_angle_deg": round(math.degrees(geom.half_angle), 12), "mouth_half_width": geom.mouth_half_width,
            "depth": geom.depth, "tip_radius": geom.tip_radius, "tool_length": geom.tool_length,
            "standoff": geom.standoff,
        }),
        ("controller", {
            "k_z": ctrl.impedance.k_z, "k_y": ctrl.impedance.k_y, "k_x": ctrl.impedance.k_x,
            "b_z": ctrl.impedance.b_z, "b_y": ctrl.impedance.b_y, "b_x": ctrl.impedance.b_x,
            "k_zp": ctrl.force.k_zp, "k_zi": ctrl.force.k_zi, "integral_limit": ctrl.force.integral_limit,
            "m_hat_z": ctrl.decoupling.m_hat[0], "m_hat_y": ctrl.decoupling.m_hat[1],
            "m_hat_x": ctrl.decoupling.m_hat[2],
            "m_d_z": ctrl.decoupling.m_d[0], "m_d_y": ctrl.decoupling.m_d[1], "m_d_x": ctrl.decoupling.m_d[2],
            "compensation": ctrl.decoupling.compensation_enabled,
            "force_threshold": ctrl.switching.force_threshold,
            "torque_threshold": ctrl.switching.torque_threshold,
            "detect_ticks": ctrl.switching.detect_ticks,
            "loss_debounce_ticks": ctrl.switching.loss_debounce_ticks,
            "chase_speed": ctrl.chase_speed,
        }),
        ("scenario", {
            "lateral_offset": sc.lateral_offset, "approach_distance": sc.approach_distance,
            "duration": sc.duration, "control_period": sc.control_period, "substeps": sc.substeps,
            "sensor_noise_std": sc.sensor_noise_std, "sensor_latency_ticks": sc.sensor_latency_ticks,
            "seed": sc.seed, "tol_lateral": sc.tol_lateral, "tol_angle": sc.tol_angle,
        }),
    ]
    for run in config.methods:
        sections.append((METHOD_PREFIX + run.name, {
            "method": run.method.value, "f_z_ref": run.controller.force.f_z_ref,
            "k_xp": run.controller.inertia_reduction.k_xp, "k_yp": run.controller.inertia_reduction.k_yp,
        }))
    sections.append(("threshold", {
        "methods": ", ".join(config.threshold.methods), "f_lo": config.threshold.f_lo,
        "f_hi": config.threshold.f_hi, "resolution": config.threshold.resolution,
    }))

    out = []
    for name, values in sections:
        out.append(f"[{name}]")
        out.extend(f"{key} = {_fmt(value)}" for key, value in values.items())
        out.append("")
    return "\n".join(out)
