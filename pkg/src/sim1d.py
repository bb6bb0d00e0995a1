"""
One-degree-of-freedom manipulator pressing on a free-floating target.

The manipulator (mass m_ri) is held by a passive spring-damper (k_ri, b_ri)
about its commanded approach motion x_ref(t) = v_ref * t. The target (mass m_t)
floats, resisted only by a Coulomb force of magnitude f_f. Contact is a
linear penalty F_c = -k_c * y - b_c * y_dot on the relative penetration
y = x_t - x_i, acting with +F_c on the target and -F_c on the manipulator.
F_c is not clamped: negative values mark separation.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import expm

from .errors import DivergenceError, check_divergence

LOGGER = logging.getLogger(__name__)

TRACE_COLUMNS = ["t", "x_i", "v_i", "x_t", "v_t", "F_c"]


@dataclass(frozen=True)
class Sim1dParams:
    """
    Parameters of the coupled manipulator/target model.

    Args:
        m_ri: Manipulator mass [kg]
        b_ri: Manipulator damping [N·s/m]
        k_ri: Manipulator stiffness [N/m]
        m_t: Target mass [kg]
        k_c: Contact stiffness [N/m]
        b_c: Contact damping [N·s/m]
        f_f: Coulomb friction magnitude on the target [N]
        v_ref: Commanded approach velocity the arm compliance acts about [m/s]
    """

    m_ri: float = 7.5
    b_ri: float = 100.0
    k_ri: float = 0.0
    m_t: float = 15.0
    k_c: float = 250.0
    b_c: float = 20.0
    f_f: float = 0.0
    v_ref: float = 0.0

    def __post_init__(self):
        if not (self.m_ri > 0 and self.m_t > 0):
            raise ValueError("m_ri and m_t must be strictly positive")
        if not self.k_c > 0:
            raise ValueError("k_c must be strictly positive")
        for name in ("b_ri", "k_ri", "b_c", "f_f"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")
        if not math.isfinite(self.v_ref):
            raise ValueError("v_ref must be finite")


@dataclass(frozen=True)
class Sim1dState:
    x_i: float = 0.0
    v_i: float = 0.0
    x_t: float = 0.0
    v_t: float = 0.0
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x_i, self.v_i, self.x_t, self.v_t])

    @classmethod
    def from_array(cls, values: np.ndarray, t: float) -> "Sim1dState":
        return cls(float(values[0]), float(values[1]), float(values[2]), float(values[3]), t)


class SweepField(Enum):
    MASS_RATIO = "mass_ratio"
    MANIP_STIFFNESS = "k_ri"
    MANIP_DAMPING = "b_ri"


@dataclass(frozen=True)
class SweepSpec:
    """
    One parameter study: a base parameter set and the values of one field.

    For MASS_RATIO a value r means m_ri / m_t = r at fixed m_ri.
    """

    base: Sim1dParams
    varied_field: SweepField
    values: Tuple[float, ...]
    duration: float = 5.0
    dt: float = 1e-3
    approach_velocity: float = 0.5

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if not values:
            raise ValueError("values must not be empty")
        steps = np.diff(values)
        if len(values) > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("values must be strictly monotone")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.duration >= 10 * self.dt:
            raise ValueError("duration must be at least 10 * dt")

    def params_for(self, value: float) -> Sim1dParams:
        """Base parameters with the varied field set and v_ref set to the approach velocity."""
        params = replace(self.base, v_ref=self.approach_velocity)
        if self.varied_field is SweepField.MASS_RATIO:
            return replace(params, m_t=params.m_ri / value)
        if self.varied_field is SweepField.MANIP_STIFFNESS:
            return replace(params, k_ri=value)
        return replace(params, b_ri=value)

    def initial_state(self) -> Sim1dState:
        # target at rest, y(0) = 0; the penetration rate follows from the bodies
        return Sim1dState(x_i=0.0, v_i=self.approach_velocity, x_t=0.0, v_t=0.0, t=0.0)


def contact_force_1d(y: float, y_dot: float, k_c: float, b_c: float) -> float:
    """Penalty contact force for penetration y and penetration rate y_dot."""
    return -k_c * y - b_c * y_dot


def _friction_force(f_c: float, v_t: float, f_f: float) -> float:
    if v_t != 0.0:
        return math.copysign(f_f, v_t)
    if abs(f_c) <= f_f:
        # static hold
        return f_c
    return math.copysign(f_f, f_c)


def _derivative(t: float, x: np.ndarray, params: Sim1dParams) -> np.ndarray:
    x_i, v_i, x_t, v_t = x
    f_c = contact_force_1d(x_t - x_i, v_t - v_i, params.k_c, params.b_c)
    a_i = (-f_c - params.b_ri * (v_i - params.v_ref) - params.k_ri * (x_i - params.v_ref * t)) / params.m_ri
    a_t = (f_c - _friction_force(f_c, v_t, params.f_f)) / params.m_t
    return np.array([v_i, a_i, v_t, a_t])


def derivatives_1d(state: Sim1dState, params: Sim1dParams) -> Tuple[float, float, float, float]:
    """Time derivative (v_i, a_i, v_t, a_t) of the coupled model."""
    return tuple(float(v) for v in _derivative(state.t, state.as_array(), params))


def contact_force_of(state: Sim1dState, params: Sim1dParams) -> float:
    return contact_force_1d(state.x_t - state.x_i, state.v_t - state.v_i, params.k_c, params.b_c)


def _rk4(t: float, x: np.ndarray, dt: float, params: Sim1dParams) -> np.ndarray:
    k1 = dt * _derivative(t, x, params)
    k2 = dt * _derivative(t + 0.5 * dt, x + 0.5 * k1, params)
    k3 = dt * _derivative(t + 0.5 * dt, x + 0.5 * k2, params)
    k4 = dt * _derivative(t + dt, x + k3, params)
    return x + (k1 + 2 * k2 + 2 * k3 + k4) / 6.0


def step_1dof(state: Sim1dState, params: Sim1dParams, dt: float, tick: int = 0) -> Sim1dState:
    """
    Advance the model by one classical Runge-Kutta step.

    Args:
        state: Current state
        params: Model parameters
        dt: Step size [s]
        tick: Step index, reported if the step diverges

    Returns:
        Sim1dState at t + dt
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = _rk4(state.t, state.as_array(), dt, params)
    check_divergence(x, tick, state.t + dt)
    return Sim1dState.from_array(x, state.t + dt)


def simulate_1d(params: Sim1dParams, initial: Sim1dState, duration: float, dt: float) -> pd.DataFrame:
    """Integrate from the initial state and return the sampled trace (including t = 0)."""
    n_steps = int(round(duration / dt))
    rows = []
    state = initial
    rows.append((state.t, state.x_i, state.v_i, state.x_t, state.v_t, contact_force_of(state, params)))
    for tick in range(1, n_steps + 1):
        state = step_1dof(state, params, dt, tick)
        rows.append((state.t, state.x_i, state.v_i, state.x_t, state.v_t, contact_force_of(state, params)))
    return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def _run_point(spec: SweepSpec, value: float) -> Tuple[float, pd.DataFrame]:
    LOGGER.info("sweep %s = %g", spec.varied_field.value, value)
    try:
        trace = simulate_1d(spec.params_for(value), spec.initial_state(), spec.duration, spec.dt)
    except DivergenceError as exc:
        raise exc.tagged(value) from exc
    return value, trace


def run_sweep(spec: SweepSpec, max_workers: int = 0) -> List[Tuple[float, pd.DataFrame]]:
    """
    Run one trace per varied value, everything else held at the base parameters.

    Args:
        spec: The sweep to run
        max_workers: Thread cap for independent values; 0 runs sequentially

    Returns:
        (value, trace) pairs in the order of spec.values
    """
    if max_workers > 0:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(lambda v: _run_point(spec, v), spec.values))
    return [_run_point(spec, value) for value in spec.values]


def detect_contact_break_1d(forces: Sequence[float], dt: float = 1.0,
                            t0: float = 0.0) -> List[Tuple[float, float]]:
    """
    Maximal intervals where the contact force is tensile (F_c < 0).

    Each interval is reported as (time of first negative sample, time of last
    negative sample) for samples spaced dt apart starting at t0.
    """
    if len(forces) == 0:
        raise ValueError("force trace must not be empty")
    intervals = []
    start = None
    for k, f in enumerate(forces):
        if f < 0:
            if start is None:
                start = k
        elif start is not None:
            intervals.append((t0 + start * dt, t0 + (k - 1) * dt))
            start = None
    if start is not None:
        intervals.append((t0 + start * dt, t0 + (len(forces) - 1) * dt))
    return intervals


def contact_state_matrix(params: Sim1dParams) -> np.ndarray:
    """Homogeneous 4x4 system matrix of [x_i, v_i, x_t, v_t] with friction off."""
    k_c, b_c = params.k_c, params.b_c
    m_i, m_t = params.m_ri, params.m_t
    return np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-(k_c + params.k_ri) / m_i, -(b_c + params.b_ri) / m_i, k_c / m_i, b_c / m_i],
        [0.0, 0.0, 0.0, 1.0],
        [k_c / m_t, b_c / m_t, -k_c / m_t, -b_c / m_t],
    ])


def modal_log_decrement(params: Sim1dParams) -> float:
    """
    Log-decrement 2*pi*|Re|/|Im| of the oscillatory eigenpair.

    The most oscillatory pair (largest imaginary part) is used. Returns +inf
    when the contact is overdamped.
    """
    eigenvalues = np.linalg.eigvals(contact_state_matrix(params))
    oscillatory = [lam for lam in eigenvalues if abs(lam.imag) > 1e-9]
    if not oscillatory:
        return math.inf
    lam = max(oscillatory, key=lambda v: abs(v.imag))
    return 2.0 * math.pi * abs(lam.real) / abs(lam.imag)


def peak_ratio_decrement(forces: Sequence[float]) -> float:
    """ln(p1 / p2) of the first two positive local maxima of the force trace, or nan."""
    f = np.asarray(forces, dtype=float)
    if f.size < 3:
        return math.nan
    interior = (f[1:-1] > f[:-2]) & (f[1:-1] >= f[2:]) & (f[1:-1] > 0)
    peaks = f[1:-1][interior]
    if peaks.size < 2:
        return math.nan
    return math.log(peaks[0] / peaks[1])


def oracle_trajectory(params: Sim1dParams, initial: Sim1dState, times: Sequence[float]) -> pd.DataFrame:
    """
    Closed-form trajectory of the frictionless model through the matrix exponential.

    The augmented state [x_i, v_i, x_t, v_t, t, 1] makes the reference motion
    forcing part of a time-invariant linear system.
    """
    if params.f_f != 0.0:
        raise ValueError("the closed-form oracle needs f_f = 0")
    a = np.zeros((6, 6))
    a[:4, :4] = contact_state_matrix(params)
    a[1, 4] = params.k_ri * params.v_ref / params.m_ri
    a[1, 5] = params.b_ri * params.v_ref / params.m_ri
    a[4, 5] = 1.0
    z0 = np.array([initial.x_i, initial.v_i, initial.x_t, initial.v_t, initial.t, 1.0])
    rows = []
    for t in times:
        z = expm(a * (t - initial.t)) @ z0
        state = Sim1dState.from_array(z[:4], t)
        rows.append((t, state.x_i, state.v_i, state.x_t, state.v_t, contact_force_of(state, params)))
    return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def mechanical_energy(state: Sim1dState, params: Sim1dParams) -> float:
    """Kinetic energy of both bodies plus the contact spring energy."""
    y = state.x_t - state.x_i
    return 0.5 * params.m_ri * state.v_i ** 2 + 0.5 * params.m_t * state.v_t ** 2 + 0.5 * params.k_c * y ** 2


@dataclass
class SweepSummary:
    """Per-value scalars of a finished sweep, in the order of the sweep values."""

    field_name: str
    rows: List[dict] = field(default_factory=list)

    @classmethod
    def from_results(cls, spec: SweepSpec, results: List[Tuple[float, pd.DataFrame]]) -> "SweepSummary":
        summary = cls(spec.varied_field.value)
        for value, trace in results:
            forces = trace["F_c"].to_numpy()
            breaks = detect_contact_break_1d(forces, spec.dt)
            summary.rows.append({
                "value": value,
                "peak_F_c": float(forces.max()),
                "min_F_c": float(forces.min()),
                "break_intervals": ";".join(f"{a:.9e}:{b:.9e}" for a, b in breaks),
                "log_decrement": modal_log_decrement(spec.params_for(value)),
                "peak_ratio_decrement": peak_ratio_decrement(forces),
            })
        return summary

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=["value", "peak_F_c", "min_F_c", "break_intervals",
                                                "log_decrement", "peak_ratio_decrement"])
