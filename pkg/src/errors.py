from typing import Optional, Sequence


class FloatSimError(Exception):
    """Base class for every error raised by the simulation suite."""


class ConfigError(FloatSimError):
    """A configuration file or value is invalid."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GeometryError(FloatSimError):
    """Funnel poses are degenerate (coincident within 1e-9 m)."""


class BracketError(FloatSimError):
    """The sliding-threshold search was given a bracket that does not bracket."""


class DivergenceError(FloatSimError):
    """
    A state magnitude exceeded the divergence limit.

    Args:
        message: Human-readable description
        tick: Step or control-tick index at which the limit was crossed
        time: Simulation time of that step
        state: Last state vector before the check fired
        parameter_value: Sweep value the run belonged to, if any
    """

    def __init__(self, message: str, tick: int = -1, time: float = float("nan"),
                 state: Sequence[float] = (), parameter_value: Optional[float] = None):
        self.tick = tick
        self.time = time
        self.state = tuple(state)
        self.parameter_value = parameter_value
        super().__init__(message)

    def tagged(self, parameter_value: float) -> "DivergenceError":
        """Return a copy carrying the sweep value that produced it."""
        return DivergenceError(
            f"{self.args[0]} (sweep value {parameter_value:g})",
            tick=self.tick, time=self.time, state=self.state,
            parameter_value=parameter_value,
        )

    def __str__(self) -> str:
        return f"{self.args[0]} at tick {self.tick}, t={self.time:.6g}"


DIVERGENCE_LIMIT = 1e6


def check_divergence(state: Sequence[float], tick: int, time: float) -> None:
    """Raise DivergenceError if any state entry is non-finite or beyond the limit."""
    for value in state:
        if not abs(value) <= DIVERGENCE_LIMIT:
            raise DivergenceError("state magnitude exceeded 1e6", tick=tick, time=time, state=state)
