"""Exception hierarchy shared by the simulator and the CLI."""


class SimulationError(Exception):
    """Base class for all simulator errors."""


class ConfigError(SimulationError):
    """A scenario parameter is missing, unknown, or violates an invariant."""


class TopologyError(SimulationError):
    """No connected topology could be produced within the retry budget."""


class SchedulingError(SimulationError):
    """An event was scheduled in the simulated past."""


class UndeliverableError(SimulationError):
    """Unicast attempted between non-adjacent nodes; signals a protocol bug."""


class NoRouteError(SimulationError):
    """A route was required but none exists (or the candidate list is empty)."""


class UndefinedMetricError(SimulationError):
    """A metric's denominator is empty (nothing sent, nothing delivered)."""
