"""Exception types shared across the simulator."""


class ConfigurationError(ValueError):
    """A config value is out of range, unknown, or jointly infeasible."""


class MeasurementError(ValueError):
    """A link measurement was requested for degenerate geometry."""
