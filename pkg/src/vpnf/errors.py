"""Exception types shared across the package."""


class VpnfError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(VpnfError, ValueError):
    """Invalid configuration, shapes, or arguments."""


class SimulationError(VpnfError, RuntimeError):
    """Physically impossible or degenerate simulation request."""


class MetricError(VpnfError, ValueError):
    """Metric undefined for the given inputs (e.g. all-zero reference)."""


class TrainingDivergedError(VpnfError, RuntimeError):
    """Loss became non-finite; carries a diagnostic state dump."""

    def __init__(self, message: str, state: dict | None = None):
        super().__init__(message)
        self.state = dict(state or {})
