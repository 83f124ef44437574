"""Exception types shared across the simulator."""


class GridSyncError(Exception):
    """Base class for every error raised by gridsync."""


class ConfigError(GridSyncError, ValueError):
    """A configuration value violates a documented constraint."""


class AliasingError(ConfigError):
    """A frequency sits at or above the Nyquist limit of the time base."""


class NonFiniteInputError(GridSyncError, ValueError):
    """A NaN or infinity reached a control block."""


class ContractError(GridSyncError, ValueError):
    """A function was called with arguments outside its precondition."""


class NotReadyError(GridSyncError):
    """The PLL was stepped before the frequency detector produced an estimate."""


class DivergenceError(GridSyncError):
    """The PLL frequency command stayed on its clamp for too long."""


class NoCrossingError(GridSyncError):
    """No validated zero crossing pair was seen before the configured deadline."""


class SpectrumError(GridSyncError, ValueError):
    """A sequence cannot be trimmed to a whole number of fundamental periods."""


class ScenarioFailure(GridSyncError):
    """A scenario run aborted; carries the simulated time of the failure."""

    def __init__(self, message, time_s=None):
        super().__init__(message)
        self.time_s = time_s

    def __str__(self):
        msg = super().__str__()
        if self.time_s is None:
            return msg
        return f"{msg} (at t={self.time_s:.6f} s)"
