"""Discrete-time simulator of a single-phase grid-tie synchronization pipeline.

Modules:

- ``signals``  seeded reference waveforms with frequency/phase step events
- ``dsp``      low-pass filters, moving average, PID, NCO
- ``zcd``      hysteresis zero-crossing frequency detector
- ``pll``      product-detector PLL with ZCD feed-forward
- ``inverter`` SPWM / square-wave bridge, output filter, harmonic spectra
- ``harness``  scenarios, the simulation loop, metrics, CSV/report output
"""

from .errors import (
    AliasingError,
    ConfigError,
    ContractError,
    DivergenceError,
    GridSyncError,
    NoCrossingError,
    NonFiniteInputError,
    NotReadyError,
    ScenarioFailure,
    SpectrumError,
)
from .signals import Harmonic, SignalSpec, StepEvent, TimeBase, generate, phase_of
from .dsp import LowPassFilter, MovingAverage, Nco, PidController
from .zcd import FrequencyEstimate, HysteresisBand, ZeroCrossingDetector
from .pll import LoopFilterSpec, PhaseLockedLoop, PidSpec, PllConfig, measure_phase_error, phase_detector
from .inverter import SpectrumResult, SpwmConfig, compare_spwm_square, spectrum, spwm_step, square_step
from .harness import Metrics, OscillatorSpec, Scenario, ZcdSpec, run_scenario, settling_time, sweep
from .config import load_scenario

__version__ = "0.1.0"

__all__ = [
    "AliasingError",
    "ConfigError",
    "ContractError",
    "DivergenceError",
    "GridSyncError",
    "NoCrossingError",
    "NonFiniteInputError",
    "NotReadyError",
    "ScenarioFailure",
    "SpectrumError",
    "Harmonic",
    "SignalSpec",
    "StepEvent",
    "TimeBase",
    "generate",
    "phase_of",
    "LowPassFilter",
    "MovingAverage",
    "Nco",
    "PidController",
    "FrequencyEstimate",
    "HysteresisBand",
    "ZeroCrossingDetector",
    "LoopFilterSpec",
    "PhaseLockedLoop",
    "PidSpec",
    "PllConfig",
    "measure_phase_error",
    "phase_detector",
    "SpectrumResult",
    "SpwmConfig",
    "compare_spwm_square",
    "spectrum",
    "spwm_step",
    "square_step",
    "Metrics",
    "OscillatorSpec",
    "Scenario",
    "ZcdSpec",
    "run_scenario",
    "settling_time",
    "sweep",
    "load_scenario",
]
