"""Fast-light pulse detection simulator.

Monte Carlo model of spatially patterned Gaussian pulses propagating
through an anomalous-dispersion gain medium, amplified with
phase-insensitive quantum noise, detected by a gated intensified camera,
and analyzed for the earliest gate delay at which the spatial pattern
rises above the noise floor.
"""

from .amplifier import PhotonMoments, amplify_moments, attenuate_moments
from .analysis import (
    DetectionReport,
    RegionSpec,
    VisibilityTrace,
    compare,
    detection_time,
    integrated_snr,
    visibility_trace,
)
from .config import ExperimentConfig, build_config, load_config
from .detector import DetectorSpec, FrameStack, gate_sweep, load_stack, save_stack
from .errors import ConfigError, FastLightError, SimulationError
from .medium import (
    GainLine,
    MediumSpec,
    calibrate_doublet,
    dispersion_report,
    group_delay,
    group_index,
    propagate,
    transfer_function,
)
from .pulse import SampledPulse, TimeGrid, make_gaussian_pulse
from .runner import run_channel, run_ensemble, sweep_parameter
from .scene import SceneSpec, StripeSpec, beam_pattern, expected_frame

__version__ = "0.1.0"

__all__ = [
    "PhotonMoments",
    "amplify_moments",
    "attenuate_moments",
    "DetectionReport",
    "RegionSpec",
    "VisibilityTrace",
    "compare",
    "detection_time",
    "integrated_snr",
    "visibility_trace",
    "ExperimentConfig",
    "build_config",
    "load_config",
    "DetectorSpec",
    "FrameStack",
    "gate_sweep",
    "load_stack",
    "save_stack",
    "ConfigError",
    "FastLightError",
    "SimulationError",
    "GainLine",
    "MediumSpec",
    "calibrate_doublet",
    "dispersion_report",
    "group_delay",
    "group_index",
    "propagate",
    "transfer_function",
    "SampledPulse",
    "TimeGrid",
    "make_gaussian_pulse",
    "run_channel",
    "run_ensemble",
    "sweep_parameter",
    "SceneSpec",
    "StripeSpec",
    "beam_pattern",
    "expected_frame",
    "__version__",
]
