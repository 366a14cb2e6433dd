"""Gated intensified-camera model.

Per pixel and per gate, the detected count is built from the expected
photon number by (in physical order): phase-insensitive amplification of
the shot-noise-limited input, quantum-efficiency thinning at the moment
level, one Gaussian draw for signal plus additive Gaussian dark noise,
conversion to ADU, clamping at zero and rounding.  Sweeping the gate
delay yields a FrameStack covering the pulse arrival.

Frames use independent RNG streams derived from (seed, frame index), so a
sweep is reproducible and frame order independent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .amplifier import gain_moment_maps
from .pulse import SampledPulse, gate_integrals
from .scene import ExpectedFrame, SceneSpec, beam_pattern


@dataclass(frozen=True)
class DetectorSpec:
    efficiency_eta: float
    dark_mean: float  # counts / pixel / gate
    dark_std: float
    gate_width: float  # seconds
    threshold_D: float = 0.0  # analysis-side detector threshold
    adu_gain: float = 1.0  # counts per detected photon

    def __post_init__(self):
        if not 0.0 < self.efficiency_eta <= 1.0:
            raise ValueError("efficiency must be in (0, 1]")
        if self.gate_width <= 0:
            raise ValueError("gate width must be positive")
        if self.dark_std < 0 or self.dark_mean < 0:
            raise ValueError("dark noise parameters must be >= 0")
        if self.threshold_D < 0:
            raise ValueError("threshold must be >= 0")
        if self.adu_gain <= 0:
            raise ValueError("adu_gain must be positive")


@dataclass(frozen=True)
class ImageFrame:
    counts: np.ndarray = field(repr=False)  # integer counts, >= 0
    gate_delay: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.counts)
        if np.any(c < 0):
            raise ValueError("counts must be >= 0")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)


@dataclass(frozen=True)
class FrameStack:
    """Gate-delay sweep: counts[i] taken at delays[i]; uniform delay step."""

    counts: np.ndarray = field(repr=False)  # (n_frames, height, width)
    delays: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.delays, dtype=float)
        if d.ndim != 1 or len(d) != self.counts.shape[0]:
            raise ValueError("delays must match the number of frames")
        _check_uniform(d)
        d.setflags(write=False)
        c = np.asarray(self.counts)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "delays", d)

    def __len__(self) -> int:
        return self.counts.shape[0]

    def frame(self, i: int) -> ImageFrame:
        return ImageFrame(self.counts[i], float(self.delays[i]))


def _check_uniform(delays: np.ndarray) -> None:
    if len(delays) < 2:
        return
    steps = np.diff(delays)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ValueError("gate delays must be strictly increasing and uniform")


def frame_rng(seed, frame_index: int) -> np.random.Generator:
    """Independent stream for one frame, derived from (seed, frame index)."""
    if isinstance(seed, (int, np.integer)):
        entropy = [int(seed), frame_index]
    else:
        entropy = [*map(int, seed), frame_index]
    return np.random.default_rng(entropy)


def detection_moments(
    expected: np.ndarray,
    gain: float,
    det: DetectorSpec,
    excess_uses_mean: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Mean and variance of the detected photoelectron number per pixel,
    including amplifier noise, efficiency thinning and dark noise."""
    mean_a, var_a = gain_moment_maps(
        np.asarray(expected, dtype=float), gain, excess_uses_mean
    )
    eta = det.efficiency_eta
    mean = eta * mean_a + det.dark_mean
    var = eta**2 * var_a + eta * (1.0 - eta) * mean_a + det.dark_std**2
    return mean, var


def sample_frame(
    mean: np.ndarray, var: np.ndarray, det: DetectorSpec, rng: np.random.Generator
) -> np.ndarray:
    draw = rng.normal(mean, np.sqrt(var))
    return np.rint(np.clip(det.adu_gain * draw, 0.0, None)).astype(np.int64)


def expose(
    expected: ExpectedFrame,
    amplifier_gain: float,
    det: DetectorSpec,
    rng: np.random.Generator,
) -> ImageFrame:
    """One gated exposure of an expected photon map."""
    mean, var = detection_moments(expected.counts, amplifier_gain, det)
    return ImageFrame(sample_frame(mean, var, det, rng), expected.gate_delay)


def gate_gains(
    input_pulse: SampledPulse,
    output_pulse: SampledPulse,
    delays: np.ndarray,
    gate_width: float,
) -> np.ndarray:
    """Energy-weighted gain per gate window, G = out/in photons in gate.

    Gates with negligible input energy fall back to unity gain: the gain
    profile is only defined where the input pulse carries intensity.
    """
    e_in = gate_integrals(input_pulse, delays, gate_width)
    e_out = gate_integrals(output_pulse, delays, gate_width)
    floor = 1e-12 * max(float(np.max(e_in)), 1e-300)
    g = np.ones_like(e_in)
    np.divide(e_out, e_in, out=g, where=e_in > floor)
    return g


def gate_sweep(
    scene: SceneSpec,
    pulse: SampledPulse,
    g_per_gate: np.ndarray,
    det: DetectorSpec,
    delays: np.ndarray,
    seed,
    excess_uses_mean: bool = True,
) -> FrameStack:
    """Sweep the gate over the pulse; one exposure per delay.

    ``g_per_gate`` is the amplifier power gain for each gate window (see
    :func:`gate_gains`); pass all ones for the reference channel.
    Deterministic given ``seed``; frames use independent substreams.
    """
    delays = np.asarray(delays, dtype=float)
    _check_uniform(delays)
    g_per_gate = np.asarray(g_per_gate, dtype=float)
    if g_per_gate.shape != delays.shape:
        raise ValueError("per-gate gains must match the delay sweep")
    weights = beam_pattern(scene)
    photons = gate_integrals(pulse, delays, det.gate_width)
    frames = np.empty(
        (len(delays), scene.grid.height_px, scene.grid.width_px), dtype=np.int64
    )
    for i, (delay, g) in enumerate(zip(delays, g_per_gate)):
        mean, var = detection_moments(weights * photons[i], g, det, excess_uses_mean)
        frames[i] = sample_frame(mean, var, det, frame_rng(seed, i))
    return FrameStack(
        counts=frames,
        delays=delays,
        meta={"seed": seed, "gate_width": det.gate_width},
    )


def save_stack(stack: FrameStack, path) -> None:
    """Persist a FrameStack: NPZ with row-major count arrays and a JSON header.

    Layout (documented for external consumers):
      - ``header``: JSON string with grid dims, delays start/step/count,
        gate width, seed and any extra metadata.
      - ``delays``: float64 (n_frames,) gate start times, seconds.
      - ``counts``: int64 (n_frames, height, width) row-major pixel counts.
    """
    header = {
        "n_frames": int(len(stack)),
        "height_px": int(stack.counts.shape[1]),
        "width_px": int(stack.counts.shape[2]),
        "delay_start": float(stack.delays[0]),
        "delay_step": float(stack.delays[1] - stack.delays[0]) if len(stack) > 1 else 0.0,
        **{k: v for k, v in stack.meta.items() if _json_safe(v)},
    }
    np.savez_compressed(
        path,
        header=np.array(json.dumps(header, sort_keys=True)),
        delays=stack.delays,
        counts=stack.counts,
    )


def load_stack(path) -> FrameStack:
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        counts = data["counts"]
        delays = data["delays"]
    meta = {
        k: v
        for k, v in header.items()
        if k not in ("n_frames", "height_px", "width_px", "delay_start", "delay_step")
    }
    return FrameStack(counts=counts, delays=delays, meta=meta)


def _json_safe(v) -> bool:
    try:
        json.dumps(v)
        return True
    except TypeError:
        return False
