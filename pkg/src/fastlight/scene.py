"""Spatial beam pattern and per-gate expected photon maps.

The space-time intensity is separable, I(x, y, t) = w(x, y) * f(t): a
normalized 2-D Gaussian beam cross section carrying a dark horizontal
stripe, multiplied by the instantaneous pulse intensity.  Expected counts
for one camera gate are the pixel weights times the photons inside the
gate window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pulse import SampledPulse, gate_integral


@dataclass(frozen=True)
class PixelGrid:
    width_px: int
    height_px: int
    pixel_pitch: float = 1.0

    def __post_init__(self):
        if self.width_px < 16 or self.height_px < 16:
            raise ValueError("pixel grid must be at least 16x16")


@dataclass(frozen=True)
class StripeSpec:
    """Horizontal dark stripe: rows within width/2 of center_row are
    attenuated by ``contrast`` (1 = fully dark)."""

    center_row: float
    width: float
    contrast: float
    orientation: str = "horizontal"

    def __post_init__(self):
        if not 0.0 <= self.contrast <= 1.0:
            raise ValueError("stripe contrast must be in [0, 1]")
        if self.orientation != "horizontal":
            raise ValueError("only horizontal stripes are supported")
        if self.width < 0:
            raise ValueError("stripe width must be >= 0")


@dataclass(frozen=True)
class SceneSpec:
    grid: PixelGrid
    beam_waist: float  # 1/e^2 intensity radius, pixels
    beam_center: tuple  # (x, y) pixels
    stripe: StripeSpec
    edge_smoothing: bool = True  # one-pixel linear ramp on stripe edges

    def __post_init__(self):
        lo = self.stripe.center_row - self.stripe.width / 2.0
        hi = self.stripe.center_row + self.stripe.width / 2.0
        if lo < 0 or hi > self.grid.height_px - 1:
            raise ValueError("stripe must lie entirely inside the pixel grid")
        if self.beam_waist <= 0:
            raise ValueError("beam waist must be positive")


@dataclass(frozen=True)
class ExpectedFrame:
    """Per-pixel expected photon count for one gate window."""

    counts: np.ndarray = field(repr=False)
    gate_delay: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=float)
        if np.any(c < 0):
            raise ValueError("expected counts must be >= 0")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> float:
        return float(np.sum(self.counts))


def stripe_transmission(scene: SceneSpec) -> np.ndarray:
    """Per-row transmission of the stripe mask (1 outside, 1-contrast inside)."""
    rows = np.arange(scene.grid.height_px, dtype=float)
    half = scene.stripe.width / 2.0
    # signed distance into the stripe interior, positive inside
    depth = half - np.abs(rows - scene.stripe.center_row)
    if scene.edge_smoothing:
        coverage = np.clip(depth + 0.5, 0.0, 1.0)
    else:
        coverage = (depth >= 0).astype(float)
    return 1.0 - scene.stripe.contrast * coverage


def beam_pattern(scene: SceneSpec) -> np.ndarray:
    """Normalized per-pixel weights: Gaussian beam times stripe mask, sum 1."""
    g = scene.grid
    x = np.arange(g.width_px, dtype=float)
    y = np.arange(g.height_px, dtype=float)
    cx, cy = scene.beam_center
    r2 = (x[None, :] - cx) ** 2 + (y[:, None] - cy) ** 2
    gauss = np.exp(-2.0 * r2 / scene.beam_waist**2)
    weights = gauss * stripe_transmission(scene)[:, None]
    weights /= np.sum(weights)
    return weights


def expected_frame(
    scene: SceneSpec,
    pulse: SampledPulse,
    gate_start: float,
    gate_width: float,
    weights: np.ndarray | None = None,
) -> ExpectedFrame:
    """Expected photon map for one gate: weights * photons inside the gate.

    ``weights`` may be passed in to amortize the beam-pattern computation
    over a sweep; it must come from :func:`beam_pattern` on the same scene.
    """
    grid = pulse.grid
    if gate_start < grid.t_start or gate_start + gate_width > grid.t_end:
        raise ValueError("gate window outside the pulse time grid")
    if weights is None:
        weights = beam_pattern(scene)
    photons = gate_integral(pulse, gate_start, gate_start + gate_width)
    return ExpectedFrame(counts=weights * photons, gate_delay=gate_start)
