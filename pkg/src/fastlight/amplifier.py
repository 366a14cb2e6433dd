"""Phase-insensitive amplifier photon statistics.

Moment transformation for power gain G >= 1:

    mean_out = G * mean_in + (G - 1)
    var_out  = G^2 * var_in + G * (G - 1) * (mean_in + 1)

The added (G - 1) photons per mode are the amplified-vacuum contribution;
the excess-noise operator is taken as vacuum (minimal added noise).  A
time-resolved gain profile extracted from intensity ratios can dip below
unity on the trailing edge of an advanced pulse; those samples are treated
as attenuation (beam-splitter thinning), which preserves shot-limited
statistics and adds no spontaneous photons.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GainBelowUnityError, SizeMismatchError


@dataclass(frozen=True)
class PhotonMoments:
    mean: float
    variance: float

    def __post_init__(self):
        if self.mean < 0 or self.variance < 0:
            raise ValueError("photon moments must be non-negative")

    @classmethod
    def shot_limited(cls, mean: float) -> "PhotonMoments":
        return cls(mean=mean, variance=mean)


@dataclass(frozen=True)
class AmplifierSpec:
    """Power gain sampled on the pulse time grid; G(t) >= 1 everywhere."""

    gain_G: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gain_G, dtype=float)
        if np.any(g < 1.0):
            raise GainBelowUnityError("AmplifierSpec requires G(t) >= 1")
        g.setflags(write=False)
        object.__setattr__(self, "gain_G", g)


def amplify_moments(
    moments: PhotonMoments, gain: float, excess_uses_mean: bool = True
) -> PhotonMoments:
    """Transform photon mean/variance through a gain-G amplifier.

    ``excess_uses_mean`` selects the reading of the excess-noise term:
    the default multiplies G(G-1) by (mean_in + 1); the alternative drops
    the mean and uses G(G-1) alone, for sensitivity analysis.
    """
    if gain < 1.0:
        raise GainBelowUnityError(f"amplifier gain {gain} < 1")
    mean_out = gain * moments.mean + (gain - 1.0)
    excess = moments.mean + 1.0 if excess_uses_mean else 1.0
    var_out = gain**2 * moments.variance + gain * (gain - 1.0) * excess
    return PhotonMoments(mean_out, var_out)


def attenuate_moments(moments: PhotonMoments, transmission: float) -> PhotonMoments:
    """Beam-splitter loss with transmission in [0, 1] (binomial thinning)."""
    if not 0.0 <= transmission <= 1.0:
        raise ValueError(f"transmission {transmission} outside [0, 1]")
    t = transmission
    mean_out = t * moments.mean
    var_out = t**2 * moments.variance + t * (1.0 - t) * moments.mean
    return PhotonMoments(mean_out, var_out)


def apply_gain_moments(moments: PhotonMoments, gain: float) -> PhotonMoments:
    """Amplify for G >= 1, thin for G < 1."""
    if gain >= 1.0:
        return amplify_moments(moments, gain)
    return attenuate_moments(moments, gain)


def sample_counts(moments: PhotonMoments, rng: np.random.Generator) -> int:
    """One photon-count draw: Gaussian at the given moments, clamped at zero
    and rounded.  Accurate for means well above ~10^3."""
    if moments.variance == 0.0:
        return int(round(moments.mean))
    x = rng.normal(moments.mean, np.sqrt(moments.variance))
    return int(round(max(x, 0.0)))


def amplify_pulse_moments(
    pulse_bin_means: Sequence[float], g_of_t: Sequence[float]
) -> list[PhotonMoments]:
    """Per-bin amplifier moments for a shot-noise-limited input pulse.

    Bins where the gain profile is invalid (NaN) pass through unchanged.
    """
    means = np.asarray(pulse_bin_means, dtype=float)
    gains = np.asarray(g_of_t, dtype=float)
    if means.shape != gains.shape:
        raise SizeMismatchError("bin means and gain profile differ in length")
    out = []
    for m, g in zip(means, gains):
        if not np.isfinite(g):
            g = 1.0
        out.append(apply_gain_moments(PhotonMoments.shot_limited(m), g))
    return out


def gain_moment_maps(
    mean_map: np.ndarray, gain: float, excess_uses_mean: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`apply_gain_moments` on a shot-limited expectation map.

    Returns (mean, variance) arrays for a whole pixel map at a common gain.
    """
    m = np.asarray(mean_map, dtype=float)
    if gain >= 1.0:
        excess = m + 1.0 if excess_uses_mean else 1.0
        mean = gain * m + (gain - 1.0)
        var = gain**2 * m + gain * (gain - 1.0) * excess
    else:
        mean = gain * m
        var = gain**2 * m + gain * (1.0 - gain) * m
    return mean, var
