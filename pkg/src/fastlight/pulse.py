"""Optical pulse envelopes on a uniform time grid.

The envelope is stored as a complex field amplitude so that a dispersive
medium can apply a physical spectral phase; the measurable intensity is
``|envelope|**2`` and is normalized so that its trapezoid-rule time
integral equals the expected photon number per pulse.

Fourier convention: the forward transform uses the ``exp(+2*pi*i*f*t)``
analysis kernel, i.e. a transfer function ``H(f) = exp(i*phi(f))`` with
``phi(f) = 2*pi*f*a`` delays the pulse by ``a`` seconds.  Negative phase
slope therefore advances the pulse, which is the sign convention used by
the dispersion module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GridTooCoarseError,
    PulseExceedsGridError,
    SizeMismatchError,
    ZeroPulseError,
)

# Intensity FWHM of exp(-t^2/tau^2) is 2*tau*sqrt(ln 2).
_FWHM_TO_TAU = 1.0 / (2.0 * math.sqrt(math.log(2.0)))

# Margin (in units of FWHM) between a Gaussian peak and either grid edge
# needed for the endpoint field magnitude to drop below 1e-6 of the peak:
# exp(-d^2 / (2 tau^2)) < 1e-6  =>  d > 3.157 * FWHM.
_EDGE_MARGIN_FWHM = 3.2


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time axis: ``n_samples`` points starting at ``t_start``, step ``dt``."""

    t_start: float
    dt: float
    n_samples: int

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.n_samples < 16:
            raise ValueError("n_samples must be >= 16")
        if self.n_samples % 2 != 0:
            raise ValueError("n_samples must be even")

    @property
    def t_end(self) -> float:
        return self.t_start + (self.n_samples - 1) * self.dt

    @property
    def span(self) -> float:
        return (self.n_samples - 1) * self.dt

    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_samples)

    def frequencies(self) -> np.ndarray:
        """DFT-ordered frequency bins (Hz) matching :func:`to_spectrum`."""
        return np.fft.fftfreq(self.n_samples, d=self.dt)


@dataclass(frozen=True)
class SampledPulse:
    """Complex field envelope on a :class:`TimeGrid`.

    ``photons_total`` is the expected photon number per pulse; the
    trapezoid integral of ``|envelope|**2`` over the grid equals it.
    """

    grid: TimeGrid
    envelope: np.ndarray = field(repr=False)
    photons_total: float

    def __post_init__(self):
        env = np.asarray(self.envelope, dtype=np.complex128)
        if env.shape != (self.grid.n_samples,):
            raise SizeMismatchError(
                f"envelope has {env.shape}, grid expects ({self.grid.n_samples},)"
            )
        object.__setattr__(self, "envelope", _readonly(env))
        energy = float(np.trapezoid(np.abs(env) ** 2, dx=self.grid.dt))
        ref = max(abs(self.photons_total), 1.0e-300)
        if abs(energy - self.photons_total) > 1e-9 * max(ref, energy):
            raise ValueError(
                f"photons_total={self.photons_total} inconsistent with "
                f"envelope energy {energy}"
            )

    def intensity(self) -> np.ndarray:
        return np.abs(self.envelope) ** 2


@dataclass(frozen=True)
class Spectrum:
    """DFT-ordered complex spectrum of a pulse envelope.

    Unitary normalization: ``sum |components|^2 == sum |envelope|^2``.
    """

    df: float
    components: np.ndarray = field(repr=False)
    photons_total: float

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=np.complex128)
        object.__setattr__(self, "components", _readonly(comp))
        if self.df <= 0:
            raise ValueError("df must be positive")


def make_gaussian_pulse(
    grid: TimeGrid, t_peak: float, fwhm: float, photons_total: float
) -> SampledPulse:
    """Gaussian pulse with the given intensity FWHM and total photon number.

    Raises :class:`GridTooCoarseError` if ``fwhm <= 4*dt`` and
    :class:`PulseExceedsGridError` if the peak sits closer than
    3.2 FWHM to either grid edge (needed so the field magnitude at the
    endpoints is below 1e-6 of the peak).
    """
    if photons_total < 0:
        raise ValueError("photons_total must be >= 0")
    if fwhm <= 4.0 * grid.dt:
        raise GridTooCoarseError(
            f"fwhm={fwhm} must exceed 4*dt={4.0 * grid.dt}"
        )
    margin = _EDGE_MARGIN_FWHM * fwhm
    if t_peak - grid.t_start < margin or grid.t_end - t_peak < margin:
        raise PulseExceedsGridError(
            f"peak at {t_peak} needs {margin} clearance inside "
            f"[{grid.t_start}, {grid.t_end}]"
        )
    t = grid.times()
    tau = fwhm * _FWHM_TO_TAU
    intensity = np.exp(-(((t - t_peak) / tau) ** 2))
    norm = float(np.trapezoid(intensity, dx=grid.dt))
    if photons_total == 0.0:
        env = np.zeros(grid.n_samples, dtype=np.complex128)
        return SampledPulse(grid, env, 0.0)
    env = np.sqrt(intensity * (photons_total / norm)).astype(np.complex128)
    return SampledPulse(grid, env, photons_total)


def to_spectrum(pulse: SampledPulse) -> Spectrum:
    """Unitary DFT of the envelope (analysis kernel ``exp(+2*pi*i*f*t)``)."""
    n = pulse.grid.n_samples
    comp = np.fft.ifft(pulse.envelope) * math.sqrt(n)
    return Spectrum(1.0 / (n * pulse.grid.dt), comp, pulse.photons_total)


def from_spectrum(spec: Spectrum, grid: TimeGrid) -> SampledPulse:
    """Inverse of :func:`to_spectrum` onto the given grid."""
    n = grid.n_samples
    if spec.components.shape != (n,):
        raise SizeMismatchError(
            f"spectrum has {spec.components.shape[0]} bins, grid expects {n}"
        )
    if not math.isclose(spec.df, 1.0 / (n * grid.dt), rel_tol=1e-9):
        raise SizeMismatchError("spectrum df inconsistent with grid")
    env = np.fft.fft(spec.components) / math.sqrt(n)
    photons = float(np.trapezoid(np.abs(env) ** 2, dx=grid.dt))
    return SampledPulse(grid, env, photons)


def _parabolic_vertex(y0: float, y1: float, y2: float) -> float:
    """Offset of the parabola vertex through (-1,y0),(0,y1),(1,y2), in samples."""
    denom = y0 - 2.0 * y1 + y2
    if denom == 0.0:
        return 0.0
    return 0.5 * (y0 - y2) / denom


def peak_time(pulse: SampledPulse) -> float:
    """Time of the intensity maximum, parabolic-interpolated.

    Ties are broken toward the earliest sample (``argmax`` convention).
    """
    inten = pulse.intensity()
    if not np.any(inten > 0):
        raise ZeroPulseError("peak_time undefined for a zero pulse")
    k = int(np.argmax(inten))
    t = pulse.grid.t_start + k * pulse.grid.dt
    if 0 < k < pulse.grid.n_samples - 1:
        off = _parabolic_vertex(inten[k - 1], inten[k], inten[k + 1])
        t += np.clip(off, -0.5, 0.5) * pulse.grid.dt
    return float(t)


def measure_fwhm(pulse: SampledPulse) -> float:
    """Intensity FWHM via linear interpolation of the half-maximum crossings."""
    inten = pulse.intensity()
    if not np.any(inten > 0):
        raise ZeroPulseError("fwhm undefined for a zero pulse")
    half = 0.5 * float(np.max(inten))
    above = inten >= half
    idx = np.flatnonzero(above)
    lo, hi = idx[0], idx[-1]
    dt = pulse.grid.dt

    def cross(i_out, i_in):
        # linear interpolation between the sample below and above half max
        y0, y1 = inten[i_out], inten[i_in]
        return i_out + (half - y0) / (y1 - y0)

    left = cross(lo - 1, lo) if lo > 0 else float(lo)
    right = cross(hi + 1, hi) if hi < pulse.grid.n_samples - 1 else float(hi)
    return float((right - left) * dt)


def cumulative_signal(pulse: SampledPulse) -> np.ndarray:
    """Cumulative trapezoid integral of intensity from the grid start."""
    inten = pulse.intensity()
    out = np.zeros(pulse.grid.n_samples)
    np.cumsum((inten[1:] + inten[:-1]) * (0.5 * pulse.grid.dt), out=out[1:])
    return out


def integrated_signal(pulse: SampledPulse, t: float) -> float:
    """Photons accumulated from the grid start up to time ``t``.

    For a Gaussian this equals ``photons_total * (1 + erf((t - t_peak)/tau)) / 2``.
    """
    grid = pulse.grid
    if t < grid.t_start or t > grid.t_end:
        raise ValueError(f"t={t} outside grid [{grid.t_start}, {grid.t_end}]")
    cum = cumulative_signal(pulse)
    x = (t - grid.t_start) / grid.dt
    k = min(int(x), grid.n_samples - 2)
    frac = x - k
    # exact trapezoid of the linearly interpolated intensity within the step
    inten = pulse.intensity()
    i_t = inten[k] + frac * (inten[k + 1] - inten[k])
    return float(cum[k] + 0.5 * (inten[k] + i_t) * frac * grid.dt)


def gate_integral(pulse: SampledPulse, t0: float, t1: float) -> float:
    """Photons inside the gate window ``[t0, t1]``."""
    if t1 < t0:
        raise ValueError("gate end precedes gate start")
    return integrated_signal(pulse, t1) - integrated_signal(pulse, t0)


def _cumulative_at(pulse: SampledPulse, cum: np.ndarray, times: np.ndarray) -> np.ndarray:
    grid = pulse.grid
    x = (np.asarray(times, dtype=float) - grid.t_start) / grid.dt
    k = np.clip(x.astype(int), 0, grid.n_samples - 2)
    frac = x - k
    inten = pulse.intensity()
    i_t = inten[k] + frac * (inten[k + 1] - inten[k])
    return cum[k] + 0.5 * (inten[k] + i_t) * frac * grid.dt


def gate_integrals(
    pulse: SampledPulse, gate_starts: np.ndarray, gate_width: float
) -> np.ndarray:
    """Vectorized :func:`gate_integral` for a sweep of gate start times."""
    starts = np.asarray(gate_starts, dtype=float)
    grid = pulse.grid
    if gate_width <= 0:
        raise ValueError("gate_width must be positive")
    if np.any(starts < grid.t_start) or np.any(starts + gate_width > grid.t_end):
        raise ValueError("gate sweep extends outside the pulse grid")
    cum = cumulative_signal(pulse)
    return _cumulative_at(pulse, cum, starts + gate_width) - _cumulative_at(
        pulse, cum, starts
    )
