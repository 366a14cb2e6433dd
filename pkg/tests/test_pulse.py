"""Pulse container, Gaussian construction, FFT round trips, gate integrals."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erf

from fastlight.errors import (
    GridTooCoarseError,
    PulseExceedsGridError,
    SizeMismatchError,
    ZeroPulseError,
)
from fastlight.pulse import (
    SampledPulse,
    Spectrum,
    TimeGrid,
    cumulative_signal,
    from_spectrum,
    gate_integral,
    gate_integrals,
    integrated_signal,
    make_gaussian_pulse,
    measure_fwhm,
    peak_time,
    to_spectrum,
)

GRID = TimeGrid(t_start=0.0, dt=0.5e-9, n_samples=4096)


def gauss(t_peak=700e-9, fwhm=190e-9, photons=3.8e6, grid=GRID):
    return make_gaussian_pulse(grid, t_peak, fwhm, photons)


class TestTimeGrid:
    def test_validation(self):
        with pytest.raises(ValueError):
            TimeGrid(0.0, -1e-9, 64)
        with pytest.raises(ValueError):
            TimeGrid(0.0, 1e-9, 8)
        with pytest.raises(ValueError):
            TimeGrid(0.0, 1e-9, 65)

    def test_axes(self):
        t = GRID.times()
        assert len(t) == GRID.n_samples
        assert t[0] == GRID.t_start
        assert math.isclose(t[-1], GRID.t_end)
        f = GRID.frequencies()
        assert f[0] == 0.0
        assert math.isclose(f[1], 1.0 / (GRID.n_samples * GRID.dt))


class TestGaussianPulse:
    def test_energy_normalization(self):
        p = gauss()
        energy = np.trapezoid(p.intensity(), dx=GRID.dt)
        assert math.isclose(energy, 3.8e6, rel_tol=1e-12)

    def test_peak_and_fwhm(self):
        p = gauss()
        assert abs(peak_time(p) - 700e-9) < 1e-12
        assert math.isclose(measure_fwhm(p), 190e-9, rel_tol=1e-4)

    def test_too_coarse_grid_rejected(self):
        with pytest.raises(GridTooCoarseError):
            make_gaussian_pulse(GRID, 700e-9, 1.9e-9, 1.0)

    def test_peak_too_close_to_edge_rejected(self):
        with pytest.raises(PulseExceedsGridError):
            make_gaussian_pulse(GRID, 100e-9, 190e-9, 1.0)
        with pytest.raises(PulseExceedsGridError):
            make_gaussian_pulse(GRID, GRID.t_end - 100e-9, 190e-9, 1.0)

    def test_zero_pulse(self):
        p = make_gaussian_pulse(GRID, 700e-9, 190e-9, 0.0)
        assert p.photons_total == 0.0
        with pytest.raises(ZeroPulseError):
            peak_time(p)
        with pytest.raises(ZeroPulseError):
            measure_fwhm(p)

    def test_inconsistent_photon_count_rejected(self):
        p = gauss()
        with pytest.raises(ValueError):
            SampledPulse(GRID, p.envelope, 2.0 * p.photons_total)

    def test_envelope_readonly(self):
        p = gauss()
        with pytest.raises(ValueError):
            p.envelope[0] = 1.0

    @given(
        fwhm=st.floats(20e-9, 300e-9),
        photons=st.floats(1.0, 1e7),
    )
    @settings(max_examples=25, deadline=None)
    def test_fwhm_and_energy_properties(self, fwhm, photons):
        p = make_gaussian_pulse(GRID, 1024e-9, fwhm, photons)
        assert abs(measure_fwhm(p) - fwhm) <= 3.0 * GRID.dt
        assert math.isclose(
            float(np.trapezoid(p.intensity(), dx=GRID.dt)), photons, rel_tol=1e-9
        )


class TestSpectrum:
    def test_round_trip_exact(self):
        p = gauss()
        q = from_spectrum(to_spectrum(p), GRID)
        scale = float(np.max(np.abs(p.envelope)))
        assert np.allclose(q.envelope, p.envelope, rtol=0, atol=1e-12 * scale)

    def test_unitary_norm(self):
        p = gauss()
        s = to_spectrum(p)
        assert math.isclose(
            float(np.sum(np.abs(s.components) ** 2)),
            float(np.sum(np.abs(p.envelope) ** 2)),
            rel_tol=1e-12,
        )

    def test_phase_ramp_delays_pulse(self):
        # H(f) = exp(2*pi*i*f*a) with the analysis kernel exp(+2*pi*i*f*t)
        # must shift the pulse a seconds later; a negative slope advances it.
        p = gauss()
        s = to_spectrum(p)
        a = 50e-9
        f = GRID.frequencies()
        shifted = from_spectrum(
            Spectrum(s.df, np.exp(2j * np.pi * f * a) * s.components, s.photons_total),
            GRID,
        )
        assert abs(peak_time(shifted) - (700e-9 + a)) < 0.1 * GRID.dt

    def test_size_mismatch_rejected(self):
        p = gauss()
        s = to_spectrum(p)
        other = TimeGrid(0.0, 0.5e-9, 2048)
        with pytest.raises(SizeMismatchError):
            from_spectrum(s, other)


class TestGateIntegrals:
    def test_cumulative_matches_erf(self):
        # For a Gaussian intensity, the running integral is an erf ramp:
        # integral up to t = photons * (1 + erf((t - t_peak)/tau)) / 2.
        p = gauss()
        tau = 190e-9 / (2.0 * math.sqrt(math.log(2.0)))
        for t in (500e-9, 650e-9, 700e-9, 760e-9, 900e-9):
            expected = 3.8e6 * 0.5 * (1.0 + erf((t - 700e-9) / tau))
            # trapezoid discretization limits agreement to ~1e-4 relative
            assert math.isclose(integrated_signal(p, t), expected, rel_tol=1e-3)

    def test_full_grid_equals_total(self):
        p = gauss()
        assert math.isclose(
            integrated_signal(p, GRID.t_end), 3.8e6, rel_tol=1e-12
        )

    def test_gate_integral_additive(self):
        p = gauss()
        whole = gate_integral(p, 600e-9, 800e-9)
        split = gate_integral(p, 600e-9, 713e-9) + gate_integral(p, 713e-9, 800e-9)
        assert math.isclose(whole, split, rel_tol=1e-12)

    def test_vectorized_matches_scalar(self):
        p = gauss()
        starts = np.arange(0.0, 1.1e-6, 2.44e-9)
        width = 2.44e-9
        vec = gate_integrals(p, starts, width)
        for i in (0, 100, 287, len(starts) - 1):
            assert math.isclose(
                vec[i], gate_integral(p, starts[i], starts[i] + width), rel_tol=1e-12
            )

    def test_out_of_grid_gate_rejected(self):
        p = gauss()
        with pytest.raises(ValueError):
            gate_integral(p, -1e-9, 1e-9)
        with pytest.raises(ValueError):
            gate_integrals(p, np.array([GRID.t_end - 1e-9]), 2e-9)

    def test_cumulative_monotone(self):
        p = gauss()
        assert np.all(np.diff(cumulative_signal(p)) >= 0)
