"""Experiment orchestration: channels, seeded ensembles, parameter sweeps.

The reference channel propagates the pulse through vacuum (identity
medium); the fast channel propagates it through the configured medium.
Scene, detector and analysis settings are shared.  All Monte Carlo draws
derive from (base_seed, seed index, channel, frame index), so runs are
deterministic and frame/seed order independent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .analysis import (
    DetectionReport,
    RegionSpec,
    VisibilityTrace,
    _exceedance_window,
    compare,
    default_regions,
    integrated_snr,
    visibility_trace,
    write_trace_csv,
)
from .config import ExperimentConfig
from .detector import (
    FrameStack,
    detection_moments,
    frame_rng,
    gate_gains,
    gate_sweep,
    sample_frame,
    save_stack,
)
from .errors import ConfigError
from .medium import MediumSpec, propagate
from .pulse import SampledPulse, _parabolic_vertex, gate_integrals, make_gaussian_pulse
from .scene import beam_pattern

REFERENCE = "reference"
FAST = "fast"
_CHANNEL_CODE = {REFERENCE: 0, FAST: 1}

MIN_REGION_PHOTONS = 1.0e3  # Gaussian-statistics validity floor per region/gate


def build_pulse(cfg: ExperimentConfig) -> SampledPulse:
    return make_gaussian_pulse(
        cfg.grid, cfg.pulse.t_peak, cfg.pulse.fwhm, cfg.pulse.photons_total
    )


def sweep_delays(cfg: ExperimentConfig) -> np.ndarray:
    n = int(math.floor((cfg.sweep.stop - cfg.sweep.start) / cfg.sweep.step)) + 1
    return cfg.sweep.start + cfg.sweep.step * np.arange(n)


def regions_for(cfg: ExperimentConfig) -> RegionSpec:
    return default_regions(
        stripe_center_row=cfg.scene.stripe.center_row,
        stripe_width=cfg.scene.stripe.width,
        beam_center_col=cfg.scene.beam_center[0],
        rows=cfg.analysis.region_rows,
        cols=cfg.analysis.region_cols,
        flank_offset=cfg.analysis.flank_offset,
    )


@dataclass(frozen=True)
class ChannelModel:
    """Seed-independent per-channel precomputation for a gate sweep."""

    channel: str
    delays: np.ndarray = field(repr=False)
    g_per_gate: np.ndarray = field(repr=False)
    mean_maps: np.ndarray = field(repr=False)  # (n_frames, h, w)
    var_maps: np.ndarray = field(repr=False)
    arrival: np.ndarray = field(repr=False)  # expected detected counts per gate


def prepare_channel(cfg: ExperimentConfig, channel: str) -> ChannelModel:
    """Propagate the pulse and precompute per-gate detection moments."""
    if channel not in _CHANNEL_CODE:
        raise ConfigError(f"unknown channel {channel!r}")
    pulse_in = build_pulse(cfg)
    medium = cfg.medium if channel == FAST else MediumSpec.identity()
    pulse_out = propagate(pulse_in, medium)
    delays = sweep_delays(cfg)
    det = cfg.detector
    gains = gate_gains(pulse_in, pulse_out, delays, det.gate_width)
    weights = beam_pattern(cfg.scene)
    photons = gate_integrals(pulse_in, delays, det.gate_width)
    n = len(delays)
    h, w = cfg.scene.grid.height_px, cfg.scene.grid.width_px
    mean_maps = np.empty((n, h, w))
    var_maps = np.empty((n, h, w))
    for i in range(n):
        mean_maps[i], var_maps[i] = detection_moments(
            weights * photons[i], gains[i], det, cfg.amplifier_excess_uses_mean
        )
    # noiseless arrival curve: expected photons per gate of the propagated
    # pulse, before amplifier noise, efficiency and dark counts
    arrival = gate_integrals(pulse_out, delays, det.gate_width)
    _warn_if_photon_starved(cfg, weights, photons, gains)
    return ChannelModel(
        channel=channel,
        delays=delays,
        g_per_gate=gains,
        mean_maps=mean_maps,
        var_maps=var_maps,
        arrival=arrival,
    )


def _warn_if_photon_starved(cfg, weights, photons, gains) -> None:
    regions = regions_for(cfg)
    flank_weight = float(np.sum(weights[regions.flank_a.slice()]))
    # pre-detection photons reaching the analysis region at the peak gate
    peak = float(np.max(photons * gains)) * flank_weight
    if peak < MIN_REGION_PHOTONS:
        warnings.warn(
            f"peak region expectation {peak:.1f} photons per gate is below "
            f"{MIN_REGION_PHOTONS:.0f}; Gaussian count statistics may be inaccurate",
            stacklevel=3,
        )


def sample_stack(
    cfg: ExperimentConfig, model: ChannelModel, seed_entropy
) -> FrameStack:
    det = cfg.detector
    n = len(model.delays)
    frames = np.empty_like(model.mean_maps, dtype=np.int64)
    for i in range(n):
        frames[i] = sample_frame(
            model.mean_maps[i], model.var_maps[i], det, frame_rng(seed_entropy, i)
        )
    return FrameStack(
        counts=frames,
        delays=model.delays,
        meta={"channel": model.channel, "gate_width": det.gate_width},
    )


def _seed_entropy(cfg: ExperimentConfig, channel: str, seed: int):
    return (cfg.ensemble.base_seed, int(seed), _CHANNEL_CODE[channel])


def run_channel(
    cfg: ExperimentConfig, channel: str, seed: int
) -> tuple[FrameStack, VisibilityTrace]:
    """One seeded gate sweep plus its visibility analysis."""
    model = prepare_channel(cfg, channel)
    stack = sample_stack(cfg, model, _seed_entropy(cfg, channel, seed))
    trace = visibility_trace(
        stack, regions_for(cfg), cfg.detector.threshold_D, cfg.analysis.window
    )
    return stack, trace


@dataclass(frozen=True)
class EnsembleResult:
    config_hash: str
    n_seeds: int
    delays: np.ndarray = field(repr=False)
    reports: list = field(repr=False, default_factory=list)
    mean_trace_reference: dict = field(repr=False, default_factory=dict)
    mean_trace_fast: dict = field(repr=False, default_factory=dict)
    arrival_reference: np.ndarray = field(repr=False, default=None)
    arrival_fast: np.ndarray = field(repr=False, default=None)
    mean_advancement: float = math.nan
    std_advancement: float = math.nan
    stderr_advancement: float = math.nan
    n_detected: int = 0
    window_fast_exceeds_reference: tuple | None = None
    pulse_onset: float = math.nan

    @property
    def advancements(self) -> np.ndarray:
        return np.array([r.advancement for r in self.reports])


def run_ensemble(
    cfg: ExperimentConfig,
    out_dir=None,
    save_frames: bool = False,
    progress=None,
) -> EnsembleResult:
    """Run reference and fast channels over all seeds and aggregate.

    Detection-time advancement statistics use the seeds where both
    channels detect; the ensemble-mean visibility/SNR traces and the mean
    cumulative-SNR exceedance window use every seed.
    """
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    models = {ch: prepare_channel(cfg, ch) for ch in (REFERENCE, FAST)}
    regions = regions_for(cfg)
    delays = models[REFERENCE].delays
    n_seeds = cfg.ensemble.n_seeds

    reports = []
    acc = {
        ch: {
            "m": np.zeros(len(delays)),
            "m_n": np.zeros(len(delays)),
            "dm": np.zeros(len(delays)),
            "snr": np.zeros(len(delays)),
            "snr_n": np.zeros(len(delays)),
            "cum": np.zeros(len(delays)),
        }
        for ch in (REFERENCE, FAST)
    }
    first_traces = {}
    for seed in range(n_seeds):
        traces = {}
        for ch in (REFERENCE, FAST):
            stack = sample_stack(cfg, models[ch], _seed_entropy(cfg, ch, seed))
            trace = visibility_trace(
                stack, regions, cfg.detector.threshold_D, cfg.analysis.window
            )
            traces[ch] = trace
            a = acc[ch]
            finite_m = np.isfinite(trace.m)
            a["m"][finite_m] += trace.m[finite_m]
            a["m_n"] += finite_m
            a["dm"][trace.valid] += trace.dm[trace.valid]
            a["snr"][trace.valid] += trace.snr[trace.valid]
            a["snr_n"] += trace.valid
            a["cum"] += integrated_snr(trace)
            if seed == 0:
                first_traces[ch] = trace
                if save_frames and out_dir is not None:
                    save_stack(stack, Path(out_dir) / f"frames_{ch}_seed0.npz")
        reports.append(
            compare(
                traces[REFERENCE],
                traces[FAST],
                pulse_fwhm=cfg.pulse.fwhm,
                threshold=cfg.analysis.snr_threshold,
                persistence=cfg.analysis.persistence,
            )
        )
        if progress is not None:
            progress(seed + 1, n_seeds)

    mean_traces = {}
    for ch in (REFERENCE, FAST):
        a = acc[ch]
        with np.errstate(invalid="ignore"):
            mean_traces[ch] = {
                "m": np.where(a["m_n"] > 0, a["m"] / np.maximum(a["m_n"], 1), np.nan),
                "dm": np.where(
                    a["snr_n"] > 0, a["dm"] / np.maximum(a["snr_n"], 1), np.nan
                ),
                "snr": np.where(
                    a["snr_n"] > 0, a["snr"] / np.maximum(a["snr_n"], 1), np.nan
                ),
                "cum": a["cum"] / n_seeds,
            }

    adv = np.array([r.advancement for r in reports])
    detected = np.isfinite(adv)
    adv_ok = adv[detected]
    mean_adv = float(np.mean(adv_ok)) if len(adv_ok) else math.nan
    std_adv = float(np.std(adv_ok, ddof=1)) if len(adv_ok) > 1 else math.nan
    stderr = std_adv / math.sqrt(len(adv_ok)) if len(adv_ok) > 1 else math.nan

    window = _exceedance_window(
        delays, mean_traces[FAST]["cum"], mean_traces[REFERENCE]["cum"]
    )
    result = EnsembleResult(
        config_hash=cfg.config_hash,
        n_seeds=n_seeds,
        delays=delays,
        reports=reports,
        mean_trace_reference=mean_traces[REFERENCE],
        mean_trace_fast=mean_traces[FAST],
        arrival_reference=models[REFERENCE].arrival,
        arrival_fast=models[FAST].arrival,
        mean_advancement=mean_adv,
        std_advancement=std_adv,
        stderr_advancement=stderr,
        n_detected=int(np.sum(detected)),
        window_fast_exceeds_reference=window,
        pulse_onset=cfg.pulse.t_peak - cfg.pulse.fwhm,
    )
    if out_dir is not None:
        write_artifacts(cfg, result, first_traces, out_dir)
    return result


def arrival_peak_time(delays: np.ndarray, curve: np.ndarray) -> float:
    """Parabolic-interpolated peak of a gate-sweep arrival curve."""
    k = int(np.argmax(curve))
    t = delays[k]
    if 0 < k < len(curve) - 1:
        off = _parabolic_vertex(curve[k - 1], curve[k], curve[k + 1])
        t += np.clip(off, -0.5, 0.5) * (delays[1] - delays[0])
    return float(t)


def arrival_advancement(cfg: ExperimentConfig) -> float:
    """Noiseless peak advancement of the fast arrival curve vs reference."""
    ref = prepare_channel(cfg, REFERENCE)
    fast = prepare_channel(cfg, FAST)
    return arrival_peak_time(ref.delays, ref.arrival) - arrival_peak_time(
        fast.delays, fast.arrival
    )


_SWEEPABLE = ("efficiency", "gain", "advancement")


def _override(cfg: ExperimentConfig, parameter: str, value: float) -> ExperimentConfig:
    if parameter == "efficiency":
        return replace(cfg, detector=replace(cfg.detector, efficiency_eta=value))
    if parameter == "gain":
        return replace(cfg, medium=replace(cfg.medium, gain_total=value))
    if parameter == "advancement":
        if cfg.medium.mode != "empirical":
            raise ConfigError("advancement sweep requires an empirical medium")
        return replace(cfg, medium=replace(cfg.medium, advancement=value))
    raise ConfigError(f"unknown sweep parameter {parameter!r}; use one of {_SWEEPABLE}")


def sweep_parameter(
    cfg: ExperimentConfig, parameter: str, values, progress=None
) -> list[dict]:
    """Run one ensemble per parameter value; returns a row per value."""
    rows = []
    for value in values:
        res = run_ensemble(_override(cfg, parameter, float(value)), progress=progress)
        rows.append(
            {
                "parameter": parameter,
                "value": float(value),
                "mean_advancement": res.mean_advancement,
                "std_advancement": res.std_advancement,
                "n_detected": res.n_detected,
                "window": res.window_fast_exceeds_reference,
            }
        )
    return rows


def _meta(cfg: ExperimentConfig, **extra) -> dict:
    return {"config_hash": cfg.config_hash, **extra}


def write_artifacts(
    cfg: ExperimentConfig, result: EnsembleResult, first_traces: dict, out_dir
) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "summary.txt", "w") as fh:
        fh.write(f"config_hash={cfg.config_hash}\n")
        fh.write(f"base_seed={cfg.ensemble.base_seed}\n")
        fh.write(f"n_seeds={result.n_seeds}\n")
        fh.write(f"n_detected_both={result.n_detected}\n")
        fh.write(f"mean_advancement_s={result.mean_advancement!r}\n")
        fh.write(f"std_advancement_s={result.std_advancement!r}\n")
        fh.write(f"stderr_advancement_s={result.stderr_advancement!r}\n")
        rel = result.mean_advancement / cfg.pulse.fwhm
        fh.write(f"relative_advancement={rel!r}\n")
        fh.write(f"pulse_onset_s={result.pulse_onset!r}\n")
        w = result.window_fast_exceeds_reference
        fh.write(f"window_lo_s={w[0]!r}\n" if w else "window_lo_s=none\n")
        fh.write(f"window_hi_s={w[1]!r}\n" if w else "window_hi_s=none\n")

    with open(out / "ensemble.csv", "w") as fh:
        fh.write(f"# config_hash={cfg.config_hash}\n")
        fh.write(f"# base_seed={cfg.ensemble.base_seed}\n")
        fh.write("seed,t_detect_reference_s,t_detect_fast_s,advancement_s\n")
        for seed, r in enumerate(result.reports):
            fh.write(
                f"{seed},{r.t_detect_reference!r},{r.t_detect_fast!r},"
                f"{r.advancement!r}\n"
            )

    mean_traces = {
        REFERENCE: result.mean_trace_reference,
        FAST: result.mean_trace_fast,
    }
    arrivals = {REFERENCE: result.arrival_reference, FAST: result.arrival_fast}
    for ch in (REFERENCE, FAST):
        mt = mean_traces[ch]
        with open(out / f"trace_{ch}_mean.csv", "w") as fh:
            fh.write(f"# config_hash={cfg.config_hash}\n")
            fh.write(f"# channel={ch}\n")
            fh.write(f"# seeds=0..{result.n_seeds - 1}\n")
            fh.write("gate_delay_s,visibility,visibility_std,snr,cumulative_snr\n")
            for i, d in enumerate(result.delays):
                fh.write(
                    f"{float(d)!r},{float(mt['m'][i])!r},{float(mt['dm'][i])!r},"
                    f"{float(mt['snr'][i])!r},{float(mt['cum'][i])!r}\n"
                )
        if ch in first_traces:
            trace = first_traces[ch]
            write_trace_csv(
                out / f"trace_{ch}_seed0.csv",
                trace,
                integrated_snr(trace),
                _meta(cfg, channel=ch, seed=0),
            )
        with open(out / f"arrival_{ch}.csv", "w") as fh:
            fh.write(f"# config_hash={cfg.config_hash}\n")
            fh.write(f"# channel={ch}\n")
            fh.write("gate_delay_s,expected_counts\n")
            for d, v in zip(result.delays, arrivals[ch]):
                fh.write(f"{float(d)!r},{float(v)!r}\n")
