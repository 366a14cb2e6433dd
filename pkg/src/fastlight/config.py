"""Experiment configuration: TOML-syntax file loading and validation.

The config file is a human-readable nested key-value file (TOML syntax).
See the shipped ``configs/paper_fig2.cfg`` for the full schema.  Every
output artifact embeds the hash of the parsed configuration so results
round-trip to the producing config.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from .detector import DetectorSpec
from .errors import ConfigError
from .medium import GainLine, MediumSpec
from .pulse import TimeGrid
from .scene import PixelGrid, SceneSpec, StripeSpec

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml


@dataclass(frozen=True)
class PulseConfig:
    fwhm: float
    photons_total: float
    t_peak: float


@dataclass(frozen=True)
class SweepConfig:
    start: float
    stop: float
    step: float


@dataclass(frozen=True)
class AnalysisConfig:
    window: int = 10
    snr_threshold: float = 1.0
    persistence: int = 3
    region_rows: int = 3
    region_cols: int = 90
    flank_offset: float | None = None


@dataclass(frozen=True)
class EnsembleConfig:
    n_seeds: int = 1
    base_seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    grid: TimeGrid
    pulse: PulseConfig
    medium: MediumSpec
    scene: SceneSpec
    detector: DetectorSpec
    sweep: SweepConfig
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    amplifier_excess_uses_mean: bool = True
    config_hash: str = ""

    def __post_init__(self):
        if self.sweep.step < self.detector.gate_width * (1.0 - 1e-9):
            raise ConfigError("sweep step must be >= detector gate width")
        if self.sweep.stop <= self.sweep.start:
            raise ConfigError("sweep stop must exceed sweep start")
        if self.ensemble.n_seeds < 1:
            raise ConfigError("ensemble needs n_seeds >= 1")


def _section(raw: dict, name: str) -> dict:
    try:
        sec = raw[name]
    except KeyError:
        raise ConfigError(f"missing config section [{name}]") from None
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


_MISSING = object()


def _get(sec: dict, name: str, key: str, default=_MISSING):
    if key in sec:
        return sec[key]
    if default is _MISSING:
        raise ConfigError(f"missing key '{key}' in section [{name}]")
    return default


def config_hash(raw: dict) -> str:
    """Short stable hash of the parsed configuration."""
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def _build_medium(sec: dict) -> MediumSpec:
    mode = _get(sec, "medium", "mode")
    if mode == "empirical":
        return MediumSpec.empirical(
            advancement=float(_get(sec, "medium", "advancement")),
            compression=float(_get(sec, "medium", "compression", 0.8)),
            gain_total=float(_get(sec, "medium", "gain_total", 1.0)),
        )
    if mode == "physical":
        lines = [
            GainLine(
                center_detuning=float(line["center_detuning"]),
                half_width=float(line["half_width"]),
                strength=float(line["strength"]),
            )
            for line in _get(sec, "medium", "lines")
        ]
        return MediumSpec.physical(lines, float(_get(sec, "medium", "length")))
    raise ConfigError(f"unknown medium mode {mode!r}")


def build_config(raw: dict) -> ExperimentConfig:
    try:
        g = _section(raw, "grid")
        grid = TimeGrid(
            t_start=float(_get(g, "grid", "t_start", 0.0)),
            dt=float(_get(g, "grid", "dt")),
            n_samples=int(_get(g, "grid", "n_samples")),
        )
        p = _section(raw, "pulse")
        pulse = PulseConfig(
            fwhm=float(_get(p, "pulse", "fwhm")),
            photons_total=float(_get(p, "pulse", "photons_total")),
            t_peak=float(_get(p, "pulse", "t_peak")),
        )
        medium = _build_medium(_section(raw, "medium"))
        s = _section(raw, "scene")
        scene = SceneSpec(
            grid=PixelGrid(
                width_px=int(_get(s, "scene", "width_px", 128)),
                height_px=int(_get(s, "scene", "height_px", 128)),
            ),
            beam_waist=float(_get(s, "scene", "beam_waist", 40.0)),
            beam_center=tuple(_get(s, "scene", "beam_center", [64.0, 64.0])),
            stripe=StripeSpec(
                center_row=float(_get(s, "scene", "stripe_center_row", 64.0)),
                width=float(_get(s, "scene", "stripe_width", 12.0)),
                contrast=float(_get(s, "scene", "stripe_contrast", 1.0)),
            ),
            edge_smoothing=bool(_get(s, "scene", "edge_smoothing", True)),
        )
        d = _section(raw, "detector")
        detector = DetectorSpec(
            efficiency_eta=float(_get(d, "detector", "efficiency")),
            dark_mean=float(_get(d, "detector", "dark_mean", 0.0)),
            dark_std=float(_get(d, "detector", "dark_std", 0.0)),
            gate_width=float(_get(d, "detector", "gate_width", 2.44e-9)),
            threshold_D=float(_get(d, "detector", "threshold_D", 0.0)),
            adu_gain=float(_get(d, "detector", "adu_gain", 1.0)),
        )
        w = _section(raw, "sweep")
        sweep = SweepConfig(
            start=float(_get(w, "sweep", "start")),
            stop=float(_get(w, "sweep", "stop")),
            step=float(_get(w, "sweep", "step", detector.gate_width)),
        )
        a = raw.get("analysis", {})
        analysis = AnalysisConfig(
            window=int(a.get("window", 10)),
            snr_threshold=float(a.get("snr_threshold", 1.0)),
            persistence=int(a.get("persistence", 3)),
            region_rows=int(a.get("region_rows", 3)),
            region_cols=int(a.get("region_cols", 90)),
            flank_offset=(
                float(a["flank_offset"]) if "flank_offset" in a else None
            ),
        )
        e = raw.get("ensemble", {})
        ensemble = EnsembleConfig(
            n_seeds=int(e.get("n_seeds", 1)),
            base_seed=int(e.get("base_seed", 0)),
        )
        amp = raw.get("amplifier", {})
        excess_uses_mean = bool(amp.get("variance_excess_uses_mean", True))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return ExperimentConfig(
        grid=grid,
        pulse=pulse,
        medium=medium,
        scene=scene,
        detector=detector,
        sweep=sweep,
        analysis=analysis,
        ensemble=ensemble,
        amplifier_excess_uses_mean=excess_uses_mean,
        config_hash=config_hash(raw),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = _toml.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc
    return build_config(raw)


def with_override(cfg: ExperimentConfig, **kwargs) -> ExperimentConfig:
    """Replace top-level fields, recomputing nothing else."""
    return replace(cfg, **kwargs)
