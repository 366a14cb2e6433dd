"""Plot-ready flat-file export of run artifacts.

Projects the CSV artifacts written by an ensemble run into per-figure
series files (one CSV per curve) plus a small JSON manifest describing
axes and units, so external plotting tools never have to parse the run
directory themselves.  Values are copied verbatim from the artifacts --
no statistic is recomputed here.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import read_trace_csv
from .errors import MissingSeriesError

FIGURE_IDS = ("arrival", "visibility", "snr", "integrated_snr")

_CHANNELS = ("reference", "fast")

_AXES = {
    "arrival": ("gate delay", "s", "expected counts", "counts"),
    "visibility": ("gate delay", "s", "stripe visibility", "1"),
    "snr": ("gate delay", "s", "visibility SNR", "1"),
    "integrated_snr": ("gate delay", "s", "cumulative SNR", "s"),
}

_TRACE_COLUMN = {
    "visibility": "visibility",
    "snr": "snr",
    "integrated_snr": "cumulative_snr",
}


@dataclass(frozen=True)
class Series:
    name: str
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("series needs matched 1-d x and y")
        if len(x) > 1 and np.any(np.diff(x) <= 0):
            raise ValueError("series x axis must be strictly increasing")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class FigureBundle:
    figure_id: str
    x_label: str
    x_unit: str
    y_label: str
    y_unit: str
    series: tuple
    config_hash: str = ""

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(f"unknown figure id {self.figure_id!r}")
        lengths = {len(s.x) for s in self.series}
        if len(lengths) > 1:
            raise ValueError("all series in a bundle must share one length")


def _read_two_column_csv(path: Path) -> tuple[dict, np.ndarray, np.ndarray]:
    meta = {}
    xs, ys = [], []
    with open(path, newline="") as fh:
        header = None
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value
                continue
            cells = next(csv.reader([line]))
            if header is None:
                header = cells
                continue
            xs.append(float(cells[0]))
            ys.append(float(cells[1]))
    return meta, np.array(xs), np.array(ys)


def _require(path: Path, figure_id: str) -> Path:
    if not path.is_file():
        raise MissingSeriesError(
            f"figure {figure_id!r} needs {path.name}, not found in {path.parent}"
        )
    return path


def build_bundle(artifacts_dir, figure_id: str) -> FigureBundle:
    """Assemble one figure's series from a run directory, copying values."""
    if figure_id not in FIGURE_IDS:
        raise MissingSeriesError(
            f"unknown figure {figure_id!r}; choose from {', '.join(FIGURE_IDS)}"
        )
    root = Path(artifacts_dir)
    x_label, x_unit, y_label, y_unit = _AXES[figure_id]
    series = []
    config_hash = ""
    if figure_id == "arrival":
        for ch in _CHANNELS:
            meta, x, y = _read_two_column_csv(
                _require(root / f"arrival_{ch}.csv", figure_id)
            )
            config_hash = meta.get("config_hash", config_hash)
            series.append(Series(name=ch, x=x, y=y))
    else:
        column = _TRACE_COLUMN[figure_id]
        for ch in _CHANNELS:
            meta, cols = read_trace_csv(
                _require(root / f"trace_{ch}_mean.csv", figure_id)
            )
            if column not in cols or len(cols[column]) == 0:
                raise MissingSeriesError(
                    f"trace_{ch}_mean.csv carries no '{column}' series"
                )
            config_hash = meta.get("config_hash", config_hash)
            series.append(Series(name=ch, x=cols["gate_delay_s"], y=cols[column]))
        if figure_id == "snr":
            x = series[0].x
            series.append(Series(name="threshold", x=x, y=np.ones_like(x)))
    return FigureBundle(
        figure_id=figure_id,
        x_label=x_label,
        x_unit=x_unit,
        y_label=y_label,
        y_unit=y_unit,
        series=tuple(series),
        config_hash=config_hash,
    )


def write_bundle(bundle: FigureBundle, out_dir) -> list[Path]:
    """Write one CSV per series plus ``<figure>_manifest.json``.

    Returns the written paths in deterministic (series, then manifest) order.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    entries = []
    for s in bundle.series:
        path = out / f"{bundle.figure_id}_{s.name}.csv"
        with open(path, "w", newline="") as fh:
            fh.write(f"# config_hash={bundle.config_hash}\n")
            fh.write(f"# figure={bundle.figure_id}\n")
            fh.write(f"# series={s.name}\n")
            writer = csv.writer(fh)
            writer.writerow(["x", "y"])
            for xv, yv in zip(s.x, s.y):
                writer.writerow([repr(float(xv)), repr(float(yv))])
        written.append(path)
        entries.append({"series": s.name, "file": path.name, "points": len(s.x)})
    manifest = {
        "figure": bundle.figure_id,
        "config_hash": bundle.config_hash,
        "x_label": bundle.x_label,
        "x_unit": bundle.x_unit,
        "y_label": bundle.y_label,
        "y_unit": bundle.y_unit,
        "series": entries,
    }
    manifest_path = out / f"{bundle.figure_id}_manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(manifest_path)
    return written


def emit_figure(artifacts_dir, figure_id: str, out_dir=None) -> list[Path]:
    """Project run artifacts into one figure's flat files (see module doc)."""
    bundle = build_bundle(artifacts_dir, figure_id)
    return write_bundle(bundle, out_dir if out_dir is not None else artifacts_dir)
