"""Stripe-visibility and SNR analysis of gated frame stacks.

Per frame: spatially averaged counts over two flank rectangles (pooled to
I_max) and one stripe-center rectangle (I_min), threshold-corrected
visibility

    M = (n_max - n_min - D) / (n_max + n_min - D),

running standard deviation of the previous `window` visibilities as the
uncertainty, SNR(t) = M(t)^2 / dM(t)^2, background-subtracted cumulative
SNR and the first persistent threshold crossing as the detection time.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .detector import FrameStack
from .errors import AnalysisError


@dataclass(frozen=True)
class Rect:
    """Pixel rectangle: rows [row0, row0+height), cols [col0, col0+width)."""

    row0: int
    col0: int
    height: int
    width: int

    def __post_init__(self):
        if self.height <= 0 or self.width <= 0:
            raise ValueError("rectangle must have positive size")

    def slice(self) -> tuple:
        return (
            slice(self.row0, self.row0 + self.height),
            slice(self.col0, self.col0 + self.width),
        )


@dataclass(frozen=True)
class RegionSpec:
    """Two flank rectangles (fringe maxima) and one stripe-center rectangle."""

    flank_a: Rect
    flank_b: Rect
    center: Rect


def default_regions(
    stripe_center_row: float,
    stripe_width: float,
    beam_center_col: float,
    rows: int = 3,
    cols: int = 90,
    flank_offset: float | None = None,
) -> RegionSpec:
    """3 x 90 analysis rectangles centered on the beam column, one in the
    stripe center and one on each flank."""
    if flank_offset is None:
        flank_offset = stripe_width / 2.0 + 2.0 + rows
    col0 = int(round(beam_center_col - cols / 2.0))
    row_c = int(round(stripe_center_row - rows / 2.0))
    row_a = int(round(stripe_center_row - flank_offset - rows / 2.0))
    row_b = int(round(stripe_center_row + flank_offset - rows / 2.0))
    return RegionSpec(
        flank_a=Rect(row_a, col0, rows, cols),
        flank_b=Rect(row_b, col0, rows, cols),
        center=Rect(row_c, col0, rows, cols),
    )


def region_mean(frame_counts: np.ndarray, region: Rect) -> float:
    """Arithmetic mean of the counts inside the rectangle."""
    h, w = frame_counts.shape
    if (
        region.row0 < 0
        or region.col0 < 0
        or region.row0 + region.height > h
        or region.col0 + region.width > w
    ):
        raise AnalysisError("analysis region out of frame bounds")
    return float(np.mean(frame_counts[region.slice()]))


def visibility(i_max: float, i_min: float) -> float:
    """Plain stripe visibility; NaN marks a zero denominator."""
    denom = i_max + i_min
    if denom == 0.0:
        return math.nan
    return (i_max - i_min) / denom


def visibility_corrected(n_max: float, n_min: float, threshold_d: float) -> float:
    """Threshold-corrected visibility; reduces to plain visibility at D = 0."""
    denom = n_max + n_min - threshold_d
    if denom == 0.0:
        return math.nan
    return (n_max - n_min - threshold_d) / denom


@dataclass(frozen=True)
class VisibilityTrace:
    delays: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)
    dm: np.ndarray = field(repr=False)
    snr: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)
    window: int = 10

    def __post_init__(self):
        for name in ("delays", "m", "dm", "snr", "valid"):
            a = np.asarray(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return len(self.delays)


def visibility_trace(
    stack: FrameStack, regions: RegionSpec, threshold_d: float, window: int = 10
) -> VisibilityTrace:
    """Per-frame visibility, running uncertainty and SNR.

    dM at frame i is the sample standard deviation of the `window`
    strictly previous visibilities (causal statistic); the first `window`
    frames are flagged as warm-up.
    """
    n = len(stack)
    if n <= window:
        raise AnalysisError(f"stack of {n} frames too short for window {window}")
    counts = stack.counts
    all_frames = (slice(None),)
    mean_a = counts[all_frames + regions.flank_a.slice()].mean(axis=(1, 2))
    mean_b = counts[all_frames + regions.flank_b.slice()].mean(axis=(1, 2))
    n_max = 0.5 * (mean_a + mean_b)
    n_min = counts[all_frames + regions.center.slice()].mean(axis=(1, 2))

    denom = n_max + n_min - threshold_d
    m = np.full(n, np.nan)
    nonzero = denom != 0.0
    m[nonzero] = (n_max[nonzero] - n_min[nonzero] - threshold_d) / denom[nonzero]

    dm = np.full(n, np.nan)
    for i in range(window, n):
        prev = m[i - window : i]
        if np.all(np.isfinite(prev)):
            dm[i] = np.std(prev, ddof=1)

    snr = np.full(n, np.nan)
    ok = np.isfinite(m) & np.isfinite(dm) & (dm > 0)
    snr[ok] = m[ok] ** 2 / dm[ok] ** 2
    return VisibilityTrace(
        delays=np.asarray(stack.delays, dtype=float),
        m=m,
        dm=dm,
        snr=snr,
        valid=ok,
        window=window,
    )


def background_snr_floor(trace: VisibilityTrace, fraction: float = 0.25) -> float:
    """Mean SNR over the valid frames in the pre-pulse (first ``fraction``)
    part of the sweep.  Zero if no valid frame exists there, which happens
    for noiseless detectors where pre-pulse frames carry no counts."""
    k = max(int(len(trace) * fraction), 1)
    pre = trace.snr[:k][trace.valid[:k]]
    if len(pre) == 0:
        return 0.0
    return float(np.mean(pre))


def integrated_snr(
    trace: VisibilityTrace, background_floor: float | None = None
) -> np.ndarray:
    """Running trapezoid integral of (SNR - background floor) over gate delay.

    Invalid frames contribute nothing (the cumulative value holds).  No
    clamping: contributions go negative wherever the floor exceeds the SNR.
    """
    if background_floor is None:
        background_floor = background_snr_floor(trace)
    s = np.where(trace.valid, trace.snr - background_floor, 0.0)
    out = np.zeros(len(trace))
    dt = np.diff(trace.delays)
    np.cumsum(0.5 * (s[1:] + s[:-1]) * dt, out=out[1:])
    return out


NO_DETECTION = math.nan


def detection_time(
    trace: VisibilityTrace, threshold: float = 1.0, persistence: int = 3
) -> float:
    """Gate delay where the SNR first stays at or above ``threshold`` for
    ``persistence`` consecutive valid frames, linearly interpolated between
    the last sub-threshold frame and the first super-threshold one.
    Returns NaN when the trace never crosses."""
    above = trace.valid & (trace.snr >= threshold)
    run = 0
    for i in range(len(trace)):
        run = run + 1 if above[i] else 0
        if run >= persistence:
            k = i - persistence + 1  # first frame of the persistent run
            if (
                k > 0
                and trace.valid[k - 1]
                and trace.snr[k - 1] < threshold
                and trace.snr[k] > trace.snr[k - 1]
            ):
                frac = (threshold - trace.snr[k - 1]) / (
                    trace.snr[k] - trace.snr[k - 1]
                )
                return float(
                    trace.delays[k - 1]
                    + frac * (trace.delays[k] - trace.delays[k - 1])
                )
            return float(trace.delays[k])
    return NO_DETECTION


@dataclass(frozen=True)
class DetectionReport:
    t_detect_reference: float
    t_detect_fast: float
    advancement: float  # t_detect_reference - t_detect_fast
    relative_advancement: float  # advancement / initial pulse FWHM (NaN if unknown)
    integrated_reference: np.ndarray = field(repr=False)
    integrated_fast: np.ndarray = field(repr=False)
    window_fast_exceeds_reference: tuple | None = None


def _exceedance_window(
    delays: np.ndarray, fast_cum: np.ndarray, ref_cum: np.ndarray
) -> tuple | None:
    """Contiguous delay window where the fast cumulative SNR is strictly
    above the reference one, containing the point of maximum excess."""
    diff = fast_cum - ref_cum
    above = diff > 0
    if not np.any(above):
        return None
    peak = int(np.argmax(diff))
    if not above[peak]:
        return None
    lo = peak
    while lo > 0 and above[lo - 1]:
        lo -= 1
    hi = peak
    while hi < len(above) - 1 and above[hi + 1]:
        hi += 1
    return (float(delays[lo]), float(delays[hi]))


def compare(
    reference: VisibilityTrace,
    fast: VisibilityTrace,
    pulse_fwhm: float | None = None,
    threshold: float = 1.0,
    persistence: int = 3,
) -> DetectionReport:
    """Assemble the detection report for a reference/fast channel pair."""
    if len(reference) != len(fast) or not np.array_equal(
        reference.delays, fast.delays
    ):
        raise AnalysisError("traces must share the same delay axis")
    t_ref = detection_time(reference, threshold, persistence)
    t_fast = detection_time(fast, threshold, persistence)
    adv = t_ref - t_fast
    cum_ref = integrated_snr(reference)
    cum_fast = integrated_snr(fast)
    return DetectionReport(
        t_detect_reference=t_ref,
        t_detect_fast=t_fast,
        advancement=adv,
        relative_advancement=adv / pulse_fwhm if pulse_fwhm else math.nan,
        integrated_reference=cum_ref,
        integrated_fast=cum_fast,
        window_fast_exceeds_reference=_exceedance_window(
            reference.delays, cum_fast, cum_ref
        ),
    )


def write_trace_csv(
    path, trace: VisibilityTrace, cumulative: np.ndarray, header_meta: dict
) -> None:
    """CSV with one row per gate delay; metadata embedded as '#' comments."""
    with open(path, "w", newline="") as fh:
        for key in sorted(header_meta):
            fh.write(f"# {key}={header_meta[key]}\n")
        writer = csv.writer(fh)
        writer.writerow(["gate_delay_s", "visibility", "visibility_std", "snr", "cumulative_snr"])
        for i in range(len(trace)):
            writer.writerow(
                [
                    repr(float(trace.delays[i])),
                    repr(float(trace.m[i])),
                    repr(float(trace.dm[i])),
                    repr(float(trace.snr[i])),
                    repr(float(cumulative[i])),
                ]
            )


def read_trace_csv(path) -> tuple[dict, dict]:
    """Inverse of :func:`write_trace_csv`: (metadata, column arrays)."""
    meta = {}
    rows = []
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
            rows.append([float(c) for c in cells])
    data = np.array(rows) if rows else np.zeros((0, 5))
    cols = {name: data[:, j] for j, name in enumerate(header or [])}
    return meta, cols
