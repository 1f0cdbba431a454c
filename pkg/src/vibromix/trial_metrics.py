"""Per-trial interaction metrics: noise-gate thresholding, RMS, and
zero-crossing rate on acceleration and force streams.

Defaults follow the analysis thresholds of 0.3 m/s² for acceleration and
0.2 N for force magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dsp import CombineMode, axis_combine
from .signal_model import SampleBlock, TriAxisSeries, magnitude

ACCEL_THRESHOLD = 0.3  # m/s²
FORCE_THRESHOLD = 0.2  # N


def gate(block: SampleBlock, threshold: float) -> SampleBlock:
    """Zero every sample whose magnitude is below the threshold."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    out = np.where(np.abs(block.samples) < threshold, 0.0, block.samples)
    return SampleBlock(out, block.rate, block.start_index)


def rms(block: SampleBlock) -> float:
    if len(block) == 0:
        return 0.0
    return float(np.sqrt(np.mean(block.samples.astype(np.float64) ** 2)))


def zcr(block: SampleBlock) -> float:
    """Zero crossings per second.

    A crossing is a sign change from positive to negative or vice versa;
    runs of exact zeros between opposite signs count as one crossing
    (gating must not create phantom crossings).
    """
    if len(block) == 0 or block.duration <= 0:
        return 0.0
    signs = np.sign(block.samples)
    signs = signs[signs != 0]
    if len(signs) < 2:
        return 0.0
    crossings = int(np.count_nonzero(np.diff(signs)))
    return crossings / block.duration


@dataclass
class Thresholds:
    accel: float = ACCEL_THRESHOLD  # m/s²
    force: float = FORCE_THRESHOLD  # N


@dataclass
class StreamMetrics:
    rms: float
    zcr_hz: float
    threshold: float


@dataclass
class TrialMetrics:
    """Per-trial summary: gated RMS and ZCR per stream plus timing."""

    accel: dict[str, StreamMetrics] = field(default_factory=dict)  # per tool
    force: StreamMetrics | None = None
    completion_time_s: float = 0.0
    thresholds: Thresholds = field(default_factory=Thresholds)
    omissions: list[str] = field(default_factory=list)

    def to_rows(self) -> list[dict]:
        rows = []
        for tool, m in sorted(self.accel.items()):
            rows.append({"stream": f"accel_{tool}", "rms": m.rms,
                         "zcr_hz": m.zcr_hz, "threshold": m.threshold})
        if self.force is not None:
            rows.append({"stream": "force", "rms": self.force.rms,
                         "zcr_hz": self.force.zcr_hz,
                         "threshold": self.force.threshold})
        return rows


def _accel_stream(series: TriAxisSeries, combine: CombineMode) -> SampleBlock:
    return axis_combine(series, combine)


def stream_metrics(block: SampleBlock, threshold: float) -> StreamMetrics:
    gated = gate(block, threshold)
    return StreamMetrics(rms=rms(gated), zcr_hz=zcr(gated), threshold=threshold)


def trial_report(session, thresholds: Thresholds | None = None,
                 combine: CombineMode = CombineMode.F3) -> TrialMetrics:
    """Metrics for one recorded session.

    ``session`` must expose ``accel_series`` (dict tool -> TriAxisSeries),
    ``force_series`` (TriAxisSeries of kind force, or None), and
    ``duration`` in seconds; :class:`vibromix.pipeline.SessionLog` and
    session directories loaded via :mod:`vibromix.session_io` both do.
    The acceleration metric stream is the summed (F3) signal per tool by
    default, configurable to F1 via ``combine``.
    """
    thresholds = thresholds or Thresholds()
    report = TrialMetrics(thresholds=thresholds,
                          completion_time_s=float(session.duration))
    accel = getattr(session, "accel_series", None) or {}
    for tool, series in sorted(accel.items()):
        block = _accel_stream(series, combine)
        report.accel[tool] = stream_metrics(block, thresholds.accel)
    if not accel:
        report.omissions.append("no acceleration streams in session")
    force = getattr(session, "force_series", None)
    if force is not None:
        report.force = stream_metrics(magnitude(force), thresholds.force)
    else:
        report.omissions.append("no force stream in session")
    return report
