"""Sensor/actuator placement analysis: SNR over basic actions, per-axis
acceleration signal energy, and handle-to-source energy ratios.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .signal_model import SampleBlock, TriAxisSeries

log = logging.getLogger(__name__)

ACTIONS = ("rotation", "motion", "contact", "idle")
AXES = ("x", "y", "z")


@dataclass
class LabeledRecording:
    """One recorded trial tagged with sensor location and action class."""

    series: TriAxisSeries
    location: str
    action: str
    trial: int = 0

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"action must be one of {ACTIONS}, got {self.action!r}")


def rms3(series: TriAxisSeries) -> float:
    """Combined three-axis RMS: sqrt(mean(x² + y² + z²))."""
    if len(series) == 0:
        raise ValueError("rms3 of an empty series")
    return float(np.sqrt(np.mean(series.x**2 + series.y**2 + series.z**2)))


def snr(signal_rec: LabeledRecording, noise_rec: LabeledRecording,
        per_axis: bool = False):
    """Signal-to-noise ratio in dB (power convention, 10*log10).

    The signal is an action recording, the noise an idle recording from
    the same location.  ``per_axis=True`` returns a dict of single-axis
    SNRs instead of the combined value.
    """
    if noise_rec.action != "idle":
        raise ValueError("noise recording must have action 'idle'")
    if signal_rec.location != noise_rec.location:
        raise ValueError(
            f"location mismatch: {signal_rec.location!r} vs {noise_rec.location!r}"
        )
    if per_axis:
        out = {}
        for axis in AXES:
            s = getattr(signal_rec.series, axis)
            n = getattr(noise_rec.series, axis)
            np_pow = float(np.mean(n**2))
            if np_pow == 0:
                raise ValueError(f"zero noise power on axis {axis}")
            out[axis] = 10.0 * np.log10(float(np.mean(s**2)) / np_pow)
        return out
    noise_rms = rms3(noise_rec.series)
    if noise_rms == 0:
        raise ValueError("zero noise power (degenerate idle recording)")
    return 10.0 * np.log10((rms3(signal_rec.series) / noise_rms) ** 2)


def ase(series):
    """Acceleration signal energy: sum(a[n]²)/rate, units (unit)²·s.

    For a TriAxisSeries returns (Ex, Ey, Ez); for a SampleBlock, a scalar.
    """
    if isinstance(series, SampleBlock):
        return float(np.sum(series.samples.astype(np.float64) ** 2) / series.rate)
    return tuple(
        float(np.sum(a.astype(np.float64) ** 2) / series.rate) for a in series.axes
    )


def e_ratio(handle: TriAxisSeries, source: TriAxisSeries) -> float:
    """Ratio of summed three-axis energies, handle over source."""
    if handle.rate != source.rate or len(handle) != len(source):
        raise ValueError("handle and source must share duration and rate")
    num = sum(ase(handle))
    den = sum(ase(source))
    if den == 0:
        raise ValueError("zero source energy")
    return num / den


@dataclass
class SnrCell:
    location: str
    action: str
    mean_db: float
    std_db: float
    n_trials: int


@dataclass
class SnrReport:
    """Aggregated SNR per (location, action), with per-axis contact SNR
    and the best-location selection (or an explicit tie)."""

    cells: list[SnrCell]
    per_axis_contact: dict[str, dict[str, float]]
    best_location: str | None
    tied_locations: list[str]
    omitted: list[str] = field(default_factory=list)

    def cell(self, location: str, action: str) -> SnrCell | None:
        for c in self.cells:
            if c.location == location and c.action == action:
                return c
        return None

    def to_rows(self) -> list[dict]:
        return [
            {
                "location": c.location,
                "action": c.action,
                "mean_snr_db": c.mean_db,
                "std_snr_db": c.std_db,
                "n_trials": c.n_trials,
            }
            for c in self.cells
        ]


@dataclass
class EnergyRatioReport:
    """Per actuator location: mean and std of the energy ratio."""

    rows: list[dict]  # {"location", "mean", "std", "n"}
    best_location: str | None

    def to_rows(self) -> list[dict]:
        return self.rows


def placement_report(dataset: list[LabeledRecording],
                     rotation_ceiling: float | None = None,
                     tie_tol_db: float = 1e-9) -> SnrReport:
    """Aggregate SNR per (location, action) and select the best location.

    Selection rule: among locations whose rotation SNR does not exceed
    ``rotation_ceiling`` (default: their own contact SNR), pick the one
    maximizing contact SNR.  Ties within ``tie_tol_db`` are reported, not
    silently broken.  Cells without an idle recording at that location
    are omitted and listed in the report.
    """
    locations = sorted({r.location for r in dataset})
    noise_by_loc = {
        loc: [r for r in dataset if r.location == loc and r.action == "idle"]
        for loc in locations
    }
    cells: list[SnrCell] = []
    per_axis_contact: dict[str, dict[str, float]] = {}
    omitted: list[str] = []
    for loc in locations:
        noises = noise_by_loc[loc]
        for action in ("rotation", "motion", "contact"):
            recs = [r for r in dataset if r.location == loc and r.action == action]
            if not recs:
                continue
            if not noises:
                omitted.append(f"{loc}/{action}: no idle recording at {loc}")
                continue
            values = [snr(r, noises[min(i, len(noises) - 1)])
                      for i, r in enumerate(recs)]
            cells.append(SnrCell(loc, action, float(np.mean(values)),
                                 float(np.std(values)), len(values)))
            if action == "contact":
                ax_vals = [snr(r, noises[min(i, len(noises) - 1)], per_axis=True)
                           for i, r in enumerate(recs)]
                per_axis_contact[loc] = {
                    axis: float(np.mean([v[axis] for v in ax_vals])) for axis in AXES
                }

    by_loc = {loc: {c.action: c for c in cells if c.location == loc}
              for loc in locations}
    candidates = []
    for loc in locations:
        contact = by_loc[loc].get("contact")
        if contact is None:
            continue
        rotation = by_loc[loc].get("rotation")
        ceiling = rotation_ceiling if rotation_ceiling is not None else contact.mean_db
        if rotation is not None and rotation.mean_db > ceiling:
            continue
        candidates.append((contact.mean_db, loc))

    best, tied = None, []
    if len(candidates) == 1:
        best = candidates[0][1]
    elif candidates:
        candidates.sort(reverse=True)
        top = candidates[0][0]
        tied = [loc for val, loc in candidates if abs(val - top) <= tie_tol_db]
        if len(tied) == 1:
            best, tied = tied[0], []
        else:
            log.info("placement tie between %s", tied)
    return SnrReport(cells, per_axis_contact, best, tied, omitted)


def actuator_report(pairs: list[tuple[str, TriAxisSeries, TriAxisSeries]]
                    ) -> EnergyRatioReport:
    """Aggregate energy ratios per actuator location.

    ``pairs`` holds (location, handle_series, source_series) trials.
    """
    by_loc: dict[str, list[float]] = {}
    for loc, handle, source in pairs:
        by_loc.setdefault(loc, []).append(e_ratio(handle, source))
    rows = [
        {
            "location": loc,
            "mean": float(np.mean(vals)),
            "std": float(np.std(vals)),
            "n": len(vals),
        }
        for loc, vals in sorted(by_loc.items())
    ]
    best = max(rows, key=lambda r: r["mean"])["location"] if rows else None
    return EnergyRatioReport(rows, best)
