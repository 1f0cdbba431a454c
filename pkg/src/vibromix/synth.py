"""Synthetic ground-truth generator for the three basic tool actions:
contact, motion, and rotation.

Contacts are modeled as exponentially decaying sinusoids (the standard
contact-vibration model), motion as band-limited noise on all axes, and
rotation as a low-frequency tone plus harmonics concentrated on the
x-axis.  Everything is deterministic given a seed.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .errors import SchemaError
from .signal_model import DEFAULT_RATE, TriAxisSeries

log = logging.getLogger(__name__)

# Defaults sit inside the 80-1000 Hz feedback band, near the human
# vibrotactile sensitivity peak.
DEFAULT_CONTACT_FREQ = 250.0
DEFAULT_CONTACT_DECAY = 0.020

EVENT_KINDS = ("contact", "motion", "rotation")


def contact_transient(amplitude: float, frequency: float, decay: float,
                      direction, rate: float) -> TriAxisSeries:
    """Decaying sinusoid projected onto a unit direction vector.

    Axis i carries ``direction[i] * amplitude * exp(-t/decay) * sin(2*pi*frequency*t)``
    for t in [0, 5*decay).
    """
    if amplitude <= 0:
        raise ValueError("amplitude must be positive")
    if decay <= 0:
        raise ValueError("decay must be positive")
    direction = np.asarray(direction, dtype=np.float64)
    if direction.shape != (3,) or not math.isclose(
        float(np.linalg.norm(direction)), 1.0, rel_tol=1e-6
    ):
        raise ValueError("direction must be a 3-vector of unit norm")
    if not (80.0 <= frequency <= 1000.0):
        log.warning("contact frequency %.1f Hz outside the 80-1000 Hz band",
                    frequency)
    n = int(round(5 * decay * rate))
    t = np.arange(n) / rate
    s = amplitude * np.exp(-t / decay) * np.sin(2 * np.pi * frequency * t)
    return TriAxisSeries(direction[0] * s, direction[1] * s, direction[2] * s, rate)


def motion_noise(level: float, band: tuple[float, float], duration: float,
                 rate: float, rng: np.random.Generator | None = None) -> TriAxisSeries:
    """Stationary band-limited noise on all three axes, RMS = level per axis."""
    if level < 0:
        raise ValueError("level must be >= 0")
    rng = rng or np.random.default_rng(0)
    n = int(round(duration * rate))
    if level == 0 or n == 0:
        return TriAxisSeries.zeros(n, rate)
    sos = sps.butter(2, band, btype="bandpass", fs=rate, output="sos")
    axes = []
    for _ in range(3):
        w = rng.standard_normal(n)
        f = sps.sosfilt(sos, w)
        axes.append(f * (level / np.sqrt(np.mean(f**2))))
    return TriAxisSeries(axes[0], axes[1], axes[2], rate)


def rotation_tone(level: float, f_rot: float, duration: float, rate: float,
                  rng: np.random.Generator | None = None) -> TriAxisSeries:
    """Bearing-like rotation artifact: tone + harmonics on the x-axis with
    small leakage onto y and z.  Combined three-axis RMS = level."""
    if level < 0:
        raise ValueError("level must be >= 0")
    n = int(round(duration * rate))
    if level == 0 or n == 0:
        return TriAxisSeries.zeros(n, rate)
    t = np.arange(n) / rate
    x = np.zeros(n)
    for k, a in enumerate((1.0, 0.5, 0.25), start=1):
        x += a * np.sin(2 * np.pi * k * f_rot * t + 0.3 * k)
    # 5% amplitude leakage keeps the x:(y+z) energy ratio well above 10:1
    y = 0.05 * np.sin(2 * np.pi * f_rot * t + 1.1)
    z = 0.05 * np.sin(2 * np.pi * f_rot * t + 2.2)
    total_rms = np.sqrt(np.mean(x**2 + y**2 + z**2))
    scale = level / total_rms
    return TriAxisSeries(x * scale, y * scale, z * scale, rate)


@dataclass
class ScenarioEvent:
    """One timed synthetic event."""

    t0: float
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise SchemaError(f"unknown event kind {self.kind!r}")
        if self.t0 < 0:
            raise SchemaError("event t0 must be >= 0")


@dataclass
class ScenarioScript:
    """Timed list of synthetic events plus an optional noise floor."""

    rate: float = DEFAULT_RATE
    duration: float = 10.0
    events: list[ScenarioEvent] = field(default_factory=list)
    noise_floor: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.events = [
            e if isinstance(e, ScenarioEvent) else ScenarioEvent(**e)
            for e in self.events
        ]
        if sorted(e.t0 for e in self.events) != [e.t0 for e in self.events]:
            raise SchemaError("events must be sorted by t0")
        for e in self.events:
            if e.kind == "contact":
                decay = e.params.get("decay", DEFAULT_CONTACT_DECAY)
                if e.t0 + 5 * decay > self.duration + 1e-9:
                    raise SchemaError(
                        f"contact at t0={e.t0} does not fit in duration {self.duration}"
                    )

    @classmethod
    def from_json(cls, text: str) -> "ScenarioScript":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"scenario script is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise SchemaError("scenario script must be a JSON object")
        return cls(
            rate=doc.get("rate", DEFAULT_RATE),
            duration=doc.get("duration", 10.0),
            events=doc.get("events", []),
            noise_floor=doc.get("noise_floor", 0.0),
            seed=doc.get("seed", 0),
        )

    @classmethod
    def load(cls, path) -> "ScenarioScript":
        return cls.from_json(Path(path).read_text())

    def to_json(self) -> str:
        return json.dumps(
            {
                "rate": self.rate,
                "duration": self.duration,
                "noise_floor": self.noise_floor,
                "seed": self.seed,
                "events": [
                    {"t0": e.t0, "kind": e.kind, "params": e.params}
                    for e in self.events
                ],
            },
            indent=2,
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def _render_event(event: ScenarioEvent, rate: float,
                  rng: np.random.Generator) -> TriAxisSeries:
    p = event.params
    if event.kind == "contact":
        return contact_transient(
            p.get("amplitude", 1.0),
            p.get("frequency", DEFAULT_CONTACT_FREQ),
            p.get("decay", DEFAULT_CONTACT_DECAY),
            p.get("direction", (1.0, 0.0, 0.0)),
            rate,
        )
    if event.kind == "motion":
        return motion_noise(
            p.get("level", 0.1),
            tuple(p.get("band", (20.0, 400.0))),
            p.get("duration", 1.0),
            rate,
            rng,
        )
    return rotation_tone(
        p.get("level", 0.1),
        p.get("frequency", 30.0),
        p.get("duration", 1.0),
        rate,
        rng,
    )


def render_scenario(script: ScenarioScript,
                    mixing_matrix: np.ndarray | None = None
                    ) -> tuple[TriAxisSeries, list[dict]]:
    """Superpose all events onto a zero (or noise-floor) baseline.

    Returns the rendered series and a ground-truth event table with exact
    onset sample indices.  Overlapping events sum.  ``mixing_matrix`` is
    an optional 3x3 attenuation/crosstalk matrix applied to the result,
    standing in for sensor-location effects.
    """
    n = int(round(script.duration * script.rate))
    rng = np.random.default_rng(script.seed)
    axes = np.zeros((3, n))
    table = []
    for event in script.events:
        rendered = _render_event(event, script.rate, rng)
        onset = int(round(event.t0 * script.rate))
        stop = min(n, onset + len(rendered))
        axes[:, onset:stop] += rendered.axes[:, : stop - onset]
        table.append(
            {
                "t0": event.t0,
                "onset_sample": onset,
                "kind": event.kind,
                "params": event.params,
            }
        )
    if script.noise_floor > 0:
        noise = motion_noise(
            script.noise_floor, (20.0, 2000.0), script.duration, script.rate, rng
        )
        axes += noise.axes
    if mixing_matrix is not None:
        axes = np.asarray(mixing_matrix, dtype=np.float64) @ axes
    return TriAxisSeries.from_axes(axes, script.rate), table


def apply_mixing(series: TriAxisSeries, matrix: np.ndarray) -> TriAxisSeries:
    """Apply a 3x3 attenuation/crosstalk matrix to a series."""
    return TriAxisSeries.from_axes(
        np.asarray(matrix, dtype=np.float64) @ series.axes, series.rate, series.kind
    )
