"""Per-channel processing chain: band-pass filter, axis combination,
gain with click-free ramping, and RMS metering.

The live chain per tool is: axis combine -> band-pass -> gain.  Noise
gating is an analysis-time step (see :mod:`vibromix.trial_metrics`), not
part of the live path; the 80 Hz high-pass skirt already suppresses
low-frequency ego-vibration.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import ContractError, DesignError
from .signal_model import SampleBlock, TriAxisSeries

log = logging.getLogger(__name__)

GAIN_DB_MIN = -40.0
GAIN_DB_MAX = 10.0  # tuning ceiling, enforced everywhere

VALID_ORDERS = (2, 4, 8)


class CombineMode(str, enum.Enum):
    """How the three accelerometer axes become one drive signal."""

    F0 = "F0"  # mute (no feedback)
    F1 = "F1"  # x-axis only
    F3 = "F3"  # arithmetic sum of x+y+z


@dataclass(frozen=True)
class FilterSpec:
    """Band-pass specification.  ``order`` counts poles per skirt; the
    realized filter has 2*order poles total."""

    low_cut: float = 80.0
    high_cut: float = 1000.0
    order: int = 4

    def validate(self, rate: float) -> None:
        if not (0 < self.low_cut < self.high_cut):
            raise DesignError(
                f"need 0 < low_cut < high_cut, got ({self.low_cut}, {self.high_cut})"
            )
        if self.high_cut >= rate / 2:
            raise DesignError(
                f"high_cut {self.high_cut} Hz is at or above Nyquist ({rate / 2} Hz)"
            )
        if self.order not in VALID_ORDERS:
            raise DesignError(f"order must be one of {VALID_ORDERS}, got {self.order}")


class BiquadCascade:
    """Second-order-section filter with persistent per-section state.

    Processing a stream in blocks of any size is bit-identical to
    processing it whole: the delay-line state is carried across calls.
    """

    def __init__(self, sos: np.ndarray, rate: float):
        self.sos = np.asarray(sos, dtype=np.float64)
        if self.sos.ndim != 2 or self.sos.shape[1] != 6:
            raise ValueError(f"expected (n, 6) sos array, got {self.sos.shape}")
        self.rate = rate
        self._zi = np.zeros((self.sos.shape[0], 2))
        if not self.is_stable():
            raise DesignError("cascade has a pole on or outside the unit circle")

    @property
    def sections(self) -> list[tuple[float, float, float, float, float]]:
        """Coefficients as (b0, b1, b2, a1, a2) per section (a0 normalized)."""
        return [(s[0], s[1], s[2], s[4], s[5]) for s in self.sos]

    def is_stable(self) -> bool:
        for s in self.sos:
            poles = np.roots(s[3:])
            if np.any(np.abs(poles) >= 1.0):
                return False
        return True

    def pole_moduli(self) -> np.ndarray:
        return np.concatenate([np.abs(np.roots(s[3:])) for s in self.sos])

    def reset(self) -> None:
        self._zi[:] = 0.0

    def process(self, block: SampleBlock) -> SampleBlock:
        if block.rate != self.rate:
            raise ContractError(
                f"block rate {block.rate} != design rate {self.rate}"
            )
        out, self._zi = signal.sosfilt(self.sos, block.samples, zi=self._zi)
        return SampleBlock(out, block.rate, block.start_index)

    def frequency_response(self, freqs_hz) -> np.ndarray:
        """Complex response evaluated on the unit circle at the given
        frequencies; the numeric oracle for design checks."""
        _, h = signal.sosfreqz(self.sos, worN=np.atleast_1d(freqs_hz), fs=self.rate)
        return h

    def group_delay_s(self, at_hz: float | None = None) -> float:
        """Group delay in seconds, evaluated at ``at_hz`` (default: the
        geometric center of the passband implied by the -3 dB points)."""
        if at_hz is None:
            at_hz = self._center_hz()
        b, a = signal.sos2tf(self.sos)
        _, gd = signal.group_delay((b, a), w=[at_hz], fs=self.rate)
        return float(gd[0]) / self.rate

    def _center_hz(self) -> float:
        w = np.geomspace(1.0, self.rate / 2 * 0.999, 2048)
        h = np.abs(self.frequency_response(w))
        band = w[h >= np.max(h) / np.sqrt(2)]
        return float(np.sqrt(band[0] * band[-1]))


def design_bandpass(spec: FilterSpec, rate: float) -> BiquadCascade:
    """Butterworth band-pass as a biquad cascade (bilinear transform with
    frequency pre-warping), -3 dB at ``low_cut`` and ``high_cut``."""
    spec.validate(rate)
    sos = signal.butter(
        spec.order, [spec.low_cut, spec.high_cut], btype="bandpass",
        fs=rate, output="sos",
    )
    return BiquadCascade(sos, rate)


def filter_block(cascade: BiquadCascade, block: SampleBlock) -> SampleBlock:
    """Causal filtering; state persists across consecutive blocks."""
    return cascade.process(block)


def axis_combine(tri: TriAxisSeries, mode: CombineMode) -> SampleBlock:
    """Collapse three axes to one drive signal.

    F0 mutes, F1 copies the x-axis, F3 sums x+y+z per sample with no
    normalization.
    """
    mode = CombineMode(mode)
    if mode is CombineMode.F0:
        out = np.zeros(len(tri))
    elif mode is CombineMode.F1:
        out = tri.x.copy()
    else:
        out = tri.x + tri.y + tri.z
    return SampleBlock(out, tri.rate)


def clamp_gain_db(gain_db: float) -> float:
    """Clamp to the legal fader range, warning on the +10 dB ceiling."""
    if gain_db > GAIN_DB_MAX:
        log.warning("gain %+.2f dB above ceiling, clamped to %+.1f dB",
                    gain_db, GAIN_DB_MAX)
        return GAIN_DB_MAX
    if gain_db < GAIN_DB_MIN:
        log.warning("gain %+.2f dB below floor, clamped to %+.1f dB",
                    gain_db, GAIN_DB_MIN)
        return GAIN_DB_MIN
    return gain_db


def db_to_amplitude(gain_db: float) -> float:
    return 10.0 ** (gain_db / 20.0)


class GainSmoother:
    """Amplitude scaling with a linear ramp between gain targets.

    A new target takes effect over ``ramp_ms`` via linear amplitude
    interpolation, so live fader moves produce no step discontinuity.
    """

    def __init__(self, rate: float, gain_db: float = 0.0, ramp_ms: float = 10.0):
        if ramp_ms <= 0:
            raise ValueError("ramp_ms must be positive")
        self.rate = rate
        self.ramp_ms = ramp_ms
        self._amp = db_to_amplitude(clamp_gain_db(gain_db))
        self._target = self._amp
        self._step = 0.0
        self._remaining = 0

    @property
    def gain_db(self) -> float:
        return 20.0 * np.log10(self._target)

    def set_gain_db(self, gain_db: float) -> float:
        """Set a new target; returns the applied (possibly clamped) dB."""
        applied = clamp_gain_db(gain_db)
        self._target = db_to_amplitude(applied)
        self._remaining = max(1, int(round(self.ramp_ms / 1000.0 * self.rate)))
        self._step = (self._target - self._amp) / self._remaining
        return applied

    def process(self, block: SampleBlock) -> SampleBlock:
        n = len(block)
        if self._remaining == 0:
            return SampleBlock(block.samples * self._amp, block.rate, block.start_index)
        k = min(self._remaining, n)
        env = np.full(n, self._target)
        env[:k] = self._amp + self._step * np.arange(1, k + 1)
        self._remaining -= k
        self._amp = env[k - 1] if self._remaining else self._target
        if self._remaining == 0:
            self._amp = self._target
        return SampleBlock(block.samples * env, block.rate, block.start_index)


def apply_gain(block: SampleBlock, gain_db: float,
               ramp_state: GainSmoother | None = None) -> SampleBlock:
    """One-shot gain application.  With no ramp state the gain is applied
    instantaneously (steady-state behavior)."""
    if ramp_state is None:
        amp = db_to_amplitude(clamp_gain_db(gain_db))
        return SampleBlock(block.samples * amp, block.rate, block.start_index)
    ramp_state.set_gain_db(gain_db)
    return ramp_state.process(block)


def meter_rms(block: SampleBlock, window_ms: float) -> float:
    """RMS level over the trailing ``window_ms`` of the block (whole block
    if shorter).  Feeds the 10 Hz console meters."""
    if window_ms <= 0:
        raise ValueError("window_ms must be positive")
    n = max(1, int(round(window_ms / 1000.0 * block.rate)))
    tail = block.samples[-n:]
    if len(tail) == 0:
        return 0.0
    return float(np.sqrt(np.mean(tail.astype(np.float64) ** 2)))


class RmsMeter:
    """Stateful sliding-window RMS over a block stream."""

    def __init__(self, rate: float, window_ms: float = 300.0):
        self.window = max(1, int(round(window_ms / 1000.0 * rate)))
        self._buf = np.zeros(self.window)

    def update(self, block: SampleBlock) -> float:
        n = len(block)
        if n >= self.window:
            self._buf = block.samples[-self.window:].copy()
        elif n > 0:
            self._buf = np.roll(self._buf, -n)
            self._buf[-n:] = block.samples
        return float(np.sqrt(np.mean(self._buf**2)))


@dataclass
class ChannelStrip:
    """One tool's processing configuration."""

    mode: CombineMode = CombineMode.F3
    filter: FilterSpec | None = field(default_factory=FilterSpec)
    gain_db: float = 0.0
    gate_threshold: float = 0.0  # analysis-time gate, recorded with sessions
    ramp_ms: float = 10.0

    def __post_init__(self):
        self.mode = CombineMode(self.mode)
        self.gain_db = clamp_gain_db(self.gain_db)
        if self.gate_threshold < 0:
            raise ValueError("gate_threshold must be >= 0")


class ChannelProcessor:
    """Runtime state for one ChannelStrip: combine -> filter -> gain.

    Parameter setters are meant to be called at block boundaries only
    (the pipeline drains its control mailbox once per block).
    """

    def __init__(self, strip: ChannelStrip, rate: float):
        self.rate = rate
        self.mode = strip.mode
        self.filter_spec = strip.filter
        self.cascade = (
            design_bandpass(strip.filter, rate) if strip.filter is not None else None
        )
        self.gain = GainSmoother(rate, strip.gain_db, strip.ramp_ms)
        self.pre_meter = RmsMeter(rate)
        self.post_meter = RmsMeter(rate)
        self.pre_level = 0.0
        self.post_level = 0.0

    def set_mode(self, mode: CombineMode) -> CombineMode:
        self.mode = CombineMode(mode)
        return self.mode

    def set_gain_db(self, gain_db: float) -> float:
        return self.gain.set_gain_db(gain_db)

    def set_filter(self, spec: FilterSpec | None) -> None:
        self.filter_spec = spec
        self.cascade = design_bandpass(spec, self.rate) if spec is not None else None

    def process(self, tri: TriAxisSeries, start_index: int = 0) -> SampleBlock:
        combined = axis_combine(tri, self.mode)
        combined.start_index = start_index
        self.pre_level = self.pre_meter.update(combined)
        filtered = self.cascade.process(combined) if self.cascade else combined
        out = self.gain.process(filtered)
        self.post_level = self.post_meter.update(out)
        return out
