"""Core sampled-signal types shared by every other module.

Unit conventions used throughout the package:

* acceleration in m/s², force in N, drive signals dimensionless
* gain in dB, frequency in Hz
* signal energy in (unit)²·s

Values are stored as float arrays (at least 32-bit); energy sums are
accumulated in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RangeError

#: Default internal processing rate.  Covers the 80-1000 Hz band of
#: interest with >= 4x oversampling.
DEFAULT_RATE = 8000.0

SERIES_KINDS = ("acceleration", "force", "drive")


@dataclass
class SampleBlock:
    """A contiguous run of single-channel samples.

    ``start_index`` is the sample offset from the origin of the stream
    this block belongs to; blocks of one stream share one rate.
    """

    samples: np.ndarray
    rate: float
    start_index: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("SampleBlock samples must be one-dimensional")
        if self.rate <= 0:
            raise ValueError(f"rate must be positive, got {self.rate}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.rate


@dataclass
class TriAxisSeries:
    """Uniformly sampled x/y/z stream (acceleration, force, or drive)."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    rate: float
    kind: str = "acceleration"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        self.z = np.asarray(self.z, dtype=np.float64)
        if not (len(self.x) == len(self.y) == len(self.z)):
            raise ValueError(
                "axis lengths differ: "
                f"x={len(self.x)} y={len(self.y)} z={len(self.z)}"
            )
        if self.rate <= 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if self.kind not in SERIES_KINDS:
            raise ValueError(f"kind must be one of {SERIES_KINDS}, got {self.kind!r}")

    def __len__(self) -> int:
        return len(self.x)

    @property
    def duration(self) -> float:
        return len(self.x) / self.rate

    @property
    def axes(self) -> np.ndarray:
        """Axes stacked as a (3, n) array."""
        return np.stack([self.x, self.y, self.z])

    @classmethod
    def zeros(cls, n: int, rate: float, kind: str = "acceleration") -> "TriAxisSeries":
        return cls(np.zeros(n), np.zeros(n), np.zeros(n), rate, kind)

    @classmethod
    def from_axes(cls, axes: np.ndarray, rate: float, kind: str = "acceleration") -> "TriAxisSeries":
        axes = np.asarray(axes, dtype=np.float64)
        if axes.shape[0] != 3:
            raise ValueError(f"expected (3, n) axes array, got shape {axes.shape}")
        return cls(axes[0], axes[1], axes[2], rate, kind)


def slice_series(series: TriAxisSeries, t0: float, t1: float) -> TriAxisSeries:
    """Return the samples of ``series`` in the half-open window [t0, t1).

    The sample at time t1 itself is excluded, so adjacent slices
    concatenate back to the original sample-exactly.
    """
    if not (0 <= t0 < t1 <= series.duration + 1e-12):
        raise RangeError(
            f"window [{t0}, {t1}) outside series of duration {series.duration}"
        )
    i0 = int(round(t0 * series.rate))
    i1 = int(round(t1 * series.rate))
    return TriAxisSeries(
        series.x[i0:i1], series.y[i0:i1], series.z[i0:i1], series.rate, series.kind
    )


def magnitude(series: TriAxisSeries) -> SampleBlock:
    """Per-sample Euclidean norm sqrt(x² + y² + z²)."""
    mag = np.sqrt(series.x**2 + series.y**2 + series.z**2)
    return SampleBlock(mag, series.rate)


def concat(blocks: list[SampleBlock]) -> SampleBlock:
    """Concatenate consecutive blocks of one stream."""
    if not blocks:
        raise ValueError("nothing to concatenate")
    rate = blocks[0].rate
    if any(b.rate != rate for b in blocks):
        raise ValueError("blocks have mismatched rates")
    return SampleBlock(
        np.concatenate([b.samples for b in blocks]), rate, blocks[0].start_index
    )
