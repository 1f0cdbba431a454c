"""Signal-reproduction fidelity: cross-correlation delay estimation and
Pearson correlation between tool-side and handle-side summed signals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .dsp import CombineMode, axis_combine
from .signal_model import SampleBlock, TriAxisSeries

DEFAULT_MAX_LAG_S = 0.5


@dataclass
class FidelityReport:
    r: float
    delay_s: float
    lag_samples: int
    channel: str = ""

    def to_row(self) -> dict:
        return {
            "channel": self.channel,
            "r": self.r,
            "delay_s": self.delay_s,
            "lag_samples": self.lag_samples,
        }


def _as_samples(x) -> np.ndarray:
    if isinstance(x, SampleBlock):
        return x.samples
    return np.asarray(x, dtype=np.float64)


def xcorr_lag(a, b, max_lag_s: float, rate: float | None = None) -> int:
    """Lag (in samples) maximizing the normalized cross-correlation of the
    mean-removed signals, searched over [-max_lag, +max_lag].

    Positive lag means ``b`` trails ``a`` (b is a delayed copy of a).
    """
    if isinstance(a, SampleBlock):
        if rate is not None and rate != a.rate:
            raise ValueError("explicit rate disagrees with block rate")
        rate = a.rate
        if isinstance(b, SampleBlock) and b.rate != rate:
            raise ValueError("inputs have different rates")
    if rate is None:
        raise ValueError("rate required for plain-array inputs")
    xa = _as_samples(a)
    xb = _as_samples(b)
    max_lag = int(round(max_lag_s * rate))
    if max_lag >= min(len(xa), len(xb)):
        raise ValueError("max_lag_s must be shorter than both signals")
    xa = xa - xa.mean()
    xb = xb - xb.mean()
    if not xa.any() or not xb.any():
        raise ValueError("constant (zero-variance) input")
    # full cross-correlation; index k corresponds to lag k - (len(xa) - 1)
    c = sps.correlate(xb, xa, mode="full", method="auto")
    lags = sps.correlation_lags(len(xb), len(xa), mode="full")
    window = (lags >= -max_lag) & (lags <= max_lag)
    return int(lags[window][np.argmax(c[window])])


def aligned_r(a, b, lag: int) -> float:
    """Pearson correlation of the lag-aligned overlapping segments."""
    xa = _as_samples(a)
    xb = _as_samples(b)
    if lag >= 0:
        xa_seg = xa[: len(xa) - lag] if lag else xa
        xb_seg = xb[lag:]
    else:
        xa_seg = xa[-lag:]
        xb_seg = xb[: len(xb) + lag]
    n = min(len(xa_seg), len(xb_seg))
    xa_seg, xb_seg = xa_seg[:n], xb_seg[:n]
    if n < 2:
        raise ValueError("overlap after alignment must be >= 2 samples")
    if np.std(xa_seg) == 0 or np.std(xb_seg) == 0:
        raise ValueError("zero variance after alignment")
    return float(np.corrcoef(xa_seg, xb_seg)[0, 1])


def fidelity_report(tool_rec, handle_rec, max_lag_s: float = DEFAULT_MAX_LAG_S,
                    channel: str = "") -> FidelityReport:
    """Delay and correlation between a tool-side and handle-side recording.

    Tri-axis inputs are first summed (F3) to one signal each, matching
    what the live chain feeds back.  Positive delay means the handle
    trails the tool.
    """
    def to_block(rec):
        if isinstance(rec, TriAxisSeries):
            return axis_combine(rec, CombineMode.F3)
        return rec

    a = to_block(tool_rec)
    b = to_block(handle_rec)
    if a.rate != b.rate:
        raise ValueError("recordings must share one sample rate")
    lag = xcorr_lag(a, b, max_lag_s)
    r = aligned_r(a, b, lag)
    return FidelityReport(r=r, delay_s=lag / a.rate, lag_samples=lag,
                          channel=channel)
