"""Streaming engine: sources -> per-tool channel strips -> sinks.

Offline (file/synth) runs are deterministic and process every block; in
real-time mode the block clock never stalls — a missed deadline is
counted and an underrun is zero-filled and logged, never silently
skipped.  Parameter changes arrive through a bounded mailbox drained
once per block, so no locks are held during sample processing.
"""

from __future__ import annotations

import logging
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .dsp import ChannelProcessor, ChannelStrip, CombineMode, FilterSpec, clamp_gain_db
from .errors import BuildError
from .session_io import (
    SessionManifest,
    write_block,
    write_param_log,
    write_series,
)
from .signal_model import DEFAULT_RATE, SampleBlock, TriAxisSeries
from .synth import ScenarioScript, render_scenario

log = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 64
CHANNEL_IDS = ("left", "right")

# network frame: u32 LE payload length, then
# tool id (u8), sample index (u64 LE), x, y, z (f32 LE each)
FRAME_PAYLOAD = struct.Struct("<BQfff")


@dataclass
class ControlMessage:
    op: str
    channel: str = ""
    value: object = None
    msg_id: str = ""


@dataclass
class Ack:
    ok: bool
    msg_id: str = ""
    op: str = ""
    channel: str = ""
    applied: object = None
    error: str = ""


@dataclass
class SourceBinding:
    """Where a channel's tri-axis samples come from.

    kind 'file': ``path`` is a 3-channel float WAV.
    kind 'synth': ``path`` is a scenario script JSON (or ``scenario`` is
    set directly).
    kind 'network': ``address`` is host:port of a frame stream; only
    frames for ``tool_id`` are consumed.
    """

    kind: str
    path: str | None = None
    address: str | None = None
    tool_id: int = 0
    scenario: ScenarioScript | None = None

    def __post_init__(self):
        if self.kind not in ("file", "synth", "network"):
            raise BuildError(f"unknown source kind {self.kind!r}")


@dataclass
class ChannelConfig:
    source: SourceBinding
    strip: ChannelStrip = field(default_factory=ChannelStrip)
    sink_lane: int | None = None


@dataclass
class PipelineConfig:
    rate: float = DEFAULT_RATE
    block_size: int = DEFAULT_BLOCK_SIZE
    channels: dict[str, ChannelConfig] = field(default_factory=dict)
    record_path: str | None = None

    def validate(self) -> None:
        bs = self.block_size
        if not (16 <= bs <= 1024) or bs & (bs - 1):
            raise BuildError(f"block_size must be a power of two in [16, 1024], got {bs}")
        if self.rate <= 0:
            raise BuildError("rate must be positive")
        if not self.channels:
            raise BuildError("at least one channel required")
        lanes = [c.sink_lane for c in self.channels.values() if c.sink_lane is not None]
        if len(lanes) != len(set(lanes)):
            raise BuildError("duplicate sink lane assignment")

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        channels = {}
        for cid, cdoc in doc.get("channels", {}).items():
            sdoc = dict(cdoc.get("source", {}))
            scenario = None
            if "scenario" in sdoc:
                scenario = ScenarioScript(**sdoc.pop("scenario"))
            source = SourceBinding(scenario=scenario, **sdoc)
            strip_doc = dict(cdoc.get("strip", {}))
            if "filter" in strip_doc and strip_doc["filter"] is not None:
                strip_doc["filter"] = FilterSpec(**strip_doc["filter"])
            strip = ChannelStrip(**strip_doc)
            channels[cid] = ChannelConfig(
                source=source, strip=strip, sink_lane=cdoc.get("sink_lane")
            )
        return cls(
            rate=doc.get("rate", DEFAULT_RATE),
            block_size=doc.get("block_size", DEFAULT_BLOCK_SIZE),
            channels=channels,
            record_path=doc.get("record_path"),
        )


class _BufferedSource:
    """In-memory tri-axis source (file or rendered scenario)."""

    def __init__(self, series: TriAxisSeries, block_size: int):
        self.series = series
        self.block_size = block_size
        self._axes = series.axes  # stacked once; per-block restacking is O(n)

    @property
    def n_samples(self) -> int:
        return len(self.series)

    def read_span(self, start_block: int, n_blocks: int) -> TriAxisSeries:
        i0 = start_block * self.block_size
        i1 = i0 + n_blocks * self.block_size
        axes = np.zeros((3, i1 - i0))
        avail = self._axes[:, i0:min(i1, self.n_samples)]
        axes[:, : avail.shape[1]] = avail
        return TriAxisSeries.from_axes(axes, self.series.rate, self.series.kind)

    def close(self) -> None:
        pass


class NetworkSource:
    """TCP frame stream source; missing samples are zero-filled and the
    gap is logged."""

    def __init__(self, address: str, tool_id: int, rate: float, block_size: int):
        host, _, port = address.rpartition(":")
        try:
            self._sock = socket.create_connection((host or "127.0.0.1", int(port)),
                                                  timeout=5.0)
        except OSError as exc:
            raise BuildError(f"network source {address} unreachable: {exc}") from exc
        self.tool_id = tool_id
        self.rate = rate
        self.block_size = block_size
        self.n_samples = None  # unbounded
        self.underruns = 0
        self._buf: dict[int, tuple[float, float, float]] = {}
        self._lock = threading.Lock()
        self._closed = False
        self._thread = threading.Thread(target=self._reader, daemon=True)
        self._thread.start()

    def _reader(self) -> None:
        fh = self._sock.makefile("rb")
        try:
            while not self._closed:
                header = fh.read(4)
                if len(header) < 4:
                    return
                (size,) = struct.unpack("<I", header)
                payload = fh.read(size)
                if len(payload) < size or size != FRAME_PAYLOAD.size:
                    log.warning("short or mis-sized network frame, dropping")
                    return
                tool, index, x, y, z = FRAME_PAYLOAD.unpack(payload)
                if tool != self.tool_id:
                    continue
                with self._lock:
                    self._buf[index] = (x, y, z)
        except OSError:
            return

    def read_span(self, start_block: int, n_blocks: int) -> TriAxisSeries:
        i0 = start_block * self.block_size
        n = n_blocks * self.block_size
        axes = np.zeros((3, n))
        missing = 0
        with self._lock:
            for k in range(n):
                frame = self._buf.pop(i0 + k, None)
                if frame is None:
                    missing += 1
                else:
                    axes[:, k] = frame
        if missing:
            self.underruns += missing
            log.warning("network underrun: %d samples zero-filled from block %d",
                        missing, start_block)
        return TriAxisSeries.from_axes(axes, self.rate)

    def close(self) -> None:
        self._closed = True
        try:
            self._sock.close()
        except OSError:
            pass


@dataclass
class SessionLog:
    """Everything recorded during one run: raw tri-axis inputs, post-chain
    outputs, the sample-accurate parameter log, and run statistics."""

    rate: float
    accel_series: dict[str, TriAxisSeries] = field(default_factory=dict)
    output_blocks: dict[str, SampleBlock] = field(default_factory=dict)
    force_series: TriAxisSeries | None = None
    param_entries: list[dict] = field(default_factory=list)
    deadline_misses: int = 0
    underrun_samples: int = 0
    duration: float = 0.0

    def write(self, directory) -> Path:
        base = Path(directory)
        base.mkdir(parents=True, exist_ok=True)
        files = {}
        for cid, series in self.accel_series.items():
            name = f"raw_{cid}.wav"
            write_series(series, base / name)
            files[f"raw_{cid}"] = name
        for cid, block in self.output_blocks.items():
            name = f"out_{cid}.wav"
            write_block(block, base / name)
            files[f"out_{cid}"] = name
        write_param_log(self.param_entries, base / "params.csv")
        files["params"] = "params.csv"
        manifest = SessionManifest(
            rate=self.rate,
            channels=sorted(self.accel_series),
            files=files,
            created=datetime.now(timezone.utc).isoformat(),
        )
        return manifest.save(base)


class Pipeline:
    """Built, runnable processing graph.  Use :func:`build`."""

    def __init__(self, config: PipelineConfig):
        config.validate()
        self.config = config
        self.processors: dict[str, ChannelProcessor] = {}
        self.sources: dict[str, object] = {}
        self._mailbox: queue.Queue = queue.Queue(maxsize=256)
        self._running = False
        self._stop = threading.Event()
        self.recording_path: str | None = config.record_path
        self.recording = False
        self.clamp_count = 0
        self.started_at = time.monotonic()
        self.last_log: SessionLog | None = None

        for cid, chan in config.channels.items():
            self.processors[cid] = ChannelProcessor(chan.strip, config.rate)
            self.sources[cid] = self._open_source(chan.source)

    def _open_source(self, binding: SourceBinding):
        if binding.kind == "file":
            if not binding.path or not Path(binding.path).exists():
                raise BuildError(f"file source not found: {binding.path}")
            from .session_io import read_series

            series = read_series(binding.path)
            if series.rate != self.config.rate:
                raise BuildError(
                    f"{binding.path}: rate {series.rate} != pipeline rate "
                    f"{self.config.rate}; resample or fix the config"
                )
            return _BufferedSource(series, self.config.block_size)
        if binding.kind == "synth":
            scenario = binding.scenario
            if scenario is None:
                if not binding.path or not Path(binding.path).exists():
                    raise BuildError(f"scenario script not found: {binding.path}")
                scenario = ScenarioScript.load(binding.path)
            if scenario.rate != self.config.rate:
                raise BuildError("scenario rate differs from pipeline rate")
            series, _ = render_scenario(scenario)
            return _BufferedSource(series, self.config.block_size)
        return NetworkSource(binding.address, binding.tool_id,
                             self.config.rate, self.config.block_size)

    # -- latency -----------------------------------------------------

    def latency_report(self) -> dict:
        block_s = self.config.block_size / self.config.rate
        gd = max(
            (p.cascade.group_delay_s() for p in self.processors.values()
             if p.cascade is not None),
            default=0.0,
        )
        return {
            "block_s": block_s,
            "group_delay_s": gd,
            "total_s": block_s + gd,
        }

    # -- control -----------------------------------------------------

    def update_param(self, msg: ControlMessage) -> Ack:
        """Validate and enqueue a parameter change; it takes effect at the
        next block boundary (immediately when idle).  The ack carries the
        applied (possibly clamped) value."""
        if msg.op in ("set_gain", "set_mode", "set_filter", "mute"):
            if msg.channel not in self.processors:
                return Ack(False, msg.msg_id, msg.op, msg.channel,
                           error=f"unknown channel {msg.channel!r}")
        applied: object = msg.value
        if msg.op == "set_gain":
            try:
                value = float(msg.value)
            except (TypeError, ValueError):
                return Ack(False, msg.msg_id, msg.op, msg.channel,
                           error=f"gain must be a number, got {msg.value!r}")
            applied = clamp_gain_db(value)
            if applied != value:
                self.clamp_count += 1
        elif msg.op == "set_mode":
            try:
                applied = CombineMode(msg.value).value
            except ValueError:
                return Ack(False, msg.msg_id, msg.op, msg.channel,
                           error=f"unknown mode {msg.value!r}")
        elif msg.op == "mute":
            applied = CombineMode.F0.value
        elif msg.op == "set_filter":
            try:
                spec = FilterSpec(**msg.value) if msg.value is not None else None
                if spec is not None:
                    spec.validate(self.config.rate)
            except (TypeError, ValueError) as exc:
                return Ack(False, msg.msg_id, msg.op, msg.channel, error=str(exc))
            applied = msg.value
        elif msg.op == "start_record":
            if self.recording:
                return Ack(False, msg.msg_id, msg.op, error="already recording")
            self.recording = True
            self.recording_path = str(msg.value or self.recording_path or "session")
            return Ack(True, msg.msg_id, msg.op, applied=self.recording_path)
        elif msg.op == "stop_record":
            if not self.recording:
                return Ack(False, msg.msg_id, msg.op, error="not recording")
            self.recording = False
            return Ack(True, msg.msg_id, msg.op, applied=self.recording_path)
        else:
            return Ack(False, msg.msg_id, msg.op, error=f"unknown op {msg.op!r}")

        try:
            self._mailbox.put_nowait((msg, applied))
        except queue.Full:
            return Ack(False, msg.msg_id, msg.op, msg.channel, error="mailbox full")
        if not self._running:
            self._drain_mailbox(sample_index=0, log_to=None)
        return Ack(True, msg.msg_id, msg.op, msg.channel, applied=applied)

    def _drain_mailbox(self, sample_index: int, log_to: SessionLog | None) -> None:
        while True:
            try:
                msg, applied = self._mailbox.get_nowait()
            except queue.Empty:
                return
            proc = self.processors[msg.channel]
            if msg.op == "set_gain":
                proc.set_gain_db(float(applied))
            elif msg.op in ("set_mode", "mute"):
                proc.set_mode(CombineMode(applied))
            elif msg.op == "set_filter":
                proc.set_filter(FilterSpec(**applied) if applied is not None else None)
            if log_to is not None:
                log_to.param_entries.append(
                    {
                        "sample_index": sample_index,
                        "channel": msg.channel,
                        "param": msg.op,
                        "value": applied,
                    }
                )

    def levels(self) -> dict:
        """Telemetry snapshot per channel."""
        return {
            cid: {
                "pre_rms": proc.pre_level,
                "post_rms": proc.post_level,
                "mode": proc.mode.value,
                "gain_db": float(proc.gain.gain_db),
            }
            for cid, proc in self.processors.items()
        }

    # -- running -----------------------------------------------------

    def stop(self) -> None:
        self._stop.set()

    def run(self, duration: float | None = None, realtime: bool = False,
            control_script: list[tuple[float, ControlMessage]] | None = None
            ) -> SessionLog:
        """Process blocks in order until the sources are exhausted or
        ``duration`` elapses.  ``control_script`` delivers timestamped
        messages deterministically at block boundaries."""
        cfg = self.config
        bs = cfg.block_size
        if duration is not None:
            n_total = int(round(duration * cfg.rate))
        else:
            lengths = [s.n_samples for s in self.sources.values()
                       if s.n_samples is not None]
            if not lengths:
                raise BuildError("unbounded sources require an explicit duration")
            n_total = min(lengths)
        n_blocks = (n_total + bs - 1) // bs

        session = SessionLog(rate=cfg.rate, duration=n_total / cfg.rate)
        raw_axes = {cid: [] for cid in self.processors}
        # the output lane carries the engine's one block of buffering
        # latency (input block i is emitted during block i+1), so recorded
        # outputs reflect the reported algorithmic latency
        outs = {cid: [np.zeros(bs)] for cid in self.processors}
        script = sorted(control_script or [], key=lambda item: item[0])
        script_pos = 0

        # offline runs batch contiguous blocks into spans for throughput;
        # spans break at control-event boundaries so results stay
        # bit-identical to strict block-by-block processing
        span_cap = 1 if realtime else 32

        self._stop.clear()
        self._running = True
        t_start = time.monotonic()
        bi = 0
        try:
            while bi < n_blocks:
                if self._stop.is_set():
                    n_total = bi * bs
                    break
                sample_index = bi * bs
                block_t = sample_index / cfg.rate
                while script_pos < len(script) and script[script_pos][0] <= block_t:
                    ack = self.update_param(script[script_pos][1])
                    if not ack.ok:
                        log.warning("scripted control rejected: %s", ack.error)
                    script_pos += 1
                self._drain_mailbox(sample_index, session)
                span = min(span_cap, n_blocks - bi)
                if script_pos < len(script):
                    next_block = max(
                        bi + 1,
                        -(int(script[script_pos][0] * cfg.rate) // -bs),
                    )
                    span = min(span, next_block - bi)
                for cid, proc in self.processors.items():
                    tri = self.sources[cid].read_span(bi, span)
                    raw_axes[cid].append(tri.axes)
                    out = proc.process(tri, start_index=sample_index)
                    outs[cid].append(out.samples)
                if realtime:
                    deadline = t_start + (bi + span) * bs / cfg.rate
                    now = time.monotonic()
                    # The output lane carries one block of buffering, so a
                    # block is only truly late once it slips past the
                    # presentation time of the buffered frame (deadline plus
                    # one block period).  Sub-period wakeup jitter from the
                    # OS scheduler is absorbed by the buffer, not counted.
                    if now > deadline + bs / cfg.rate:
                        session.deadline_misses += 1
                    elif now < deadline:
                        time.sleep(deadline - now)
                bi += span
        finally:
            self._running = False

        for cid in self.processors:
            axes = np.concatenate(raw_axes[cid], axis=1)[:, :n_total]
            session.accel_series[cid] = TriAxisSeries.from_axes(axes, cfg.rate)
            samples = np.concatenate(outs[cid])[:n_total]
            session.output_blocks[cid] = SampleBlock(samples, cfg.rate)
        session.underrun_samples = sum(
            getattr(s, "underruns", 0) for s in self.sources.values()
        )
        session.duration = n_total / cfg.rate
        self.last_log = session
        if self.recording and self.recording_path:
            session.write(self.recording_path)
        return session

    def close(self) -> None:
        for source in self.sources.values():
            source.close()

    def status(self) -> dict:
        return {
            "rate": self.config.rate,
            "block_size": self.config.block_size,
            "channels": self.levels(),
            "uptime_s": time.monotonic() - self.started_at,
            "deadline_misses": (
                self.last_log.deadline_misses if self.last_log else 0
            ),
            "recording": self.recording,
            "recording_path": self.recording_path if self.recording else None,
            "clamp_count": self.clamp_count,
            "latency": self.latency_report(),
        }


def build(config: PipelineConfig) -> Pipeline:
    """Validate the configuration, bind all sources, and return an idle
    pipeline (raises :class:`BuildError` on any problem)."""
    return Pipeline(config)
