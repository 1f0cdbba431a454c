"""Durable file formats: 32-bit float WAV for sample streams, CSV for
force and parameter logs, JSON session manifests, and the CSV dataset
manifest used by placement analysis.

Sample streams use RIFF/WAVE with IEEE float 32 samples, interleaved
channels; round trips are bit-exact.  Tri-axis files carry the axes as
channels in x, y, z order.
"""

from __future__ import annotations

import csv
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SchemaError, WavFormatError
from .placement import LabeledRecording
from .signal_model import SampleBlock, TriAxisSeries

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1
_WAVE_FORMAT_IEEE_FLOAT = 3


def write_wav(path, data: np.ndarray, rate: float) -> None:
    """Write ``data`` of shape (n,) or (n, channels) as float32 WAV."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2:
        raise ValueError(f"expected (n,) or (n, ch) data, got shape {data.shape}")
    n, ch = data.shape
    rate_i = int(round(rate))
    payload = data.tobytes()  # row-major == interleaved
    block_align = 4 * ch
    fmt = struct.pack(
        "<HHIIHH", _WAVE_FORMAT_IEEE_FLOAT, ch, rate_i,
        rate_i * block_align, block_align, 32,
    )
    body = (
        b"WAVE"
        + b"fmt " + struct.pack("<I", len(fmt)) + fmt
        + b"data" + struct.pack("<I", len(payload)) + payload
    )
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", len(body)) + body)


def read_wav(path) -> tuple[np.ndarray, float]:
    """Read a float32 WAV; returns (data of shape (n, channels), rate)."""
    raw = Path(path).read_bytes()
    if len(raw) < 12:
        raise WavFormatError("file too short for a RIFF header", len(raw))
    if raw[0:4] != b"RIFF":
        raise WavFormatError("missing RIFF magic", 0)
    if raw[8:12] != b"WAVE":
        raise WavFormatError("missing WAVE form type", 8)
    pos = 12
    fmt = None
    data = None
    while pos + 8 <= len(raw):
        cid = raw[pos:pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        start = pos + 8
        if start + size > len(raw):
            raise WavFormatError(f"chunk {cid!r} truncated", pos)
        if cid == b"fmt ":
            if size < 16:
                raise WavFormatError("fmt chunk too small", pos)
            fmt = struct.unpack_from("<HHIIHH", raw, start)
        elif cid == b"data":
            data = raw[start:start + size]
            data_pos = start
        pos = start + size + (size & 1)
    if fmt is None:
        raise WavFormatError("no fmt chunk", len(raw))
    if data is None:
        raise WavFormatError("no data chunk", len(raw))
    tag, ch, rate, _, _, bits = fmt
    if tag != _WAVE_FORMAT_IEEE_FLOAT or bits != 32:
        raise WavFormatError(
            f"unsupported format (tag={tag}, bits={bits}); need IEEE float 32",
            data_pos,
        )
    if len(data) % (4 * ch):
        raise WavFormatError("data chunk not a whole number of frames", data_pos)
    samples = np.frombuffer(data, dtype=np.float32).reshape(-1, ch)
    return samples, float(rate)


def write_series(series: TriAxisSeries, path) -> None:
    write_wav(path, np.stack([series.x, series.y, series.z], axis=1), series.rate)


def read_series(path, kind: str = "acceleration") -> TriAxisSeries:
    data, rate = read_wav(path)
    if data.shape[1] != 3:
        raise WavFormatError(
            f"expected 3 channels for a tri-axis file, got {data.shape[1]}", 0
        )
    return TriAxisSeries(data[:, 0], data[:, 1], data[:, 2], rate, kind)


def write_block(block: SampleBlock, path) -> None:
    write_wav(path, block.samples, block.rate)


def read_block(path) -> SampleBlock:
    data, rate = read_wav(path)
    if data.shape[1] != 1:
        raise WavFormatError(f"expected mono file, got {data.shape[1]} channels", 0)
    return SampleBlock(data[:, 0], rate)


def read_force_csv(path) -> TriAxisSeries:
    """Read a force CSV with columns timestamp, fx, fy, fz (any order).

    Non-uniform timestamps (beyond 1e-6 relative jitter) are resampled
    onto a uniform grid by linear interpolation, with a warning.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty CSV")
        names = [n.strip().lower() for n in reader.fieldnames]
        required = {"timestamp", "fx", "fy", "fz"}
        if not required.issubset(names):
            raise SchemaError(
                f"{path}: missing columns {sorted(required - set(names))}"
            )
        rows = [
            {k.strip().lower(): float(v) for k, v in row.items()}
            for row in reader
        ]
    if len(rows) < 2:
        raise SchemaError(f"{path}: need at least 2 rows")
    t = np.array([r["timestamp"] for r in rows])
    axes = np.stack([[r[c] for r in rows] for c in ("fx", "fy", "fz")])
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise SchemaError(f"{path}: timestamps must be strictly increasing")
    mean_dt = float(np.mean(dt))
    rate = 1.0 / mean_dt
    if np.max(np.abs(dt - mean_dt)) > 1e-6 * mean_dt:
        log.warning("%s: non-uniform timestamps, resampling to %.6g Hz", path, rate)
        grid = t[0] + np.arange(len(t)) * mean_dt
        axes = np.stack([np.interp(grid, t, a) for a in axes])
    return TriAxisSeries.from_axes(axes, rate, kind="force")


def write_force_csv(series: TriAxisSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "fx", "fy", "fz"])
        for i in range(len(series)):
            writer.writerow(
                [repr(i / series.rate), repr(float(series.x[i])),
                 repr(float(series.y[i])), repr(float(series.z[i]))]
            )


@dataclass
class SessionManifest:
    """Index of the files making up one recorded session."""

    rate: float
    channels: list[str]
    files: dict[str, str]  # logical name -> relative path
    created: str = ""
    version: int = MANIFEST_VERSION

    def save(self, directory) -> Path:
        path = Path(directory) / "manifest.json"
        path.write_text(json.dumps(
            {
                "version": self.version,
                "rate": self.rate,
                "channels": self.channels,
                "files": self.files,
                "created": self.created,
            },
            indent=2,
        ) + "\n")
        return path

    @classmethod
    def load(cls, directory) -> "SessionManifest":
        path = Path(directory) / "manifest.json"
        if not path.exists():
            raise SchemaError(f"no manifest.json in {directory}")
        doc = json.loads(path.read_text())
        missing = {"version", "rate", "channels", "files"} - set(doc)
        if missing:
            raise SchemaError(f"{path}: missing manifest keys {sorted(missing)}")
        return cls(
            rate=doc["rate"], channels=doc["channels"], files=doc["files"],
            created=doc.get("created", ""), version=doc["version"],
        )

    def validate(self, directory) -> None:
        """Check every referenced file exists and agrees on the rate."""
        base = Path(directory)
        for name, rel in self.files.items():
            path = base / rel
            if not path.exists():
                raise SchemaError(f"manifest references missing file {rel}")
            if path.suffix == ".wav":
                _, rate = read_wav(path)
                if rate != self.rate:
                    raise SchemaError(
                        f"{rel}: rate {rate} disagrees with manifest rate {self.rate}"
                    )


@dataclass
class SessionData:
    """In-memory view of a session directory, as consumed by the
    trial-metrics and fidelity analyses."""

    rate: float
    accel_series: dict[str, TriAxisSeries] = field(default_factory=dict)
    output_blocks: dict[str, SampleBlock] = field(default_factory=dict)
    force_series: TriAxisSeries | None = None
    param_log: list[dict] = field(default_factory=list)
    duration: float = 0.0


def load_session(directory) -> SessionData:
    manifest = SessionManifest.load(directory)
    manifest.validate(directory)
    base = Path(directory)
    data = SessionData(rate=manifest.rate)
    for name, rel in manifest.files.items():
        path = base / rel
        if name.startswith("raw_"):
            series = read_series(path)
            data.accel_series[name.removeprefix("raw_")] = series
            data.duration = max(data.duration, series.duration)
        elif name.startswith("out_"):
            block = read_block(path)
            data.output_blocks[name.removeprefix("out_")] = block
            data.duration = max(data.duration, block.duration)
        elif name == "force":
            data.force_series = read_force_csv(path)
        elif name == "params":
            with open(path, newline="") as fh:
                data.param_log = list(csv.DictReader(fh))
    return data


def write_param_log(entries: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_index", "channel", "param", "value"])
        for e in entries:
            writer.writerow([e["sample_index"], e["channel"], e["param"], e["value"]])


def load_dataset_manifest(path) -> list[LabeledRecording]:
    """Load a placement dataset: CSV of (path, location, action, trial)
    rows referencing tri-axis WAV (or force CSV) recordings."""
    base = Path(path).parent
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"path", "location", "action"}.issubset(
            n.strip().lower() for n in reader.fieldnames
        ):
            raise SchemaError(f"{path}: need columns path, location, action[, trial]")
        dataset = []
        for row in reader:
            row = {k.strip().lower(): v for k, v in row.items()}
            rec_path = base / row["path"]
            series = (
                read_force_csv(rec_path)
                if rec_path.suffix == ".csv"
                else read_series(rec_path)
            )
            dataset.append(
                LabeledRecording(
                    series=series,
                    location=row["location"].strip(),
                    action=row["action"].strip(),
                    trial=int(row.get("trial") or 0),
                )
            )
    return dataset


def write_report_csv(rows: list[dict], path) -> None:
    """Write a list of uniform dicts as CSV (deterministic column order)."""
    path = Path(path)
    if not rows:
        path.write_text("")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
