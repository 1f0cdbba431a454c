"""Operator and batch entry points (``vibromix`` command)."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import control, fidelity, session_io, synth, trial_metrics
from .errors import VibromixError
from .pipeline import PipelineConfig, build
from .placement import actuator_report, placement_report
from .signal_model import DEFAULT_RATE


def _load_config(path: str | None, rate: float | None,
                 block_size: int | None) -> PipelineConfig:
    doc = json.loads(Path(path).read_text()) if path else {}
    if rate is not None:
        doc["rate"] = rate
    if block_size is not None:
        doc["block_size"] = block_size
    return PipelineConfig.from_dict(doc)


@click.group()
def main() -> None:
    """Vibrotactile feedback engine and analysis toolkit."""


@main.command()
@click.option("--script", "script_path", required=True,
              type=click.Path(exists=True), help="Scenario script JSON.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Override script seed.")
def synth_cmd(script_path: str, out_dir: str, seed: int | None) -> None:
    """Render a scenario script to WAV plus a ground-truth event table."""
    script = synth.ScenarioScript.load(script_path)
    if seed is not None:
        script.seed = seed
    series, events = synth.render_scenario(script)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    session_io.write_series(series, out / "scenario.wav")
    (out / "events.json").write_text(json.dumps(events, indent=2) + "\n")
    session_io.write_report_csv(
        [{"t0": e["t0"], "onset_sample": e["onset_sample"], "kind": e["kind"]}
         for e in events],
        out / "events.csv",
    )
    click.echo(f"wrote {out / 'scenario.wav'} ({series.duration:.3f} s "
               f"@ {series.rate:g} Hz, {len(events)} events)")


main.add_command(synth_cmd, name="synth")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="Pipeline config JSON.")
@click.option("--in", "in_dir", type=click.Path(exists=True),
              help="Session directory whose raw recordings become file sources.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--rate", type=float, default=None)
@click.option("--block-size", type=int, default=None)
@click.option("--duration", type=float, default=None)
@click.option("--seed", type=int, default=0)
def run(config_path: str | None, in_dir: str | None, out_dir: str,
        rate: float | None, block_size: int | None,
        duration: float | None, seed: int) -> None:
    """Run the pipeline offline and record the session to --out."""
    config = _load_config(config_path, rate, block_size)
    if in_dir:
        from .dsp import ChannelStrip
        from .pipeline import ChannelConfig, SourceBinding

        manifest = session_io.SessionManifest.load(in_dir)
        for name, rel in manifest.files.items():
            if name.startswith("raw_"):
                cid = name.removeprefix("raw_")
                existing = config.channels.get(cid)
                config.channels[cid] = ChannelConfig(
                    source=SourceBinding(kind="file", path=str(Path(in_dir) / rel)),
                    strip=existing.strip if existing else ChannelStrip(),
                )
        config.rate = manifest.rate
    pipeline = build(config)
    session = pipeline.run(duration=duration)
    session.write(out_dir)
    latency = pipeline.latency_report()
    click.echo(f"processed {session.duration:.3f} s over "
               f"{len(session.accel_series)} channel(s); "
               f"algorithmic latency {latency['total_s'] * 1000:.2f} ms")
    pipeline.close()


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--port", type=int, default=None,
              help=f"Listen port (default from ${control.PORT_ENV_VAR} or "
                   f"{control.DEFAULT_PORT}).")
@click.option("--host", default="127.0.0.1")
@click.option("--rate", type=float, default=None)
@click.option("--block-size", type=int, default=None)
def serve(config_path: str | None, port: int | None, host: str,
          rate: float | None, block_size: int | None) -> None:
    """Start the WebSocket control/telemetry service."""
    config = _load_config(config_path, rate, block_size)
    if not config.channels:
        from .pipeline import ChannelConfig, SourceBinding
        from .synth import ScenarioScript

        scenario = ScenarioScript(rate=config.rate, duration=1.0, events=[])
        for cid in ("left", "right"):
            config.channels[cid] = ChannelConfig(
                source=SourceBinding(kind="synth", scenario=scenario)
            )
    pipeline = build(config)
    control.serve(pipeline, host=host, port=port)


@main.group()
def analyze() -> None:
    """Offline analyses over recordings."""


@analyze.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True),
              help="Dataset CSV (path, location, action, trial).")
@click.option("--out", "out_dir", required=True, type=click.Path())
def placement(manifest_path: str, out_dir: str) -> None:
    """SNR placement report (plus energy ratios for handle/source pairs)."""
    dataset = session_io.load_dataset_manifest(manifest_path)
    report = placement_report(dataset)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    session_io.write_report_csv(report.to_rows(), out / "snr_report.csv")
    # handle/source pairs for the energy-ratio report: locations that have
    # both a contact ("source") and idle-free "contact" handle recording are
    # analyzed pairwise when trials come in (handle, source) pairs
    pairs = []
    by_key = {}
    for rec in dataset:
        by_key.setdefault((rec.location, rec.action, rec.trial), rec)
    for (loc, action, trial), rec in by_key.items():
        if action == "contact":
            source = by_key.get((loc, "idle", trial))
            if source is not None and len(source.series) == len(rec.series):
                pairs.append((loc, rec.series, source.series))
    if pairs:
        energy = actuator_report(pairs)
        session_io.write_report_csv(energy.to_rows(), out / "energy_ratio_report.csv")
    lines = [f"{c.location:>10s} {c.action:>9s}: "
             f"{c.mean_db:7.2f} dB ± {c.std_db:.2f} (n={c.n_trials})"
             for c in report.cells]
    if report.tied_locations:
        lines.append(f"best location: tie between {report.tied_locations}")
    else:
        lines.append(f"best location: {report.best_location}")
    if report.omitted:
        lines.append("omitted cells: " + "; ".join(report.omitted))
    (out / "snr_report.txt").write_text("\n".join(lines) + "\n")
    click.echo("\n".join(lines))


@analyze.command("fidelity")
@click.option("--session", "session_dir", type=click.Path(exists=True),
              help="Session directory (raw vs post-chain outputs).")
@click.option("--tool", "tool_path", type=click.Path(exists=True))
@click.option("--handle", "handle_path", type=click.Path(exists=True))
@click.option("--max-lag", type=float, default=fidelity.DEFAULT_MAX_LAG_S)
@click.option("--out", "out_dir", required=True, type=click.Path())
def fidelity_cmd(session_dir: str | None, tool_path: str | None,
                 handle_path: str | None, max_lag: float, out_dir: str) -> None:
    """Cross-correlation delay and correlation coefficient report."""
    reports = []
    if session_dir:
        data = session_io.load_session(session_dir)
        for cid, raw in sorted(data.accel_series.items()):
            out_block = data.output_blocks.get(cid)
            if out_block is None:
                continue
            reports.append(fidelity.fidelity_report(raw, out_block,
                                                    max_lag_s=max_lag, channel=cid))
    elif tool_path and handle_path:
        tool = session_io.read_series(tool_path)
        handle = session_io.read_series(handle_path)
        reports.append(fidelity.fidelity_report(tool, handle, max_lag_s=max_lag))
    else:
        raise click.UsageError("give --session or both --tool and --handle")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    session_io.write_report_csv([r.to_row() for r in reports],
                                out / "fidelity_report.csv")
    for r in reports:
        click.echo(f"{r.channel or 'pair'}: r={r.r:.4f} "
                   f"delay={r.delay_s * 1000:.2f} ms ({r.lag_samples} samples)")


@main.command("trial-metrics")
@click.option("--session", "session_dir", required=True,
              type=click.Path(exists=True))
@click.option("--accel-threshold", type=float,
              default=trial_metrics.ACCEL_THRESHOLD, show_default=True)
@click.option("--force-threshold", type=float,
              default=trial_metrics.FORCE_THRESHOLD, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def trial_metrics_cmd(session_dir: str, accel_threshold: float,
                      force_threshold: float, out_dir: str) -> None:
    """Gated RMS/ZCR metrics for one recorded session."""
    data = session_io.load_session(session_dir)
    report = trial_metrics.trial_report(
        data, trial_metrics.Thresholds(accel=accel_threshold,
                                       force=force_threshold)
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    session_io.write_report_csv(report.to_rows(), out / "trial_metrics.csv")
    summary = {
        "completion_time_s": report.completion_time_s,
        "thresholds": {"accel": accel_threshold, "force": force_threshold},
        "streams": report.to_rows(),
        "omissions": report.omissions,
    }
    (out / "trial_metrics.json").write_text(json.dumps(summary, indent=2) + "\n")
    for row in report.to_rows():
        click.echo(f"{row['stream']}: rms={row['rms']:.4f} "
                   f"zcr={row['zcr_hz']:.2f} Hz")
    for omission in report.omissions:
        click.echo(f"note: {omission}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--session", "session_dir", type=click.Path(exists=True))
@click.option("--script", "script_path", type=click.Path(exists=True))
def validate(config_path: str | None, session_dir: str | None,
             script_path: str | None) -> None:
    """Validate a pipeline config, session directory, or scenario script."""
    if not any((config_path, session_dir, script_path)):
        raise click.UsageError("give --config, --session, or --script")
    if config_path:
        config = _load_config(config_path, None, None)
        config.validate()
        click.echo(f"config ok: {len(config.channels)} channel(s) "
                   f"@ {config.rate:g} Hz, block {config.block_size}")
    if session_dir:
        manifest = session_io.SessionManifest.load(session_dir)
        manifest.validate(session_dir)
        click.echo(f"session ok: {sorted(manifest.files)}")
    if script_path:
        script = synth.ScenarioScript.load(script_path)
        click.echo(f"script ok: {len(script.events)} event(s), "
                   f"{script.duration:g} s @ {script.rate:g} Hz")


def entrypoint(argv=None) -> int:
    try:
        main.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 2
    except (VibromixError, OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(entrypoint())
