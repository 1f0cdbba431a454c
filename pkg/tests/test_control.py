"""Control-service tests: WebSocket acks, telemetry cadence, /status."""

import json
import time

import pytest
from fastapi.testclient import TestClient

from vibromix.control import DEFAULT_PORT, PORT_ENV_VAR, build_app, default_port
from vibromix.dsp import ChannelStrip, CombineMode, FilterSpec
from vibromix.pipeline import ChannelConfig, PipelineConfig, SourceBinding, build
from vibromix.synth import ScenarioScript

RATE = 8000.0


@pytest.fixture()
def pipeline():
    scenario = ScenarioScript(rate=RATE, duration=0.5, events=[
        {"t0": 0.1, "kind": "contact", "params": {}},
    ])
    cfg = PipelineConfig(rate=RATE, channels={
        cid: ChannelConfig(
            source=SourceBinding(kind="synth", scenario=scenario),
            strip=ChannelStrip(mode=CombineMode.F3, filter=FilterSpec()),
            sink_lane=i,
        )
        for i, cid in enumerate(("left", "right"))
    })
    return build(cfg)


@pytest.fixture()
def client(pipeline):
    with TestClient(build_app(pipeline)) as client:
        yield client


def recv_until(ws, frame_type, limit=50):
    for _ in range(limit):
        frame = json.loads(ws.receive_text())
        if frame["type"] == frame_type:
            return frame
    raise AssertionError(f"no {frame_type} frame within {limit} messages")


class TestWebSocket:
    def test_set_gain_ack(self, client):
        with client.websocket_connect("/control") as ws:
            ws.send_text(json.dumps(
                {"op": "set_gain", "channel": "left", "value": 6.0,
                 "msg_id": "m1"}
            ))
            frame = json.loads(ws.receive_text())
            assert frame == {"type": "ack", "msg_id": "m1", "op": "set_gain",
                             "channel": "left", "applied": 6.0}

    def test_over_ceiling_gain_acks_clamped_value(self, client):
        with client.websocket_connect("/control") as ws:
            ws.send_text(json.dumps(
                {"op": "set_gain", "channel": "left", "value": 15.0,
                 "msg_id": "m2"}
            ))
            frame = json.loads(ws.receive_text())
            assert frame["type"] == "ack"
            assert frame["applied"] == 10.0

    def test_unknown_channel_is_error_frame(self, client):
        with client.websocket_connect("/control") as ws:
            ws.send_text(json.dumps(
                {"op": "set_gain", "channel": "pedal", "value": 0.0,
                 "msg_id": "m3"}
            ))
            frame = json.loads(ws.receive_text())
            assert frame["type"] == "error"
            assert frame["msg_id"] == "m3"
            assert "pedal" in frame["reason"]

    def test_unknown_op_is_error_frame(self, client):
        with client.websocket_connect("/control") as ws:
            ws.send_text(json.dumps({"op": "explode", "msg_id": "m4"}))
            frame = json.loads(ws.receive_text())
            assert frame["type"] == "error"
            assert "explode" in frame["reason"]

    def test_malformed_json_keeps_connection_alive(self, client):
        with client.websocket_connect("/control") as ws:
            ws.send_text("{not json")
            frame = json.loads(ws.receive_text())
            assert frame["type"] == "error"
            assert "malformed" in frame["reason"]
            # connection still works afterwards
            ws.send_text(json.dumps(
                {"op": "mute", "channel": "left", "msg_id": "m5"}
            ))
            frame = json.loads(ws.receive_text())
            assert frame["type"] == "ack"
            assert frame["msg_id"] == "m5"

    def test_set_mode_and_filter(self, client):
        with client.websocket_connect("/control") as ws:
            ws.send_text(json.dumps(
                {"op": "set_mode", "channel": "right", "value": "F1",
                 "msg_id": "a"}
            ))
            assert json.loads(ws.receive_text())["applied"] == "F1"
            ws.send_text(json.dumps(
                {"op": "set_filter", "channel": "right",
                 "value": {"low_cut": 100.0, "high_cut": 900.0, "order": 4},
                 "msg_id": "b"}
            ))
            frame = json.loads(ws.receive_text())
            assert frame["type"] == "ack"

    def test_telemetry_cadence(self, client):
        with client.websocket_connect("/control") as ws:
            ws.send_text(json.dumps({"op": "subscribe_levels", "msg_id": "s"}))
            ack = json.loads(ws.receive_text())
            assert ack["type"] == "ack"
            t0 = time.monotonic()
            frames = []
            while len(frames) < 9:
                frame = json.loads(ws.receive_text())
                if frame["type"] == "telemetry":
                    frames.append(frame)
            elapsed = time.monotonic() - t0
            # 9 more frames after the first ~= 0.8 s at 10 Hz
            assert elapsed < 1.5
            seqs = [f["seq"] for f in frames]
            assert seqs == sorted(seqs)
            assert len(set(seqs)) == len(seqs)
            assert set(frames[0]["channels"]) == {"left", "right"}

    def test_ack_ordered_before_subsequent_telemetry(self, client):
        with client.websocket_connect("/control") as ws:
            ws.send_text(json.dumps({"op": "subscribe_levels", "msg_id": "s"}))
            recv_until(ws, "telemetry")
            ws.send_text(json.dumps(
                {"op": "set_gain", "channel": "left", "value": -3.0,
                 "msg_id": "g"}
            ))
            frame = recv_until(ws, "ack")
            assert frame["msg_id"] == "g"


class TestStatus:
    def test_status_snapshot(self, client):
        doc = client.get("/status").json()
        assert doc["rate"] == RATE
        assert doc["block_size"] == 64
        assert set(doc["channels"]) == {"left", "right"}
        assert doc["deadline_misses"] == 0
        assert doc["recording"] is False
        assert doc["uptime_s"] >= 0
        assert doc["latency"]["total_s"] > 0

    def test_status_reflects_clamp_and_recording(self, client, tmp_path):
        with client.websocket_connect("/control") as ws:
            ws.send_text(json.dumps(
                {"op": "set_gain", "channel": "left", "value": 99.0,
                 "msg_id": "c"}
            ))
            ws.receive_text()
            ws.send_text(json.dumps(
                {"op": "start_record", "value": str(tmp_path / "rec"),
                 "msg_id": "r"}
            ))
            ws.receive_text()
            doc = client.get("/status").json()
            assert doc["clamp_count"] == 1
            assert doc["recording"] is True
            assert doc["recording_path"].endswith("rec")
            ws.send_text(json.dumps({"op": "stop_record", "msg_id": "r2"}))
            ws.receive_text()
            assert client.get("/status").json()["recording"] is False


class TestPortConfig:
    def test_default_port(self, monkeypatch):
        monkeypatch.delenv(PORT_ENV_VAR, raising=False)
        assert default_port() == DEFAULT_PORT

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv(PORT_ENV_VAR, "9100")
        assert default_port() == 9100
