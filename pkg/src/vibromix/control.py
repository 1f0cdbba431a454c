"""Network control and telemetry endpoint: JSON over a WebSocket at
``/control`` plus a plain HTTP ``GET /status`` snapshot.

Every control message is answered by an ack (or error) frame carrying
the message id and the applied value; after ``subscribe_levels`` the
server pushes telemetry frames at 10 Hz.  All outgoing frames of one
connection go through a single queue, so acks are causally ordered
before any telemetry that reflects them.

Message schema (client -> server):
    {"op": "set_gain" | "set_mode" | "set_filter" | "mute" |
           "start_record" | "stop_record" | "subscribe_levels",
     "channel": "left" | "right",      # for channel-scoped ops
     "value": <op-dependent>,
     "msg_id": "<client-chosen string>"}

Server -> client frames have "type" in {"ack", "error", "telemetry"}.
"""

from __future__ import annotations

import asyncio
import json
import logging
import os
import time

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .pipeline import ControlMessage, Pipeline

log = logging.getLogger(__name__)

TELEMETRY_INTERVAL_S = 0.1
DEFAULT_PORT = 8765
PORT_ENV_VAR = "VIBROMIX_PORT"

CONTROL_OPS = (
    "set_gain", "set_mode", "set_filter", "mute",
    "start_record", "stop_record", "subscribe_levels",
)


def default_port() -> int:
    return int(os.environ.get(PORT_ENV_VAR, DEFAULT_PORT))


def build_app(pipeline: Pipeline) -> FastAPI:
    app = FastAPI(title="vibromix control")
    app.state.pipeline = pipeline

    @app.get("/status")
    def status() -> dict:
        return pipeline.status()

    @app.websocket("/control")
    async def control(ws: WebSocket) -> None:
        await ws.accept()
        outgoing: asyncio.Queue = asyncio.Queue()
        telemetry_task: asyncio.Task | None = None
        seq = 0

        async def sender() -> None:
            while True:
                frame = await outgoing.get()
                await ws.send_text(json.dumps(frame))

        async def telemetry() -> None:
            nonlocal seq
            while True:
                seq += 1
                outgoing.put_nowait(
                    {
                        "type": "telemetry",
                        "seq": seq,
                        "timestamp": time.time(),
                        "channels": pipeline.levels(),
                    }
                )
                await asyncio.sleep(TELEMETRY_INTERVAL_S)

        send_task = asyncio.get_running_loop().create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    doc = json.loads(raw)
                    if not isinstance(doc, dict):
                        raise ValueError("message must be a JSON object")
                except ValueError as exc:
                    outgoing.put_nowait(
                        {"type": "error", "reason": f"malformed message: {exc}"}
                    )
                    continue
                op = doc.get("op")
                msg_id = str(doc.get("msg_id", ""))
                if op not in CONTROL_OPS:
                    outgoing.put_nowait(
                        {"type": "error", "msg_id": msg_id,
                         "reason": f"unknown op {op!r}"}
                    )
                    continue
                if op == "subscribe_levels":
                    if telemetry_task is None:
                        telemetry_task = asyncio.get_running_loop().create_task(
                            telemetry()
                        )
                    outgoing.put_nowait(
                        {"type": "ack", "msg_id": msg_id, "op": op, "applied": True}
                    )
                    continue
                ack = pipeline.update_param(
                    ControlMessage(
                        op=op,
                        channel=str(doc.get("channel", "")),
                        value=doc.get("value"),
                        msg_id=msg_id,
                    )
                )
                if ack.ok:
                    outgoing.put_nowait(
                        {"type": "ack", "msg_id": msg_id, "op": op,
                         "channel": ack.channel, "applied": ack.applied}
                    )
                else:
                    outgoing.put_nowait(
                        {"type": "error", "msg_id": msg_id, "op": op,
                         "reason": ack.error}
                    )
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            if telemetry_task is not None:
                telemetry_task.cancel()

    return app


def serve(pipeline: Pipeline, host: str = "127.0.0.1",
          port: int | None = None) -> None:
    """Run the control service until interrupted (blocking)."""
    import uvicorn

    uvicorn.run(build_app(pipeline), host=host,
                port=port if port is not None else default_port())
