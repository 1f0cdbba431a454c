import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import {
  ConsoleConnection,
  MixerConsole,
  renderConsole,
} from "../src/index.js";
import { MockControlService } from "./mock-service.js";

function makeConsole(service: MockControlService) {
  const connection = new ConsoleConnection({
    controlUrl: "ws://test/control",
    statusUrl: "http://test/status",
    socketFactory: service.socketFactory,
    fetchStatus: service.fetchStatus,
  });
  return new MixerConsole(connection);
}

async function connect(console_: MixerConsole) {
  console_.start();
  await vi.advanceTimersByTimeAsync(0);
  expect(console_.commandsEnabled).toBe(true);
}

describe("MixerConsole", () => {
  let service: MockControlService;
  let console_: MixerConsole;

  beforeEach(() => {
    vi.useFakeTimers();
    service = new MockControlService();
    console_ = makeConsole(service);
  });

  afterEach(() => {
    console_.stop();
    vi.useRealTimers();
  });

  it("reconciles to the /status snapshot on connect", async () => {
    service.status.channels.left.gain_db = -6;
    service.status.channels.right.mode = "F1";
    await connect(console_);
    const state = console_.getState();
    expect(state.channels.get("left")!.faderDb).toBe(-6);
    expect(state.channels.get("right")!.mode).toBe("F1");
    expect(service.messagesOf("subscribe_levels")).toHaveLength(1);
  });

  it("fader position equals the acked value, not the requested one", async () => {
    await connect(console_);
    console_.moveFader("left", 6);
    expect(console_.getState().channels.get("left")!.faderDb).toBe(6);
    expect(console_.getState().channels.get("left")!.clamped).toBe(false);
  });

  it("clamped ack: asked 15, fader at 10 with clamp indicator", async () => {
    await connect(console_);
    console_.moveFader("left", 15);
    const strip = console_.getState().channels.get("left")!;
    expect(strip.faderDb).toBe(10);
    expect(strip.clamped).toBe(true);
  });

  it("nack leaves the fader untouched and surfaces the reason", async () => {
    await connect(console_);
    service.rejectAll = true;
    console_.moveFader("left", 4);
    const state = console_.getState();
    expect(state.channels.get("left")!.faderDb).toBe(0);
    expect(state.lastError).toBe("rejected");
    expect(state.pendingCount).toBe(0);
  });

  it("debounces a fader drag to at most 20 messages per second", async () => {
    await connect(console_);
    service.received.length = 0;
    // drag 0 -> +6 over 1 s in 100 small steps
    for (let i = 1; i <= 100; i++) {
      console_.moveFader("left", (6 * i) / 100);
      await vi.advanceTimersByTimeAsync(10);
    }
    await vi.advanceTimersByTimeAsync(100); // trailing send
    const sent = service.messagesOf("set_gain");
    expect(sent.length).toBeLessThanOrEqual(20);
    expect(sent.length).toBeGreaterThan(5);
    // the final position always reaches the engine
    expect(sent[sent.length - 1].value).toBe(6);
    expect(console_.getState().channels.get("left")!.faderDb).toBe(6);
    // fresh msg id on every message
    const ids = sent.map((m) => m.msg_id);
    expect(new Set(ids).size).toBe(ids.length);
  });

  it("mode click sends a single message", async () => {
    await connect(console_);
    service.received.length = 0;
    console_.setMode("left", "F1");
    expect(service.messagesOf("set_mode")).toHaveLength(1);
    expect(console_.getState().channels.get("left")!.mode).toBe("F1");
  });

  it("emits no commands while disconnected", async () => {
    await connect(console_);
    service.dropConnection();
    service.received.length = 0;
    expect(console_.commandsEnabled).toBe(false);
    expect(console_.moveFader("left", 3)).toBe(false);
    expect(console_.setMode("left", "F1")).toBe(false);
    expect(console_.startRecord("x")).toBe(false);
    await vi.advanceTimersByTimeAsync(200);
    expect(service.received.filter((m) => m.op !== "subscribe_levels"))
      .toHaveLength(0);
  });

  it("reconnects and reconciles to the new /status snapshot", async () => {
    await connect(console_);
    console_.moveFader("left", 6);
    expect(console_.getState().channels.get("left")!.faderDb).toBe(6);

    service.dropConnection();
    expect(console_.getState().connection).toBe("reconnecting");
    // another client changes the engine while we are away
    service.status.channels.left.gain_db = -12;
    service.status.channels.left.mode = "F1";

    await vi.advanceTimersByTimeAsync(500); // first backoff step
    await vi.advanceTimersByTimeAsync(0);
    expect(console_.getState().connection).toBe("connected");
    const strip = console_.getState().channels.get("left")!;
    expect(strip.faderDb).toBe(-12);
    expect(strip.mode).toBe("F1");
    expect(service.statusFetches).toBe(2);
  });

  it("record lifecycle: duplicate start disabled client-side", async () => {
    await connect(console_);
    expect(console_.startRecord("session-a")).toBe(true);
    expect(console_.getState().recording).toBe(true);
    expect(console_.startRecord("session-b")).toBe(false);
    expect(console_.stopRecord()).toBe(true);
    expect(console_.getState().recording).toBe(false);
  });

  it("telemetry drives the meters", async () => {
    await connect(console_);
    service.pushTelemetry({
      left: { pre_rms: 0.5, post_rms: 0.4 },
      right: { pre_rms: 0, post_rms: 0 },
    });
    const strip = console_.getState().channels.get("left")!;
    expect(strip.preLevel).toBe(0.5);
    expect(strip.postLevel).toBe(0.4);
  });
});

describe("renderConsole", () => {
  let service: MockControlService;
  let console_: MixerConsole;

  beforeEach(() => {
    vi.useFakeTimers();
    service = new MockControlService();
    console_ = makeConsole(service);
  });

  afterEach(() => {
    console_.stop();
    vi.useRealTimers();
  });

  it("disconnect shows a banner and disables everything", async () => {
    await connect(console_);
    service.dropConnection();
    const view = renderConsole(console_.getState());
    expect(view.banner).toContain("reconnecting");
    expect(view.recordButton.enabled).toBe(false);
    for (const strip of view.strips) {
      expect(strip.enabled).toBe(false);
      expect(strip.meter.frozen).toBe(true);
    }
  });

  it("connected view: two strips, detent at 0, fader range -40..10", async () => {
    await connect(console_);
    const view = renderConsole(console_.getState());
    expect(view.strips.map((s) => s.channel).sort()).toEqual(["left", "right"]);
    expect(view.banner).toBeNull();
    const fader = view.strips[0].fader;
    expect(fader.min).toBe(-40);
    expect(fader.max).toBe(10);
    expect(fader.detentDb).toBe(0);
  });
});
