/** Console state machine: ack-gated channel strips driven by the
 * control-service protocol.
 *
 * The displayed fader value only ever changes on an ack (or on the
 * /status reconciliation that follows a reconnect) — the UI never shows
 * a gain the engine has not confirmed. Fader drags are debounced to at
 * most 20 messages per second per channel, with a trailing send so the
 * final position always reaches the engine.
 */

import { ConsoleConnection, ConnectionState } from "./connection.js";
import { Meter } from "./meters.js";
import {
  AckFrame,
  CombineMode,
  ControlMessage,
  ControlOp,
  ErrorFrame,
  FilterEdges,
  ServerFrame,
  StatusSnapshot,
  TelemetryFrame,
} from "./protocol.js";

// Just over 1000/20 ms, so a one-second drag emits at most 20 set_gain
// messages even counting the trailing send.
export const FADER_MIN_INTERVAL_MS = 53;

export interface StripState {
  faderDb: number;
  mode: CombineMode;
  filter: FilterEdges;
  preLevel: number;
  postLevel: number;
  muted: boolean;
  clamped: boolean;
}

export interface ConsoleState {
  connection: ConnectionState;
  channels: Map<string, StripState>;
  recording: boolean;
  recordingSinceMs: number | null;
  lastError: string | null;
  pendingCount: number;
}

interface PendingCommand {
  op: ControlOp;
  channel?: string;
  requested?: unknown;
}

interface FaderDebounce {
  lastSentMs: number;
  trailing: number | null;
  timer: unknown;
}

export interface MixerConsoleOptions {
  now?: () => number;
  setTimer?: (fn: () => void, ms: number) => unknown;
  clearTimer?: (handle: unknown) => void;
}

const DEFAULT_FILTER: FilterEdges = { low_cut: 80, high_cut: 1000, order: 4 };

export class MixerConsole {
  onChange: ((state: ConsoleState) => void) | null = null;

  private readonly channels = new Map<string, StripState>();
  private readonly meters = new Map<string, { pre: Meter; post: Meter }>();
  private readonly pending = new Map<string, PendingCommand>();
  private readonly faders = new Map<string, FaderDebounce>();
  private connectionState: ConnectionState = "disconnected";
  private recording = false;
  private recordingSinceMs: number | null = null;
  private lastError: string | null = null;
  private nextId = 0;

  private readonly now: () => number;
  private readonly setTimer: (fn: () => void, ms: number) => unknown;
  private readonly clearTimer: (handle: unknown) => void;

  constructor(
    private readonly connection: ConsoleConnection,
    options: MixerConsoleOptions = {},
  ) {
    this.now = options.now ?? (() => Date.now());
    this.setTimer = options.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimer = options.clearTimer ?? ((h) => clearTimeout(h as number));
    connection.onFrame = (frame) => this.handleFrame(frame);
    connection.onConnect = (snapshot) => this.reconcile(snapshot);
    connection.onStateChange = (state) => {
      this.connectionState = state;
      if (state !== "connected") {
        // meters freeze, in-flight commands will never be acked
        this.pending.clear();
        for (const debounce of this.faders.values()) {
          if (debounce.timer !== null) {
            this.clearTimer(debounce.timer);
          }
        }
        this.faders.clear();
      }
      this.emit();
    };
  }

  start(): void {
    this.connection.connect();
  }

  stop(): void {
    this.connection.close();
  }

  get commandsEnabled(): boolean {
    return this.connectionState === "connected";
  }

  getState(): ConsoleState {
    return {
      connection: this.connectionState,
      channels: new Map(
        [...this.channels].map(([cid, strip]) => [cid, { ...strip }]),
      ),
      recording: this.recording,
      recordingSinceMs: this.recordingSinceMs,
      lastError: this.lastError,
      pendingCount: this.pending.size,
    };
  }

  // -- user actions --------------------------------------------------

  /** Debounced fader move; returns true if a message went out now. */
  moveFader(channel: string, db: number): boolean {
    if (!this.commandsEnabled || !this.channels.has(channel)) {
      return false;
    }
    // send the raw request; the engine clamps and the ack gates the display
    let debounce = this.faders.get(channel);
    if (debounce === undefined) {
      debounce = { lastSentMs: -Infinity, trailing: null, timer: null };
      this.faders.set(channel, debounce);
    }
    const now = this.now();
    if (now - debounce.lastSentMs >= FADER_MIN_INTERVAL_MS) {
      debounce.lastSentMs = now;
      this.sendCommand("set_gain", channel, db);
      return true;
    }
    debounce.trailing = db;
    if (debounce.timer === null) {
      const wait = debounce.lastSentMs + FADER_MIN_INTERVAL_MS - now;
      debounce.timer = this.setTimer(() => {
        debounce.timer = null;
        const value = debounce.trailing;
        debounce.trailing = null;
        if (value !== null && this.commandsEnabled) {
          debounce.lastSentMs = this.now();
          this.sendCommand("set_gain", channel, value);
        }
      }, wait);
    }
    return false;
  }

  setMode(channel: string, mode: CombineMode): boolean {
    return this.sendCommand("set_mode", channel, mode);
  }

  setFilter(channel: string, edges: FilterEdges): boolean {
    return this.sendCommand("set_filter", channel, edges);
  }

  toggleMute(channel: string): boolean {
    const strip = this.channels.get(channel);
    if (strip === undefined) {
      return false;
    }
    return this.sendCommand("mute", channel, !strip.muted);
  }

  startRecord(path: string): boolean {
    if (this.recording) {
      return false; // server rejects duplicates; control stays disabled
    }
    return this.sendCommand("start_record", undefined, path);
  }

  stopRecord(): boolean {
    if (!this.recording) {
      return false;
    }
    return this.sendCommand("stop_record", undefined, undefined);
  }

  // -- protocol ------------------------------------------------------

  private sendCommand(op: ControlOp, channel?: string, value?: unknown): boolean {
    if (!this.commandsEnabled) {
      return false;
    }
    const msg_id = `c${this.nextId++}`;
    const message: ControlMessage = { op, msg_id };
    if (channel !== undefined) {
      message.channel = channel;
    }
    if (value !== undefined) {
      message.value = value;
    }
    // register before sending: a local test transport may ack synchronously
    this.pending.set(msg_id, { op, channel, requested: value });
    this.connection.send(message);
    this.emit();
    return true;
  }

  private reconcile(snapshot: StatusSnapshot): void {
    this.channels.clear();
    this.pending.clear();
    for (const [cid, levels] of Object.entries(snapshot.channels)) {
      this.channels.set(cid, {
        faderDb: levels.gain_db,
        mode: levels.mode,
        filter: this.channels.get(cid)?.filter ?? DEFAULT_FILTER,
        preLevel: levels.pre_rms,
        postLevel: levels.post_rms,
        muted: levels.mode === "F0",
        clamped: false,
      });
      if (!this.meters.has(cid)) {
        this.meters.set(cid, { pre: new Meter(), post: new Meter() });
      }
    }
    this.recording = snapshot.recording;
    this.recordingSinceMs = snapshot.recording ? this.now() : null;
    this.lastError = null;
    this.sendCommand("subscribe_levels", undefined, undefined);
    this.emit();
  }

  private handleFrame(frame: ServerFrame): void {
    if (frame.type === "ack") {
      this.handleAck(frame);
    } else if (frame.type === "error") {
      this.handleError(frame);
    } else {
      this.handleTelemetry(frame);
    }
    this.emit();
  }

  private handleAck(frame: AckFrame): void {
    const pending = this.pending.get(frame.msg_id);
    this.pending.delete(frame.msg_id);
    const channel = frame.channel ?? pending?.channel;
    const strip = channel !== undefined && channel !== null
      ? this.channels.get(channel)
      : undefined;
    switch (frame.op) {
      case "set_gain":
        if (strip !== undefined && typeof frame.applied === "number") {
          strip.faderDb = frame.applied;
          strip.clamped =
            typeof pending?.requested === "number" &&
            pending.requested !== frame.applied;
        }
        break;
      case "set_mode":
        if (strip !== undefined) {
          strip.mode = (frame.applied ?? pending?.requested) as CombineMode;
          strip.muted = strip.mode === "F0";
        }
        break;
      case "set_filter":
        if (strip !== undefined && pending?.requested !== undefined) {
          strip.filter = pending.requested as FilterEdges;
        }
        break;
      case "mute":
        if (strip !== undefined) {
          strip.muted = Boolean(frame.applied ?? pending?.requested);
        }
        break;
      case "start_record":
        this.recording = true;
        this.recordingSinceMs = this.now();
        break;
      case "stop_record":
        this.recording = false;
        this.recordingSinceMs = null;
        break;
      case "subscribe_levels":
        break;
    }
  }

  private handleError(frame: ErrorFrame): void {
    // no optimistic commit to revert; drop the pending entry and surface
    // the reason
    if (frame.msg_id !== undefined) {
      this.pending.delete(frame.msg_id);
    }
    this.lastError = frame.reason;
  }

  private handleTelemetry(frame: TelemetryFrame): void {
    const now = this.now();
    for (const [cid, levels] of Object.entries(frame.channels)) {
      const strip = this.channels.get(cid);
      const meters = this.meters.get(cid);
      if (strip === undefined || meters === undefined) {
        continue;
      }
      strip.preLevel = meters.pre.update(levels.pre_rms, now);
      strip.postLevel = meters.post.update(levels.post_rms, now);
    }
  }

  private emit(): void {
    if (this.onChange !== null) {
      this.onChange(this.getState());
    }
  }
}
