/** Pure view model: consoles render from this, tests assert on it. */

import { ConsoleState, StripState } from "./console.js";
import { GAIN_DB_MAX, GAIN_DB_MIN } from "./protocol.js";

export interface FaderView {
  db: number;
  min: number;
  max: number;
  detentDb: number;
  clamped: boolean;
}

export interface MeterView {
  pre: number;
  post: number;
  frozen: boolean;
}

export interface StripView {
  channel: string;
  fader: FaderView;
  mode: string;
  filterLabel: string;
  meter: MeterView;
  muted: boolean;
  enabled: boolean;
}

export interface ConsoleView {
  strips: StripView[];
  banner: string | null;
  recordButton: { label: string; enabled: boolean };
  recordingSinceMs: number | null;
  lastError: string | null;
}

function stripView(channel: string, strip: StripState, connected: boolean): StripView {
  return {
    channel,
    fader: {
      db: strip.faderDb,
      min: GAIN_DB_MIN,
      max: GAIN_DB_MAX,
      detentDb: 0,
      clamped: strip.clamped,
    },
    mode: strip.mode,
    filterLabel: `${strip.filter.low_cut}–${strip.filter.high_cut} Hz`,
    meter: { pre: strip.preLevel, post: strip.postLevel, frozen: !connected },
    muted: strip.muted,
    enabled: connected,
  };
}

export function renderConsole(state: ConsoleState): ConsoleView {
  const connected = state.connection === "connected";
  return {
    strips: [...state.channels].map(([cid, strip]) =>
      stripView(cid, strip, connected),
    ),
    banner: connected
      ? null
      : state.connection === "reconnecting"
        ? "connection lost — reconnecting"
        : "disconnected",
    recordButton: {
      label: state.recording ? "stop" : "record",
      enabled: connected,
    },
    recordingSinceMs: state.recordingSinceMs,
    lastError: state.lastError,
  };
}
