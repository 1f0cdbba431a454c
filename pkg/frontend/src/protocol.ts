/** JSON schema of the control-service WebSocket and /status endpoint. */

export type CombineMode = "F0" | "F1" | "F3";

export type ControlOp =
  | "set_gain"
  | "set_mode"
  | "set_filter"
  | "mute"
  | "start_record"
  | "stop_record"
  | "subscribe_levels";

export interface FilterEdges {
  low_cut: number;
  high_cut: number;
  order: number;
}

export interface ControlMessage {
  op: ControlOp;
  channel?: string;
  value?: unknown;
  msg_id: string;
}

export interface AckFrame {
  type: "ack";
  msg_id: string;
  op: ControlOp;
  channel?: string | null;
  applied?: unknown;
}

export interface ErrorFrame {
  type: "error";
  msg_id?: string;
  op?: ControlOp;
  reason: string;
}

export interface ChannelLevels {
  pre_rms: number;
  post_rms: number;
  mode: CombineMode;
  gain_db: number;
}

export interface TelemetryFrame {
  type: "telemetry";
  seq: number;
  timestamp: number;
  channels: Record<string, ChannelLevels>;
}

export type ServerFrame = AckFrame | ErrorFrame | TelemetryFrame;

export interface StatusSnapshot {
  rate: number;
  block_size: number;
  channels: Record<string, ChannelLevels>;
  uptime_s: number;
  deadline_misses: number;
  recording: boolean;
  recording_path: string | null;
  clamp_count: number;
}

export const GAIN_DB_MIN = -40;
export const GAIN_DB_MAX = 10;

export function parseServerFrame(data: string): ServerFrame | null {
  let doc: unknown;
  try {
    doc = JSON.parse(data);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null || !("type" in doc)) {
    return null;
  }
  const type = (doc as { type: unknown }).type;
  if (type === "ack" || type === "error" || type === "telemetry") {
    return doc as ServerFrame;
  }
  return null;
}
