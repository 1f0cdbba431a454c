/** WebSocket lifecycle: connect, parse frames, reconnect with
 * exponential backoff capped at 5 s, and fetch the /status snapshot on
 * every (re)connect so the console can reconcile before enabling
 * controls.
 *
 * The socket, fetch, and timer primitives are injectable so tests can
 * drive the connection deterministically with a mock service.
 */

import { parseServerFrame, ServerFrame, StatusSnapshot } from "./protocol.js";

export type ConnectionState = "connected" | "reconnecting" | "disconnected";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;
export type StatusFetcher = (url: string) => Promise<StatusSnapshot>;

export interface ConnectionOptions {
  controlUrl: string;
  statusUrl: string;
  socketFactory?: SocketFactory;
  fetchStatus?: StatusFetcher;
  setTimer?: (fn: () => void, ms: number) => unknown;
  clearTimer?: (handle: unknown) => void;
  backoffBaseMs?: number;
  backoffCapMs?: number;
}

export const BACKOFF_BASE_MS = 500;
export const BACKOFF_CAP_MS = 5000;

const defaultSocketFactory: SocketFactory = (url) =>
  new WebSocket(url) as unknown as SocketLike;

const defaultFetchStatus: StatusFetcher = async (url) => {
  const resp = await fetch(url);
  if (!resp.ok) {
    throw new Error(`status fetch failed: ${resp.status}`);
  }
  return (await resp.json()) as StatusSnapshot;
};

export class ConsoleConnection {
  onFrame: ((frame: ServerFrame) => void) | null = null;
  onConnect: ((snapshot: StatusSnapshot) => void) | null = null;
  onStateChange: ((state: ConnectionState) => void) | null = null;

  private socket: SocketLike | null = null;
  private state: ConnectionState = "disconnected";
  private attempts = 0;
  private retryHandle: unknown = null;
  private closed = false;

  private readonly socketFactory: SocketFactory;
  private readonly fetchStatus: StatusFetcher;
  private readonly setTimer: (fn: () => void, ms: number) => unknown;
  private readonly clearTimer: (handle: unknown) => void;
  private readonly backoffBaseMs: number;
  private readonly backoffCapMs: number;

  constructor(private readonly options: ConnectionOptions) {
    this.socketFactory = options.socketFactory ?? defaultSocketFactory;
    this.fetchStatus = options.fetchStatus ?? defaultFetchStatus;
    this.setTimer = options.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimer = options.clearTimer ?? ((h) => clearTimeout(h as number));
    this.backoffBaseMs = options.backoffBaseMs ?? BACKOFF_BASE_MS;
    this.backoffCapMs = options.backoffCapMs ?? BACKOFF_CAP_MS;
  }

  getState(): ConnectionState {
    return this.state;
  }

  /** Delay before reconnect attempt n (0-based): base·2^n, capped. */
  backoffMs(attempt: number): number {
    return Math.min(this.backoffBaseMs * 2 ** attempt, this.backoffCapMs);
  }

  connect(): void {
    this.closed = false;
    this.open();
  }

  close(): void {
    this.closed = true;
    if (this.retryHandle !== null) {
      this.clearTimer(this.retryHandle);
      this.retryHandle = null;
    }
    if (this.socket !== null) {
      const socket = this.socket;
      this.socket = null;
      socket.onclose = null;
      socket.close();
    }
    this.setState("disconnected");
  }

  send(message: unknown): void {
    if (this.state !== "connected" || this.socket === null) {
      throw new Error("not connected");
    }
    this.socket.send(JSON.stringify(message));
  }

  private open(): void {
    const socket = this.socketFactory(this.options.controlUrl);
    this.socket = socket;
    socket.onopen = () => {
      void this.handleOpen(socket);
    };
    socket.onmessage = (ev) => {
      const frame = parseServerFrame(ev.data);
      if (frame !== null && this.onFrame !== null) {
        this.onFrame(frame);
      }
    };
    socket.onerror = () => {
      /* onclose always follows; backoff is scheduled there */
    };
    socket.onclose = () => {
      if (this.socket === socket) {
        this.socket = null;
        this.scheduleRetry();
      }
    };
  }

  private async handleOpen(socket: SocketLike): Promise<void> {
    try {
      const snapshot = await this.fetchStatus(this.options.statusUrl);
      if (this.socket !== socket || this.closed) {
        return;
      }
      this.attempts = 0;
      this.setState("connected");
      if (this.onConnect !== null) {
        this.onConnect(snapshot);
      }
    } catch {
      // status unavailable: treat as a failed connect and retry
      socket.close();
    }
  }

  private scheduleRetry(): void {
    if (this.closed) {
      this.setState("disconnected");
      return;
    }
    this.setState("reconnecting");
    const delay = this.backoffMs(this.attempts);
    this.attempts += 1;
    this.retryHandle = this.setTimer(() => {
      this.retryHandle = null;
      this.open();
    }, delay);
  }

  private setState(state: ConnectionState): void {
    if (state === this.state) {
      return;
    }
    this.state = state;
    if (this.onStateChange !== null) {
      this.onStateChange(state);
    }
  }
}
