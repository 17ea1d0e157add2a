/**
 * Reconnecting WebSocket wrapper.
 *
 * Keeps exactly one connection to the engine bridge alive, retrying with a
 * capped backoff whenever it drops. Events sent while offline are queued up
 * to a fixed cap and flushed in order on reconnect; past the cap they are
 * dropped and counted so the app can warn visibly instead of silently
 * losing interactions.
 */

import type { ClientEvent, ServerMessage } from "./protocol.js";
import { parseServerMessage } from "./protocol.js";

export type ConnectionState = "connecting" | "connected" | "disconnected";

export const QUEUE_LIMIT = 100;

const RETRY_MIN_MS = 500;
const RETRY_MAX_MS = 4000;

/* Minimal slice of the WebSocket surface, so tests can inject a fake. */
export interface SocketLike {
  readyState: number;
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export interface SocketHooks {
  onMessage: (msg: ServerMessage) => void;
  onState: (state: ConnectionState) => void;
  /** Called with the running total whenever an event is dropped. */
  onDrop?: (total: number) => void;
}

export class EngineSocket {
  readonly url: string;
  state: ConnectionState = "disconnected";
  dropped = 0;

  private hooks: SocketHooks;
  private factory: (url: string) => SocketLike;
  private ws: SocketLike | null = null;
  private queue: ClientEvent[] = [];
  private retryMs = RETRY_MIN_MS;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private closed = false;

  constructor(url: string, hooks: SocketHooks,
              factory?: (url: string) => SocketLike) {
    this.url = url;
    this.hooks = hooks;
    this.factory = factory ?? ((u) => new WebSocket(u) as unknown as SocketLike);
  }

  connect(): void {
    this.closed = false;
    this.open();
  }

  /** Stop for good: no retry, queue kept untouched. */
  close(): void {
    this.closed = true;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    const ws = this.ws;
    this.ws = null;
    if (ws) {
      ws.onopen = ws.onclose = ws.onerror = ws.onmessage = null;
      ws.close();
    }
    this.setState("disconnected");
  }

  send(event: ClientEvent): void {
    if (this.ws && this.ws.readyState === 1 /* OPEN */) {
      this.ws.send(JSON.stringify(event));
      return;
    }
    if (this.queue.length >= QUEUE_LIMIT) {
      this.dropped += 1;
      this.hooks.onDrop?.(this.dropped);
      return;
    }
    this.queue.push(event);
  }

  get queuedCount(): number {
    return this.queue.length;
  }

  private open(): void {
    this.setState("connecting");
    let ws: SocketLike;
    try {
      ws = this.factory(this.url);
    } catch {
      this.scheduleRetry();
      return;
    }
    this.ws = ws;
    ws.onopen = () => {
      this.retryMs = RETRY_MIN_MS;
      this.setState("connected");
      const backlog = this.queue;
      this.queue = [];
      for (const event of backlog) this.send(event);
    };
    ws.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg) this.hooks.onMessage(msg);
    };
    ws.onerror = () => { /* the close handler owns the retry */ };
    ws.onclose = () => {
      if (this.ws === ws) this.ws = null;
      if (!this.closed) {
        this.setState("disconnected");
        this.scheduleRetry();
      }
    };
  }

  private scheduleRetry(): void {
    if (this.closed || this.retryTimer !== null) return;
    const delay = this.retryMs;
    this.retryMs = Math.min(this.retryMs * 2, RETRY_MAX_MS);
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      if (!this.closed) this.open();
    }, delay);
  }

  private setState(state: ConnectionState): void {
    if (state !== this.state) {
      this.state = state;
      this.hooks.onState(state);
    }
  }
}
