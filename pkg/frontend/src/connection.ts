// WebSocket session with the device: subscribes on open, surfaces decoded
// frames, and reconnects with capped exponential backoff after a drop.

import { ClientFrame, ServerFrame, decodeServerFrame, encodeFrame } from "./protocol";
import type { ConnectionStatus } from "./store";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ConnectionHandlers {
  onStatus: (status: ConnectionStatus) => void;
  onFrame: (frame: ServerFrame) => void;
}

export const BACKOFF_MS = [500, 1000, 2000, 5000] as const;

const defaultFactory: SocketFactory = (url) => new WebSocket(url) as unknown as SocketLike;

export class DeviceConnection {
  private socket: SocketLike | null = null;
  private attempts = 0;
  private stopped = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly handlers: ConnectionHandlers,
    private readonly factory: SocketFactory = defaultFactory,
  ) {}

  start(): void {
    this.stopped = false;
    this.open();
  }

  stop(): void {
    this.stopped = true;
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.retryTimer = null;
    const socket = this.socket;
    this.socket = null;
    if (socket) {
      socket.onclose = null;
      socket.onerror = null;
      socket.close();
    }
  }

  get connected(): boolean {
    return this.socket !== null && this.attempts === 0;
  }

  send(frame: ClientFrame): boolean {
    if (this.socket === null) return false;
    try {
      this.socket.send(encodeFrame(frame));
      return true;
    } catch {
      return false;
    }
  }

  private open(): void {
    this.handlers.onStatus(this.attempts === 0 ? "connecting" : "lost");
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempts = 0;
      this.send({ type: "subscribe" });
      this.handlers.onStatus("open");
    };
    socket.onmessage = (event) => {
      if (typeof event.data !== "string") return;
      let frame: ServerFrame;
      try {
        frame = decodeServerFrame(event.data);
      } catch {
        return; // never render anything we could not decode
      }
      this.handlers.onFrame(frame);
    };
    socket.onclose = () => this.scheduleRetry();
    socket.onerror = () => this.scheduleRetry();
  }

  private scheduleRetry(): void {
    if (this.stopped) return;
    if (this.socket) {
      this.socket.onclose = null;
      this.socket.onerror = null;
      this.socket = null;
    }
    if (this.retryTimer !== null) return;
    this.handlers.onStatus("lost");
    const delay = BACKOFF_MS[Math.min(this.attempts, BACKOFF_MS.length - 1)] ?? 5000;
    this.attempts += 1;
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      this.open();
    }, delay);
  }
}
