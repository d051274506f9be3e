// Single source of truth for everything on screen. Renders are driven by
// subscription callbacks; every value shown comes from a received frame.

import type { AlertKind, ServerFrame, StateFrame } from "./protocol";

export type ConnectionStatus = "connecting" | "open" | "lost";

export const FEED_LIMIT = 100;
export const BANNER_TTL_MS = 10_000;

export interface Banner {
  id: number;
  kind: AlertKind;
  message: string;
  receivedAt: number;
  deadline: number;
}

export interface FeedEntry {
  at: number;
  frame: ServerFrame;
}

export interface UiState {
  connection: ConnectionStatus;
  device: StateFrame | null;
  banners: Banner[]; // newest first
  feed: FeedEntry[]; // newest first, bounded
  lastError: string | null;
}

type Listener = (state: UiState) => void;

export class UiStore {
  state: UiState = {
    connection: "connecting",
    device: null,
    banners: [],
    feed: [],
    lastError: null,
  };

  private listeners: Listener[] = [];
  private bannerSeq = 0;

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  setConnection(status: ConnectionStatus): void {
    if (this.state.connection === status) return;
    this.state = { ...this.state, connection: status };
    this.emit();
  }

  applyFrame(frame: ServerFrame, now: number): void {
    const feed = [{ at: now, frame }, ...this.state.feed].slice(0, FEED_LIMIT);
    let next: UiState = { ...this.state, feed };
    switch (frame.type) {
      case "state":
        next.device = frame;
        break;
      case "alert": {
        const banner: Banner = {
          id: ++this.bannerSeq,
          kind: frame.kind,
          message: frame.message,
          receivedAt: now,
          deadline: now + BANNER_TTL_MS,
        };
        next.banners = [banner, ...next.banners];
        break;
      }
      case "error":
        next.lastError = `${frame.code}: ${frame.message}`;
        break;
      case "ack":
        next.lastError = null;
        break;
    }
    this.state = next;
    this.emit();
  }

  dismissBanner(id: number): void {
    const banners = this.state.banners.filter((b) => b.id !== id);
    if (banners.length === this.state.banners.length) return;
    this.state = { ...this.state, banners };
    this.emit();
  }

  /** Drop banners whose auto-dismiss deadline has passed. */
  prune(now: number): void {
    const banners = this.state.banners.filter((b) => b.deadline > now);
    if (banners.length === this.state.banners.length) return;
    this.state = { ...this.state, banners };
    this.emit();
  }

  clearError(): void {
    if (this.state.lastError === null) return;
    this.state = { ...this.state, lastError: null };
    this.emit();
  }
}
