// Rate limiter for device commands: at most one in flight; whatever is
// committed meanwhile is coalesced to the latest and dispatched once the
// ack (or error, or a 2 s timeout) settles the slot.

import type { ClientFrame } from "./protocol";

export const COMMAND_TIMEOUT_MS = 2000;

export class CommandGate {
  private inflight = false;
  private pending: ClientFrame | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly send: (frame: ClientFrame) => void,
    private readonly timeoutMs: number = COMMAND_TIMEOUT_MS,
  ) {}

  get busy(): boolean {
    return this.inflight;
  }

  commit(frame: ClientFrame): void {
    if (this.inflight) {
      this.pending = frame;
      return;
    }
    this.dispatch(frame);
  }

  /** Call for every ack/error frame from the server. */
  settle(): void {
    if (!this.inflight) return;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    this.inflight = false;
    if (this.pending !== null) {
      const next = this.pending;
      this.pending = null;
      this.dispatch(next);
    }
  }

  /** Forget everything (connection lost: the reply will never come). */
  reset(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    this.inflight = false;
    this.pending = null;
  }

  private dispatch(frame: ClientFrame): void {
    this.inflight = true;
    this.send(frame);
    this.timer = setTimeout(() => this.settle(), this.timeoutMs);
  }
}
