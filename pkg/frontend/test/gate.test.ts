import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { COMMAND_TIMEOUT_MS, CommandGate } from "../src/gate";
import type { ClientFrame } from "../src/protocol";

describe("CommandGate", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  function collector() {
    const sent: ClientFrame[] = [];
    const gate = new CommandGate((frame) => sent.push(frame));
    return { sent, gate };
  }

  it("sends immediately when idle", () => {
    const { sent, gate } = collector();
    gate.commit({ type: "toggle" });
    expect(sent).toEqual([{ type: "toggle" }]);
  });

  it("holds one in-flight command and coalesces to the latest", () => {
    const { sent, gate } = collector();
    gate.commit({ type: "set_angle", angle: 10 });
    gate.commit({ type: "set_angle", angle: 20 });
    gate.commit({ type: "set_angle", angle: 30 });
    expect(sent).toEqual([{ type: "set_angle", angle: 10 }]);
    gate.settle(); // ack arrives
    expect(sent).toEqual([
      { type: "set_angle", angle: 10 },
      { type: "set_angle", angle: 30 },
    ]);
  });

  it("releases the slot after the 2 s timeout", () => {
    const { sent, gate } = collector();
    gate.commit({ type: "set_angle", angle: 10 });
    gate.commit({ type: "set_angle", angle: 50 });
    vi.advanceTimersByTime(COMMAND_TIMEOUT_MS);
    expect(sent).toHaveLength(2);
    expect(gate.busy).toBe(true); // the queued command is now in flight
  });

  it("reset drops pending work after a disconnect", () => {
    const { sent, gate } = collector();
    gate.commit({ type: "set_angle", angle: 10 });
    gate.commit({ type: "set_angle", angle: 50 });
    gate.reset();
    vi.advanceTimersByTime(COMMAND_TIMEOUT_MS * 2);
    expect(sent).toHaveLength(1);
    expect(gate.busy).toBe(false);
  });

  it("settle without traffic is harmless", () => {
    const { gate } = collector();
    gate.settle();
    expect(gate.busy).toBe(false);
  });
});
