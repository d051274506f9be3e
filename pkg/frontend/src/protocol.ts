// Wire protocol shared with the device: one JSON object per WebSocket
// message, discriminated by "type". Keys are emitted sorted so outgoing
// frames match the device's canonical encoding byte for byte.

export type Position = "covering" | "open" | "partial" | "moving";
export type AlertKind = "proximity" | "fever";

export interface StateFrame {
  type: "state";
  angle_deg: number;
  target_deg: number;
  position: Position;
  last_temp_c: number | null;
  alert_active: boolean;
}

export interface AlertFrame {
  type: "alert";
  kind: AlertKind;
  message: string;
  at_ms: number;
}

export interface AckFrame {
  type: "ack";
  of: string;
}

export interface ErrorFrame {
  type: "error";
  code: string;
  message: string;
}

export type ServerFrame = StateFrame | AlertFrame | AckFrame | ErrorFrame;

export interface SetAngleFrame {
  type: "set_angle";
  angle: number;
}

export interface ToggleFrame {
  type: "toggle";
}

export interface SubscribeFrame {
  type: "subscribe";
}

export interface GetStateFrame {
  type: "get_state";
}

export type ClientFrame = SetAngleFrame | ToggleFrame | SubscribeFrame | GetStateFrame;

const POSITIONS: readonly string[] = ["covering", "open", "partial", "moving"];
const ALERT_KINDS: readonly string[] = ["proximity", "fever"];

export function encodeFrame(frame: ClientFrame): string {
  const sorted: Record<string, unknown> = {};
  for (const key of Object.keys(frame).sort()) {
    sorted[key] = (frame as unknown as Record<string, unknown>)[key];
  }
  return JSON.stringify(sorted);
}

function isNumber(value: unknown): value is number {
  return typeof value === "number" && Number.isFinite(value);
}

export class FrameDecodeError extends Error {}

// The dashboard never fabricates state, so anything it renders must come
// out of this decoder intact or not at all.
export function decodeServerFrame(text: string): ServerFrame {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    throw new FrameDecodeError(`not JSON: ${text.slice(0, 80)}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new FrameDecodeError("frame must be an object");
  }
  const obj = raw as Record<string, unknown>;
  switch (obj.type) {
    case "state": {
      if (
        !isNumber(obj.angle_deg) ||
        !isNumber(obj.target_deg) ||
        typeof obj.position !== "string" ||
        !POSITIONS.includes(obj.position) ||
        !(obj.last_temp_c === null || isNumber(obj.last_temp_c)) ||
        typeof obj.alert_active !== "boolean"
      ) {
        throw new FrameDecodeError("bad state frame");
      }
      return {
        type: "state",
        angle_deg: obj.angle_deg,
        target_deg: obj.target_deg,
        position: obj.position as Position,
        last_temp_c: obj.last_temp_c,
        alert_active: obj.alert_active,
      };
    }
    case "alert": {
      if (
        typeof obj.kind !== "string" ||
        !ALERT_KINDS.includes(obj.kind) ||
        typeof obj.message !== "string" ||
        obj.message.length === 0 ||
        !isNumber(obj.at_ms)
      ) {
        throw new FrameDecodeError("bad alert frame");
      }
      return { type: "alert", kind: obj.kind as AlertKind, message: obj.message, at_ms: obj.at_ms };
    }
    case "ack": {
      if (typeof obj.of !== "string") throw new FrameDecodeError("bad ack frame");
      return { type: "ack", of: obj.of };
    }
    case "error": {
      if (typeof obj.code !== "string" || typeof obj.message !== "string") {
        throw new FrameDecodeError("bad error frame");
      }
      return { type: "error", code: obj.code, message: obj.message };
    }
    default:
      throw new FrameDecodeError(`unknown frame type: ${String(obj.type)}`);
  }
}
