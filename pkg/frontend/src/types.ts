// Shapes shared with the irboard HTTP API.

export type Phase =
  | "disconnected"
  | "connected"
  | "ir_enabled"
  | "aligning"
  | "calibrating"
  | "running"
  | "stopped";

export type ZoneActionName =
  | "left_click"
  | "right_click"
  | "middle_click"
  | "double_click"
  | "none";

export const ZONE_ACTIONS: ZoneActionName[] = [
  "none",
  "left_click",
  "right_click",
  "middle_click",
  "double_click",
];

export interface ZoneConfigBody {
  left: ZoneActionName[];
  right: ZoneActionName[];
  band_width: number;
  enabled: boolean;
}

export interface Snapshot {
  phase: Phase;
  battery_percent: number | null;
  alignment: { visible: boolean[]; armed_corner: number | null; ok: boolean };
  calibration: {
    corner_index: number;
    samples_collected: number;
    corners_captured: number;
  };
  zone_config: ZoneConfigBody;
  screen_resolution: [number, number];
  pen: { s: number; t: number; pressed: boolean };
  frame: number;
  recent_blobs: BlobsRecord[];
  recent_events: StreamRecord[];
}

export type BlobTriple = [number, number, number]; // x, y, size

export interface BlobsRecord {
  t: number;
  kind: "blobs";
  blobs: BlobTriple[];
}

export type StreamRecord =
  | { t: number; kind: "phase"; phase: Phase }
  | { t: number; kind: "down" | "move" | "up"; u: number; v: number }
  | { t: number; kind: "side"; action: ZoneActionName }
  | { t: number; kind: "battery"; percent: number }
  | { t: number; kind: "low_battery"; percent: number }
  | BlobsRecord
  | { t: number; kind: "corner_captured"; corner: number; point: [number, number] }
  | { t: number; kind: "calibration_complete" }
  | { t: number; kind: "calibration_failed"; reason: string }
  | { t: number; kind: "device_command"; data: string };

export const CORNER_NAMES = [
  "top-left",
  "top-right",
  "bottom-left",
  "bottom-right",
];
