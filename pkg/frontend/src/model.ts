// Pure view-model: everything the console renders, derived from the
// snapshot plus the push-channel records. No DOM, no fetch; main.ts owns
// those and the tests exercise this file directly.

import type {
  BlobTriple,
  Phase,
  Snapshot,
  StreamRecord,
  ZoneConfigBody,
} from "./types.js";
import { CORNER_NAMES } from "./types.js";

export const LOG_LIMIT = 200;
export const STROKE_LIMIT = 20;
export const STROKE_POINT_LIMIT = 500;
export const LOW_BATTERY_PERCENT = 50;

export interface Stroke {
  points: { u: number; v: number }[];
  closed: boolean;
}

export interface ConsoleModel {
  phase: Phase;
  batteryPercent: number | null;
  blobs: BlobTriple[];
  corners: ([number, number] | null)[];
  cornersCaptured: number;
  samplesCollected: number;
  calibrationNote: string | null;
  alignmentVisible: boolean[];
  armedCorner: number | null;
  zones: ZoneConfigBody;
  strokes: Stroke[];
  sideFlash: string | null;
  log: string[];
  connected: boolean; // push channel attached
}

export function initialModel(): ConsoleModel {
  return {
    phase: "disconnected",
    batteryPercent: null,
    blobs: [],
    corners: [null, null, null, null],
    cornersCaptured: 0,
    samplesCollected: 0,
    calibrationNote: null,
    alignmentVisible: [false, false, false, false],
    armedCorner: null,
    zones: {
      left: ["none", "none", "none"],
      right: ["none", "none", "none"],
      band_width: 0.03,
      enabled: true,
    },
    strokes: [],
    sideFlash: null,
    log: [],
    connected: false,
  };
}

function pushLog(log: string[], line: string): string[] {
  const next = log.concat(line);
  return next.length > LOG_LIMIT ? next.slice(next.length - LOG_LIMIT) : next;
}

function pushPoint(strokes: Stroke[], u: number, v: number, start: boolean): Stroke[] {
  const next = strokes.map((s) => ({ ...s, points: s.points.slice() }));
  if (start || next.length === 0 || next[next.length - 1]!.closed) {
    next.push({ points: [{ u, v }], closed: false });
  } else {
    const current = next[next.length - 1]!;
    if (current.points.length < STROKE_POINT_LIMIT) current.points.push({ u, v });
  }
  return next.length > STROKE_LIMIT ? next.slice(next.length - STROKE_LIMIT) : next;
}

function describe(record: StreamRecord): string | null {
  switch (record.kind) {
    case "phase":
      return `phase: ${record.phase}`;
    case "down":
      return `down (${record.u.toFixed(3)}, ${record.v.toFixed(3)})`;
    case "up":
      return `up (${record.u.toFixed(3)}, ${record.v.toFixed(3)})`;
    case "side":
      return `side action: ${record.action}`;
    case "battery":
      return `battery ${record.percent.toFixed(1)}%`;
    case "low_battery":
      return `LOW BATTERY ${record.percent.toFixed(1)}%`;
    case "corner_captured":
      return `corner ${CORNER_NAMES[record.corner]} captured at (${record.point[0].toFixed(1)}, ${record.point[1].toFixed(1)})`;
    case "calibration_complete":
      return "calibration complete";
    case "calibration_failed":
      return `calibration failed: ${record.reason}`;
    case "device_command":
      return `device command ${record.data}`;
    default:
      return null; // move and blobs records would drown the log
  }
}

export function applyRecord(model: ConsoleModel, record: StreamRecord): ConsoleModel {
  const next: ConsoleModel = { ...model };
  const line = describe(record);
  if (line !== null) next.log = pushLog(model.log, `[${record.t}] ${line}`);

  switch (record.kind) {
    case "phase":
      next.phase = record.phase;
      if (record.phase === "calibrating") {
        next.corners = [null, null, null, null];
        next.cornersCaptured = 0;
        next.samplesCollected = 0;
        next.calibrationNote = null;
      }
      if (record.phase === "disconnected" || record.phase === "stopped") {
        next.blobs = [];
        next.strokes = [];
      }
      break;
    case "battery":
    case "low_battery":
      next.batteryPercent = record.percent;
      break;
    case "blobs":
      next.blobs = record.blobs;
      break;
    case "corner_captured": {
      const corners = model.corners.slice();
      corners[record.corner] = record.point;
      next.corners = corners;
      next.cornersCaptured = record.corner + 1;
      next.samplesCollected = 0;
      break;
    }
    case "calibration_complete":
      next.calibrationNote = "complete";
      break;
    case "calibration_failed":
      next.calibrationNote = `failed: ${record.reason}`;
      next.corners = [null, null, null, null];
      next.cornersCaptured = 0;
      break;
    case "down":
      next.strokes = pushPoint(model.strokes, record.u, record.v, true);
      break;
    case "move":
      next.strokes = pushPoint(model.strokes, record.u, record.v, false);
      break;
    case "up": {
      const strokes = pushPoint(model.strokes, record.u, record.v, false);
      const last = strokes[strokes.length - 1];
      if (last) last.closed = true;
      next.strokes = strokes;
      break;
    }
    case "side":
      next.sideFlash = record.action;
      break;
  }
  return next;
}

export function applySnapshot(model: ConsoleModel, snap: Snapshot): ConsoleModel {
  let next: ConsoleModel = {
    ...model,
    phase: snap.phase,
    batteryPercent: snap.battery_percent,
    cornersCaptured: snap.calibration.corners_captured,
    samplesCollected: snap.calibration.samples_collected,
    alignmentVisible: snap.alignment.visible.slice(),
    armedCorner: snap.alignment.armed_corner,
    zones: {
      left: snap.zone_config.left.slice(),
      right: snap.zone_config.right.slice(),
      band_width: snap.zone_config.band_width,
      enabled: snap.zone_config.enabled,
    },
  };
  const lastBlobs = snap.recent_blobs[snap.recent_blobs.length - 1];
  if (lastBlobs) next.blobs = lastBlobs.blobs;
  for (const record of snap.recent_events) {
    if (record.kind === "down" || record.kind === "move" || record.kind === "up") {
      next = applyRecord(next, record);
    }
  }
  return next;
}

/** Banner text, or null when the battery is fine or unknown. */
export function batteryBanner(model: ConsoleModel): string | null {
  if (model.batteryPercent === null) return null;
  if (model.batteryPercent >= LOW_BATTERY_PERCENT) return null;
  return `Battery low: ${model.batteryPercent.toFixed(1)}% - charge the device soon`;
}

export interface WizardStep {
  label: string;
  state: "done" | "active" | "pending";
}

const WIZARD_ORDER: Phase[] = ["disconnected", "aligning", "calibrating", "running"];
const WIZARD_LABELS = [
  "Connect",
  "Align the camera",
  "Calibrate the corners",
  "Running",
];

/** The four-step setup checklist shown at the top of the console. */
export function wizardSteps(model: ConsoleModel): WizardStep[] {
  // connected and ir_enabled flash by in one command; fold them into step 0
  let position = WIZARD_ORDER.indexOf(model.phase);
  if (model.phase === "connected" || model.phase === "ir_enabled") position = 1;
  if (model.phase === "stopped") position = 0;
  return WIZARD_LABELS.map((label, i) => ({
    label,
    state: i < position ? "done" : i === position ? "active" : "pending",
  }));
}
