import { ApiError, IrboardClient } from "./api.js";
import {
  applyRecord,
  applySnapshot,
  batteryBanner,
  initialModel,
  wizardSteps,
} from "./model.js";
import type { ConsoleModel } from "./model.js";
import { CORNER_NAMES, ZONE_ACTIONS } from "./types.js";
import type { ZoneActionName, ZoneConfigBody } from "./types.js";

const client = new IrboardClient("");
let model: ConsoleModel = initialModel();
let zonesDirty = false;
let sideFlashTimer: number | undefined;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(text: string) {
  el("status").textContent = text;
}

async function command(action: () => Promise<unknown>) {
  try {
    await action();
    setStatus("");
  } catch (err) {
    setStatus(err instanceof ApiError ? err.message : String(err));
  }
  await refreshSnapshot();
}

async function refreshSnapshot() {
  try {
    model = applySnapshot(model, await client.state());
  } catch {
    model = { ...model, connected: false };
  }
  render();
}

// ---------- rendering ----------

function render() {
  const pill = el("phase-pill");
  pill.textContent = model.phase;
  pill.dataset.phase = model.phase;

  el("link-state").textContent = model.connected ? "live" : "reconnecting";
  el("link-state").className = model.connected ? "link on" : "link off";

  const banner = el("battery-banner");
  const warning = batteryBanner(model);
  banner.hidden = warning === null;
  banner.textContent = warning ?? "";
  el("battery-level").textContent =
    model.batteryPercent === null ? "battery: ?" : `battery: ${model.batteryPercent.toFixed(1)}%`;

  const wizard = el("wizard");
  wizard.replaceChildren(
    ...wizardSteps(model).map((step, i) => {
      const li = document.createElement("li");
      li.className = step.state;
      li.textContent = `${i + 1}. ${step.label}`;
      return li;
    }),
  );

  const align = el("alignment");
  align.replaceChildren(
    ...CORNER_NAMES.map((name, corner) => {
      const row = document.createElement("div");
      row.className = "align-row";
      const button = document.createElement("button");
      button.textContent = `arm ${name}`;
      button.disabled = model.phase !== "aligning";
      button.onclick = () => command(() => client.armCorner(corner));
      const badge = document.createElement("span");
      badge.className = model.alignmentVisible[corner] ? "badge ok" : "badge";
      badge.textContent = model.alignmentVisible[corner]
        ? "seen"
        : model.armedCorner === corner
          ? "watching"
          : "-";
      row.append(button, badge);
      return row;
    }),
  );

  el("cal-progress").textContent =
    model.phase === "calibrating"
      ? `corners captured: ${model.cornersCaptured}/4, steady samples: ${model.samplesCollected}/10`
      : (model.calibrationNote ?? "");

  (el("btn-start") as HTMLButtonElement).disabled =
    model.phase !== "disconnected" && model.phase !== "stopped";
  (el("btn-stop") as HTMLButtonElement).disabled =
    model.phase === "disconnected" || model.phase === "stopped";
  (el("btn-calibrate") as HTMLButtonElement).disabled =
    model.phase !== "aligning" && model.phase !== "running";
  (el("btn-abort") as HTMLButtonElement).disabled = model.phase !== "calibrating";

  if (!zonesDirty) paintZoneEditor(model.zones);

  const flash = el("side-flash");
  flash.hidden = model.sideFlash === null;
  flash.textContent = model.sideFlash ? `side action: ${model.sideFlash}` : "";

  el("log").textContent = model.log.slice(-40).join("\n");
  el("log").scrollTop = el("log").scrollHeight;

  drawCamera();
  drawPad();
}

function drawCamera() {
  const canvas = el<HTMLCanvasElement>("camera");
  const ctx = canvas.getContext("2d")!;
  const sx = canvas.width / 1024;
  const sy = canvas.height / 768;
  ctx.fillStyle = "#10141c";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#2a3142";
  ctx.strokeRect(0.5, 0.5, canvas.width - 1, canvas.height - 1);
  for (const corner of model.corners) {
    if (!corner) continue;
    const [x, y] = corner;
    ctx.strokeStyle = "#5b8df8";
    ctx.beginPath();
    ctx.moveTo(x * sx - 6, y * sy);
    ctx.lineTo(x * sx + 6, y * sy);
    ctx.moveTo(x * sx, y * sy - 6);
    ctx.lineTo(x * sx, y * sy + 6);
    ctx.stroke();
  }
  for (const [x, y, size] of model.blobs) {
    ctx.fillStyle = "#34d399";
    ctx.beginPath();
    ctx.arc(x * sx, y * sy, 2 + size / 3, 0, Math.PI * 2);
    ctx.fill();
  }
}

// pen pad geometry: the unit screen plus a little margin for the bands
const PAD_S_MIN = -0.08;
const PAD_S_MAX = 1.08;
const PAD_T_MIN = -0.05;
const PAD_T_MAX = 1.05;

function padToSurface(canvas: HTMLCanvasElement, px: number, py: number) {
  const rect = canvas.getBoundingClientRect();
  const s = PAD_S_MIN + ((px - rect.left) / rect.width) * (PAD_S_MAX - PAD_S_MIN);
  const t = PAD_T_MIN + ((py - rect.top) / rect.height) * (PAD_T_MAX - PAD_T_MIN);
  return { s: Math.round(s * 1000) / 1000, t: Math.round(t * 1000) / 1000 };
}

function surfaceToPad(canvas: HTMLCanvasElement, s: number, t: number) {
  return {
    x: ((s - PAD_S_MIN) / (PAD_S_MAX - PAD_S_MIN)) * canvas.width,
    y: ((t - PAD_T_MIN) / (PAD_T_MAX - PAD_T_MIN)) * canvas.height,
  };
}

function drawPad() {
  const canvas = el<HTMLCanvasElement>("pad");
  const ctx = canvas.getContext("2d")!;
  ctx.fillStyle = "#10141c";
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  const tl = surfaceToPad(canvas, 0, 0);
  const br = surfaceToPad(canvas, 1, 1);
  const bw = model.zones.band_width;
  if (model.zones.enabled) {
    ctx.fillStyle = "#1d2433";
    const leftEdge = surfaceToPad(canvas, -bw, 0).x;
    const rightEdge = surfaceToPad(canvas, 1 + bw, 0).x;
    ctx.fillRect(leftEdge, tl.y, tl.x - leftEdge, br.y - tl.y);
    ctx.fillRect(br.x, tl.y, rightEdge - br.x, br.y - tl.y);
    ctx.strokeStyle = "#2a3142";
    for (const third of [1 / 3, 2 / 3]) {
      const y = surfaceToPad(canvas, 0, third).y;
      ctx.beginPath();
      ctx.moveTo(leftEdge, y);
      ctx.lineTo(tl.x, y);
      ctx.moveTo(br.x, y);
      ctx.lineTo(rightEdge, y);
      ctx.stroke();
    }
  }
  ctx.strokeStyle = "#3d4a63";
  ctx.strokeRect(tl.x, tl.y, br.x - tl.x, br.y - tl.y);

  ctx.strokeStyle = "#f0f0f5";
  ctx.lineWidth = 1.5;
  for (const stroke of model.strokes) {
    ctx.beginPath();
    stroke.points.forEach((p, i) => {
      const { x, y } = surfaceToPad(canvas, p.u, p.v);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
  ctx.lineWidth = 1;
}

// ---------- zone editor ----------

function zoneSelect(id: string): HTMLSelectElement {
  return el<HTMLSelectElement>(id);
}

function paintZoneEditor(zones: ZoneConfigBody) {
  for (const side of ["left", "right"] as const) {
    zones[side].forEach((action, i) => {
      zoneSelect(`zone-${side}-${i}`).value = action;
    });
  }
  el<HTMLInputElement>("band-width").value = String(zones.band_width);
  el<HTMLInputElement>("zones-enabled").checked = zones.enabled;
}

function readZoneEditor(): ZoneConfigBody {
  const read = (side: "left" | "right") =>
    [0, 1, 2].map((i) => zoneSelect(`zone-${side}-${i}`).value as ZoneActionName);
  return {
    left: read("left"),
    right: read("right"),
    band_width: Number(el<HTMLInputElement>("band-width").value),
    enabled: el<HTMLInputElement>("zones-enabled").checked,
  };
}

function buildZoneEditor() {
  for (const side of ["left", "right"] as const) {
    const host = el(`zones-${side}`);
    ["top", "middle", "bottom"].forEach((third, i) => {
      const label = document.createElement("label");
      label.textContent = `${third} `;
      const select = document.createElement("select");
      select.id = `zone-${side}-${i}`;
      for (const action of ZONE_ACTIONS) {
        const option = document.createElement("option");
        option.value = action;
        option.textContent = action.replace("_", " ");
        select.append(option);
      }
      select.onchange = () => {
        zonesDirty = true;
      };
      label.append(select);
      host.append(label);
    });
  }
}

// ---------- virtual pen ----------

let penBusy = false;
let penQueued: { s?: number; t?: number; pressed?: boolean } | null = null;

function sendPen(fields: { s?: number; t?: number; pressed?: boolean }) {
  if (penBusy) {
    penQueued = { ...penQueued, ...fields };
    return;
  }
  penBusy = true;
  client
    .setPen(fields)
    .catch(() => undefined)
    .finally(() => {
      penBusy = false;
      if (penQueued) {
        const queued = penQueued;
        penQueued = null;
        sendPen(queued);
      }
    });
}

function wirePenPad() {
  const canvas = el<HTMLCanvasElement>("pad");
  let down = false;
  canvas.addEventListener("pointerdown", (event) => {
    down = true;
    canvas.setPointerCapture(event.pointerId);
    sendPen({ ...padToSurface(canvas, event.clientX, event.clientY), pressed: true });
  });
  canvas.addEventListener("pointermove", (event) => {
    if (down) sendPen(padToSurface(canvas, event.clientX, event.clientY));
  });
  const release = () => {
    if (down) {
      down = false;
      sendPen({ pressed: false });
    }
  };
  canvas.addEventListener("pointerup", release);
  canvas.addEventListener("pointercancel", release);
}

// ---------- push channel ----------

async function pumpEvents() {
  for (;;) {
    try {
      model = { ...model, connected: true };
      render();
      await client.events((record) => {
        model = applyRecord(model, record);
        if (record.kind === "side") {
          window.clearTimeout(sideFlashTimer);
          sideFlashTimer = window.setTimeout(() => {
            model = { ...model, sideFlash: null };
            render();
          }, 1500);
        }
        render();
      });
    } catch {
      // fall through to the retry delay
    }
    model = { ...model, connected: false };
    render();
    await new Promise((resolve) => setTimeout(resolve, 1000));
  }
}

function wireButtons() {
  el("btn-start").onclick = () => command(() => client.startSession());
  el("btn-stop").onclick = () => command(() => client.stopSession());
  el("btn-calibrate").onclick = () => command(() => client.startCalibration());
  el("btn-abort").onclick = () => command(() => client.abortCalibration());
  el("btn-tick").onclick = () => command(() => client.tick(10));
  el("btn-apply-zones").onclick = () =>
    command(async () => {
      await client.setZones(readZoneEditor());
      zonesDirty = false;
    });
}

window.addEventListener("DOMContentLoaded", () => {
  buildZoneEditor();
  wireButtons();
  wirePenPad();
  render();
  void refreshSnapshot();
  void pumpEvents();
});
