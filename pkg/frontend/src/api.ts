// Typed client for the irboard control API.

import type { Snapshot, StreamRecord, ZoneConfigBody } from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function requestJson(
  baseUrl: string,
  method: string,
  path: string,
  body?: unknown,
): Promise<Record<string, unknown>> {
  const init: RequestInit = { method };
  if (body !== undefined) {
    init.headers = { "Content-Type": "application/json" };
    init.body = JSON.stringify(body);
  }
  const response = await fetch(baseUrl + path, init);
  const data = (await response.json().catch(() => ({}))) as Record<string, unknown>;
  if (!response.ok) {
    const message = typeof data.error === "string" ? data.error : response.statusText;
    throw new ApiError(response.status, message);
  }
  return data;
}

/** Split a byte stream into parsed line-delimited JSON records. */
export async function* ndjsonRecords(
  stream: ReadableStream<Uint8Array>,
): AsyncGenerator<StreamRecord> {
  const reader = stream.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let newline;
      while ((newline = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, newline).trim();
        buffer = buffer.slice(newline + 1);
        if (line) yield JSON.parse(line) as StreamRecord;
      }
    }
    const tail = buffer.trim();
    if (tail) yield JSON.parse(tail) as StreamRecord;
  } finally {
    reader.releaseLock();
  }
}

export class IrboardClient {
  constructor(readonly baseUrl: string = "") {}

  async state(): Promise<Snapshot> {
    const data = await requestJson(this.baseUrl, "GET", "/api/state");
    return data as unknown as Snapshot;
  }

  startSession() {
    return requestJson(this.baseUrl, "POST", "/api/session/start");
  }

  stopSession() {
    return requestJson(this.baseUrl, "POST", "/api/session/stop");
  }

  armCorner(corner: number) {
    return requestJson(this.baseUrl, "POST", "/api/alignment/arm", { corner });
  }

  startCalibration() {
    return requestJson(this.baseUrl, "POST", "/api/calibration/start");
  }

  abortCalibration() {
    return requestJson(this.baseUrl, "POST", "/api/calibration/abort");
  }

  setZones(zones: ZoneConfigBody) {
    return requestJson(this.baseUrl, "PUT", "/api/zones", zones);
  }

  setPen(fields: { s?: number; t?: number; pressed?: boolean }) {
    return requestJson(this.baseUrl, "POST", "/api/sim/pen", fields);
  }

  tick(frames: number) {
    return requestJson(this.baseUrl, "POST", "/api/sim/tick", { frames });
  }

  /**
   * Consume the push channel, calling onRecord per record. Resolves when
   * the server closes the stream or the signal aborts.
   */
  async events(
    onRecord: (record: StreamRecord) => void,
    signal?: AbortSignal,
  ): Promise<void> {
    const response = await fetch(this.baseUrl + "/api/events", { signal });
    if (!response.ok || !response.body) {
      throw new ApiError(response.status, "event stream unavailable");
    }
    for await (const record of ndjsonRecords(response.body)) {
      onRecord(record);
    }
  }
}
