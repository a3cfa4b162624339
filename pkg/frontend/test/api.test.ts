import { describe, expect, it } from "vitest";

import { ndjsonRecords } from "../src/api.js";
import type { StreamRecord } from "../src/types.js";

function streamOf(chunks: string[]): ReadableStream<Uint8Array> {
  const encoder = new TextEncoder();
  return new ReadableStream({
    start(controller) {
      for (const chunk of chunks) controller.enqueue(encoder.encode(chunk));
      controller.close();
    },
  });
}

async function collect(chunks: string[]): Promise<StreamRecord[]> {
  const records: StreamRecord[] = [];
  for await (const record of ndjsonRecords(streamOf(chunks))) {
    records.push(record);
  }
  return records;
}

describe("ndjsonRecords", () => {
  it("yields one record per line", async () => {
    const records = await collect([
      '{"t":0,"kind":"phase","phase":"disconnected"}\n{"t":1,"kind":"battery","percent":80}\n',
    ]);
    expect(records).toEqual([
      { t: 0, kind: "phase", phase: "disconnected" },
      { t: 1, kind: "battery", percent: 80 },
    ]);
  });

  it("reassembles a record split across chunks", async () => {
    const records = await collect([
      '{"t":0,"ki',
      'nd":"batt',
      'ery","percent":49.5}\n',
    ]);
    expect(records).toEqual([{ t: 0, kind: "battery", percent: 49.5 }]);
  });

  it("flushes a tail line with no trailing newline", async () => {
    const records = await collect(['{"t":0,"kind":"calibration_complete"}']);
    expect(records).toEqual([{ t: 0, kind: "calibration_complete" }]);
  });

  it("ignores blank lines", async () => {
    const records = await collect(['\n\n{"t":2,"kind":"phase","phase":"aligning"}\n\n']);
    expect(records).toEqual([{ t: 2, kind: "phase", phase: "aligning" }]);
  });

  it("handles an empty stream", async () => {
    expect(await collect([])).toEqual([]);
  });
});
