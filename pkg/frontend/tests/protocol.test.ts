import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { ProtocolError, decodeLine, encodeMessage } from "../src/protocol.js";

// golden fixtures generated by the server implementation and shared
// between both test suites
const FIXTURES = join(dirname(fileURLToPath(import.meta.url)),
                      "..", "..", "tests", "fixtures", "wire_golden.jsonl");

const goldenLines = readFileSync(FIXTURES, "utf-8").split("\n").filter(Boolean);

describe("golden wire fixtures", () => {
  it("has one line per message type plus the integer-float case", () => {
    expect(goldenLines.length).toBe(12);
  });

  it("decodes every golden line", () => {
    for (const line of goldenLines) {
      const msg = decodeLine(line);
      expect(typeof msg.type).toBe("string");
    }
  });

  it("round-trips decode -> encode -> decode losslessly", () => {
    for (const line of goldenLines) {
      const msg = decodeLine(line);
      expect(decodeLine(encodeMessage(msg))).toEqual(msg);
    }
  });

  it("re-encodes byte-identically when floats are non-integral", () => {
    // JSON emitters differ on integer-valued floats (1.0 vs 1), so the
    // byte-level contract covers every golden line except the scan
    // (range_max 25.0 and the -1.0 no-hit sentinel) and the deliberate
    // integer-valued cmd_vel
    const byteExact = goldenLines.filter(
      (line) => !line.includes('"linear":1.0') && !line.includes('"type":"scan"'));
    expect(byteExact.length).toBe(goldenLines.length - 2);
    for (const line of byteExact) {
      expect(encodeMessage(decodeLine(line))).toBe(line + "\n");
    }
  });
});

describe("decode errors", () => {
  it("rejects invalid json", () => {
    expect(() => decodeLine("{nope")).toThrow(ProtocolError);
  });

  it("rejects unknown message types", () => {
    expect(() => decodeLine('{"type":"teleport","x":1}')).toThrow(ProtocolError);
  });

  it("rejects missing fields", () => {
    expect(() => decodeLine('{"type":"cmd_vel","robot_id":1,"linear":0.5}'))
      .toThrow(ProtocolError);
  });

  it("rejects unknown fields", () => {
    expect(() => decodeLine('{"type":"stepped","tick":1,"bonus":2}'))
      .toThrow(ProtocolError);
  });

  it("rejects non-finite numbers", () => {
    expect(() => decodeLine('{"type":"cmd_vel","robot_id":1,"linear":null,"angular":0}'))
      .toThrow(ProtocolError);
  });
});

describe("client message encoding", () => {
  it("emits compact, LF-terminated lines in canonical field order", () => {
    expect(encodeMessage({ type: "hello", version: 1 }))
      .toBe('{"type":"hello","version":1}\n');
    expect(encodeMessage({ type: "subscribe", robot_id: 100, topic: "scan" }))
      .toBe('{"type":"subscribe","robot_id":100,"topic":"scan"}\n');
    expect(encodeMessage({ type: "cmd_vel", robot_id: 100, linear: 0.75, angular: -0.125 }))
      .toBe('{"type":"cmd_vel","robot_id":100,"linear":0.75,"angular":-0.125}\n');
    expect(encodeMessage({ type: "step", n: 4 })).toBe('{"type":"step","n":4}\n');
    expect(encodeMessage({ type: "bye" })).toBe('{"type":"bye"}\n');
  });

  it("matches the golden client lines byte-for-byte", () => {
    const clientTypes = new Set(["hello", "subscribe", "cmd_vel", "step", "bye"]);
    for (const line of goldenLines.slice(0, 6)) {
      const msg = decodeLine(line);
      expect(clientTypes.has(msg.type)).toBe(true);
      expect(encodeMessage(msg)).toBe(line + "\n");
    }
  });
});
