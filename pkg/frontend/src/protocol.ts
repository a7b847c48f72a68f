/**
 * Wire protocol: newline-delimited JSON, one object per line.
 *
 * Mirrors the server's schema exactly; decode failures throw
 * ProtocolError and are never silently dropped. A laser "no hit" is
 * -1.0 on the wire.
 */

export const PROTOCOL_VERSION = 1;
export const DEFAULT_PORT = 7171;
export const NO_HIT_WIRE = -1.0;

export class ProtocolError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ProtocolError";
  }
}

export type Topic = "scan" | "state";
export type AgentKind = "pedestrian" | "robot";

/** [id, kind, x, y, theta, vx, vy] */
export type AgentRow = [number, AgentKind, number, number, number, number, number];

export interface HelloMsg { type: "hello"; version: number }
export interface SubscribeMsg { type: "subscribe"; robot_id: number; topic: Topic }
export interface CmdVelMsg { type: "cmd_vel"; robot_id: number; linear: number; angular: number }
export interface StepMsg { type: "step"; n: number }
export interface ByeMsg { type: "bye" }
export interface WelcomeMsg { type: "welcome"; version: number; scenario: string; dt: number; robots: number[] }
export interface ScanMsg {
  type: "scan"; robot_id: number; tick: number;
  angle_min: number; angle_increment: number; range_max: number; ranges: number[];
}
export interface StateMsg { type: "state"; tick: number; t: number; agents: AgentRow[] }
export interface SteppedMsg { type: "stepped"; tick: number }
export interface ErrorMsg { type: "error"; code: string; message: string }

export type ClientMessage = HelloMsg | SubscribeMsg | CmdVelMsg | StepMsg | ByeMsg;
export type ServerMessage = WelcomeMsg | ScanMsg | StateMsg | SteppedMsg | ErrorMsg;
export type WireMessage = ClientMessage | ServerMessage;

function isInt(v: unknown): v is number {
  return typeof v === "number" && Number.isInteger(v);
}

function isNum(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function fail(name: string, what: string): never {
  throw new ProtocolError(`field '${name}' must be ${what}`);
}

function checkKeys(obj: Record<string, unknown>, allowed: string[]): void {
  for (const key of Object.keys(obj)) {
    if (key !== "type" && !allowed.includes(key)) {
      throw new ProtocolError(`unknown field '${key}' for '${obj.type}'`);
    }
  }
}

function agentRow(v: unknown): AgentRow {
  if (!Array.isArray(v) || v.length !== 7 || !isInt(v[0])
      || (v[1] !== "pedestrian" && v[1] !== "robot")
      || !v.slice(2).every(isNum)) {
    fail("agents", "rows of [id, kind, x, y, theta, vx, vy]");
  }
  return v as AgentRow;
}

/** Validate an already-parsed object and return it typed. */
export function validateMessage(doc: unknown): WireMessage {
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new ProtocolError("message must be a JSON object");
  }
  const obj = doc as Record<string, unknown>;
  switch (obj.type) {
    case "hello":
      checkKeys(obj, ["version"]);
      if (!isInt(obj.version)) fail("version", "an integer");
      return { type: "hello", version: obj.version };
    case "subscribe":
      checkKeys(obj, ["robot_id", "topic"]);
      if (!isInt(obj.robot_id)) fail("robot_id", "an integer");
      if (obj.topic !== "scan" && obj.topic !== "state") fail("topic", "'scan' or 'state'");
      return { type: "subscribe", robot_id: obj.robot_id, topic: obj.topic };
    case "cmd_vel":
      checkKeys(obj, ["robot_id", "linear", "angular"]);
      if (!isInt(obj.robot_id)) fail("robot_id", "an integer");
      if (!isNum(obj.linear)) fail("linear", "a finite number");
      if (!isNum(obj.angular)) fail("angular", "a finite number");
      return { type: "cmd_vel", robot_id: obj.robot_id, linear: obj.linear, angular: obj.angular };
    case "step": {
      checkKeys(obj, ["n"]);
      const n = obj.n === undefined ? 1 : obj.n;
      if (!isInt(n)) fail("n", "an integer");
      return { type: "step", n };
    }
    case "bye":
      checkKeys(obj, []);
      return { type: "bye" };
    case "welcome":
      checkKeys(obj, ["version", "scenario", "dt", "robots"]);
      if (!isInt(obj.version)) fail("version", "an integer");
      if (typeof obj.scenario !== "string") fail("scenario", "a string");
      if (!isNum(obj.dt)) fail("dt", "a finite number");
      if (!Array.isArray(obj.robots) || !obj.robots.every(isInt)) fail("robots", "a list of integers");
      return { type: "welcome", version: obj.version, scenario: obj.scenario,
               dt: obj.dt, robots: obj.robots as number[] };
    case "scan":
      checkKeys(obj, ["robot_id", "tick", "angle_min", "angle_increment", "range_max", "ranges"]);
      if (!isInt(obj.robot_id)) fail("robot_id", "an integer");
      if (!isInt(obj.tick)) fail("tick", "an integer");
      if (!isNum(obj.angle_min)) fail("angle_min", "a finite number");
      if (!isNum(obj.angle_increment)) fail("angle_increment", "a finite number");
      if (!isNum(obj.range_max)) fail("range_max", "a finite number");
      if (!Array.isArray(obj.ranges) || !obj.ranges.every(isNum)) fail("ranges", "a list of numbers");
      return { type: "scan", robot_id: obj.robot_id, tick: obj.tick,
               angle_min: obj.angle_min, angle_increment: obj.angle_increment,
               range_max: obj.range_max, ranges: obj.ranges as number[] };
    case "state":
      checkKeys(obj, ["tick", "t", "agents"]);
      if (!isInt(obj.tick)) fail("tick", "an integer");
      if (!isNum(obj.t)) fail("t", "a finite number");
      if (!Array.isArray(obj.agents)) fail("agents", "a list");
      return { type: "state", tick: obj.tick, t: obj.t,
               agents: obj.agents.map(agentRow) };
    case "stepped":
      checkKeys(obj, ["tick"]);
      if (!isInt(obj.tick)) fail("tick", "an integer");
      return { type: "stepped", tick: obj.tick };
    case "error":
      checkKeys(obj, ["code", "message"]);
      if (typeof obj.code !== "string") fail("code", "a string");
      if (typeof obj.message !== "string") fail("message", "a string");
      return { type: "error", code: obj.code, message: obj.message };
    default:
      throw new ProtocolError(`unknown message type '${String(obj.type)}'`);
  }
}

/** Parse and validate one wire line. */
export function decodeLine(line: string): WireMessage {
  let doc: unknown;
  try {
    doc = JSON.parse(line);
  } catch (exc) {
    throw new ProtocolError(`invalid JSON: ${(exc as Error).message}`);
  }
  return validateMessage(doc);
}

const FIELD_ORDER: Record<WireMessage["type"], string[]> = {
  hello: ["version"],
  subscribe: ["robot_id", "topic"],
  cmd_vel: ["robot_id", "linear", "angular"],
  step: ["n"],
  bye: [],
  welcome: ["version", "scenario", "dt", "robots"],
  scan: ["robot_id", "tick", "angle_min", "angle_increment", "range_max", "ranges"],
  state: ["tick", "t", "agents"],
  stepped: ["tick"],
  error: ["code", "message"],
};

/** Canonical wire form: validated, fields in schema order, LF-terminated. */
export function encodeMessage(msg: WireMessage): string {
  const valid = validateMessage(msg) as unknown as Record<string, unknown>;
  const ordered: Record<string, unknown> = { type: valid.type };
  for (const key of FIELD_ORDER[msg.type]) {
    ordered[key] = valid[key];
  }
  return JSON.stringify(ordered) + "\n";
}
