/**
 * Synchronous-style client session for the simulator's TCP service.
 *
 * One session per connection; not safe to share across concurrent
 * callers. All receive paths surface protocol violations as
 * ProtocolError and timeouts as TimeoutError.
 */

import * as net from "node:net";

import {
  ClientMessage, DEFAULT_PORT, PROTOCOL_VERSION, ProtocolError, ServerMessage,
  SteppedMsg, Topic, WelcomeMsg, decodeLine, encodeMessage,
} from "./protocol.js";

export class TimeoutError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "TimeoutError";
  }
}

export interface ClientConfig {
  host?: string;
  port?: number;
  timeoutMs?: number;
}

interface Waiter {
  resolve: (msg: ServerMessage) => void;
  reject: (err: Error) => void;
  timer: NodeJS.Timeout;
}

export class CrowdClient {
  private queue: ServerMessage[] = [];
  private waiters: Waiter[] = [];
  private buffer = "";
  private fatal: Error | null = null;
  readonly timeoutMs: number;

  private constructor(private socket: net.Socket, timeoutMs: number) {
    this.timeoutMs = timeoutMs;
    socket.on("data", (chunk) => this.onData(chunk));
    socket.on("error", (err) => this.abort(err));
    socket.on("close", () => this.abort(new Error("connection closed")));
  }

  static connect(config: ClientConfig = {}): Promise<CrowdClient> {
    const host = config.host ?? "127.0.0.1";
    const port = config.port ?? DEFAULT_PORT;
    const timeoutMs = config.timeoutMs ?? 10_000;
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port });
      const timer = setTimeout(() => {
        socket.destroy();
        reject(new TimeoutError(`connect to ${host}:${port} timed out`));
      }, timeoutMs);
      socket.once("connect", () => {
        clearTimeout(timer);
        socket.setNoDelay(true);
        resolve(new CrowdClient(socket, timeoutMs));
      });
      socket.once("error", (err) => {
        clearTimeout(timer);
        reject(err);
      });
    });
  }

  private onData(chunk: Buffer): void {
    this.buffer += chunk.toString("utf-8");
    let idx: number;
    while ((idx = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, idx);
      this.buffer = this.buffer.slice(idx + 1);
      if (!line.trim()) continue;
      let msg: ServerMessage;
      try {
        msg = decodeLine(line) as ServerMessage;
      } catch (err) {
        this.abort(err as Error);
        return;
      }
      const waiter = this.waiters.shift();
      if (waiter) {
        clearTimeout(waiter.timer);
        waiter.resolve(msg);
      } else {
        this.queue.push(msg);
      }
    }
  }

  private abort(err: Error): void {
    if (this.fatal) return;
    this.fatal = err;
    for (const w of this.waiters.splice(0)) {
      clearTimeout(w.timer);
      w.reject(err);
    }
  }

  /** Next server message, FIFO. */
  next(timeoutMs?: number): Promise<ServerMessage> {
    const queued = this.queue.shift();
    if (queued) return Promise.resolve(queued);
    if (this.fatal) return Promise.reject(this.fatal);
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => {
        const k = this.waiters.findIndex((w) => w.timer === timer);
        if (k >= 0) this.waiters.splice(k, 1);
        reject(new TimeoutError("no message within timeout"));
      }, timeoutMs ?? this.timeoutMs);
      this.waiters.push({ resolve, reject, timer });
    });
  }

  send(msg: ClientMessage): void {
    if (this.fatal) throw this.fatal;
    this.socket.write(encodeMessage(msg));
  }

  /** Handshake; rejects with ProtocolError on a version mismatch. */
  async hello(): Promise<WelcomeMsg> {
    this.send({ type: "hello", version: PROTOCOL_VERSION });
    const msg = await this.next();
    if (msg.type === "error") {
      throw new ProtocolError(`${msg.code}: ${msg.message}`);
    }
    if (msg.type !== "welcome") {
      throw new ProtocolError(`expected welcome, got '${msg.type}'`);
    }
    return msg;
  }

  subscribe(robotId: number, topic: Topic): void {
    this.send({ type: "subscribe", robot_id: robotId, topic });
  }

  cmdVel(robotId: number, linear: number, angular: number): void {
    this.send({ type: "cmd_vel", robot_id: robotId, linear, angular });
  }

  /**
   * Lockstep: advance n ticks; resolves with the acknowledgement and every
   * message published on the way (scans/states in publication order).
   */
  async step(n = 1): Promise<{ stepped: SteppedMsg; published: ServerMessage[] }> {
    this.send({ type: "step", n });
    const published: ServerMessage[] = [];
    for (;;) {
      const msg = await this.next();
      if (msg.type === "stepped") {
        return { stepped: msg, published };
      }
      if (msg.type === "error") {
        throw new ProtocolError(`${msg.code}: ${msg.message}`);
      }
      published.push(msg);
    }
  }

  close(): void {
    try {
      this.socket.write(encodeMessage({ type: "bye" }));
    } catch {
      // session may already be gone
    }
    this.socket.destroy();
  }
}
