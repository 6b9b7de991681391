/**
 * TCP client for the telemetry/command stream.
 *
 * Parses line-delimited JSON from the server, keeps the latest telemetry
 * plus a bounded history for the panels, tracks in-flight commands by
 * request id (each is resolved exactly once, by ack or error; a repeated
 * ack for the same id is ignored), and reconnects automatically.  A run
 * is considered stale when no record has arrived for `staleAfterMs`.
 */

import * as net from "node:net";

import {
  AckMessage,
  Command,
  ErrorMessage,
  HelloMessage,
  RunEvent,
  ServerMessage,
  TelemetryMessage,
  isServerMessage,
} from "./types.js";

export interface Acknowledgement {
  id: number;
  appliedTick: number;
}

export interface ClientOptions {
  host: string;
  port: number;
  staleAfterMs?: number;
  reconnectDelayMs?: number;
  commandTimeoutMs?: number;
  historyLength?: number;
  autoReconnect?: boolean;
}

interface Pending {
  resolve: (ack: Acknowledgement) => void;
  reject: (err: Error) => void;
  timer: NodeJS.Timeout;
  settled: boolean;
}

export class ConsoleClient {
  readonly history: TelemetryMessage[] = [];
  readonly eventLog: RunEvent[] = [];
  hello: HelloMessage | null = null;
  latest: TelemetryMessage | null = null;
  recordCount = 0;
  connected = false;

  onTelemetry: ((msg: TelemetryMessage) => void) | null = null;
  onHello: ((msg: HelloMessage) => void) | null = null;
  onConnectionChange: ((connected: boolean) => void) | null = null;

  private readonly opts: Required<ClientOptions>;
  private socket: net.Socket | null = null;
  private buffer = "";
  private nextId = 1;
  private pending = new Map<number, Pending>();
  private lastRecordAt = 0;
  private closed = false;

  constructor(options: ClientOptions) {
    this.opts = {
      staleAfterMs: 2000,
      reconnectDelayMs: 500,
      commandTimeoutMs: 5000,
      historyLength: 600,
      autoReconnect: true,
      ...options,
    };
  }

  connect(): Promise<void> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection(this.opts.port, this.opts.host);
      socket.setNoDelay(true);
      socket.once("connect", () => {
        this.socket = socket;
        this.connected = true;
        this.onConnectionChange?.(true);
        resolve();
      });
      socket.once("error", (err) => {
        if (!this.connected) reject(err);
      });
      socket.on("data", (chunk) => this.feed(chunk.toString("utf8")));
      socket.on("close", () => {
        const wasConnected = this.connected;
        this.connected = false;
        this.socket = null;
        if (wasConnected) this.onConnectionChange?.(false);
        for (const [id, p] of this.pending) {
          this.settle(id, p, new Error("connection lost"));
        }
        if (!this.closed && this.opts.autoReconnect) {
          setTimeout(() => {
            if (!this.closed) this.connect().catch(() => undefined);
          }, this.opts.reconnectDelayMs);
        }
      });
    });
  }

  close(): void {
    this.closed = true;
    this.socket?.destroy();
    this.socket = null;
  }

  /** Milliseconds since the last telemetry record (Infinity before any). */
  recordAgeMs(now = Date.now()): number {
    return this.lastRecordAt === 0 ? Infinity : now - this.lastRecordAt;
  }

  isStale(now = Date.now()): boolean {
    return !this.connected || this.recordAgeMs(now) > this.opts.staleAfterMs;
  }

  /** Send one command; resolves with its ack, rejects on error/timeout.
   *  Commands are never retried automatically. */
  send(command: Command): Promise<Acknowledgement> {
    const id = this.nextId++;
    const line = JSON.stringify({ type: "command", id, ...command }) + "\n";
    return new Promise((resolve, reject) => {
      if (!this.socket || !this.connected) {
        reject(new Error("not connected"));
        return;
      }
      const timer = setTimeout(() => {
        const p = this.pending.get(id);
        if (p) this.settle(id, p, new Error(`command ${id} timed out`));
      }, this.opts.commandTimeoutMs);
      this.pending.set(id, { resolve, reject, timer, settled: false });
      this.socket.write(line);
    });
  }

  private feed(text: string): void {
    this.buffer += text;
    let idx: number;
    while ((idx = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, idx).trim();
      this.buffer = this.buffer.slice(idx + 1);
      if (!line) continue;
      let parsed: unknown;
      try {
        parsed = JSON.parse(line);
      } catch {
        continue; // tolerate torn lines around reconnects
      }
      if (isServerMessage(parsed)) this.dispatch(parsed);
    }
  }

  private dispatch(msg: ServerMessage): void {
    switch (msg.type) {
      case "hello":
        this.hello = msg;
        this.onHello?.(msg);
        break;
      case "telemetry":
        this.latest = msg;
        this.recordCount += 1;
        this.lastRecordAt = Date.now();
        this.history.push(msg);
        if (this.history.length > this.opts.historyLength) {
          this.history.splice(0, this.history.length - this.opts.historyLength);
        }
        if (msg.events) this.eventLog.push(...msg.events);
        if (this.eventLog.length > 200) {
          this.eventLog.splice(0, this.eventLog.length - 200);
        }
        this.onTelemetry?.(msg);
        break;
      case "ack":
        this.handleAck(msg);
        break;
      case "error":
        this.handleError(msg);
        break;
    }
  }

  private handleAck(msg: AckMessage): void {
    const p = this.pending.get(msg.id);
    if (!p || p.settled) return; // acks are idempotent per request id
    p.settled = true;
    clearTimeout(p.timer);
    this.pending.delete(msg.id);
    p.resolve({ id: msg.id, appliedTick: msg.applied_tick });
  }

  private handleError(msg: ErrorMessage): void {
    if (msg.id === null) return;
    const p = this.pending.get(msg.id);
    if (!p || p.settled) return;
    this.settle(msg.id, p, new Error(msg.reason));
  }

  private settle(id: number, p: Pending, err: Error): void {
    if (p.settled) return;
    p.settled = true;
    clearTimeout(p.timer);
    this.pending.delete(id);
    p.reject(err);
  }
}
