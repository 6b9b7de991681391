import * as net from "node:net";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { ConsoleClient } from "../src/client.js";
import { TelemetryMessage } from "../src/types.js";

function telemetry(t: number, extra: Partial<TelemetryMessage> = {}): string {
  const msg: TelemetryMessage = {
    type: "telemetry", t, tick: Math.round(t * 100),
    w_deg_s: [0.01, -0.02, 3.0], rate_err_deg_s: 0.05, nutation_deg: 2.5,
    p_tank: 2.0e6, m_prop: 600 - t, t_tank: 290, seq_state: "COAST",
    ctrl_mode: "adaptive", pulse_count: 12, flags: 0, ...extra,
  };
  return JSON.stringify(msg) + "\n";
}

describe("ConsoleClient", () => {
  let server: net.Server;
  let port: number;
  let sockets: net.Socket[] = [];
  let commandHandler: ((sock: net.Socket, msg: any) => void) | null = null;

  beforeEach(async () => {
    sockets = [];
    commandHandler = null;
    server = net.createServer((sock) => {
      sockets.push(sock);
      sock.write(JSON.stringify({
        type: "hello", scenario: "demo", states: ["SPIN_UP", "COAST", "SAFE"],
        thrusters: ["xp", "xm"], rate_hz: 10, decimation: 10, dt: 0.01,
      }) + "\n");
      let buf = "";
      sock.on("data", (chunk) => {
        buf += chunk.toString();
        let idx;
        while ((idx = buf.indexOf("\n")) >= 0) {
          const line = buf.slice(0, idx);
          buf = buf.slice(idx + 1);
          if (line.trim() && commandHandler) {
            commandHandler(sock, JSON.parse(line));
          }
        }
      });
    });
    await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
    port = (server.address() as net.AddressInfo).port;
  });

  afterEach(async () => {
    for (const s of sockets) s.destroy();
    await new Promise<void>((resolve) => server.close(() => resolve()));
  });

  async function connected(opts: Partial<ConstructorParameters<typeof ConsoleClient>[0]> = {}) {
    const client = new ConsoleClient({ host: "127.0.0.1", port,
                                       autoReconnect: false, ...opts });
    await client.connect();
    return client;
  }

  function waitFor(pred: () => boolean, timeoutMs = 2000): Promise<void> {
    return new Promise((resolve, reject) => {
      const t0 = Date.now();
      const timer = setInterval(() => {
        if (pred()) { clearInterval(timer); resolve(); }
        else if (Date.now() - t0 > timeoutMs) {
          clearInterval(timer); reject(new Error("waitFor timed out"));
        }
      }, 5);
    });
  }

  it("receives the hello and telemetry records", async () => {
    const client = await connected();
    await waitFor(() => client.hello !== null);
    expect(client.hello!.states).toContain("COAST");
    sockets[0].write(telemetry(1.0) + telemetry(1.1));
    await waitFor(() => client.recordCount === 2);
    expect(client.latest!.t).toBeCloseTo(1.1);
    expect(client.history.length).toBe(2);
    client.close();
  });

  it("collects events carried on telemetry records", async () => {
    const client = await connected();
    sockets[0].write(telemetry(2.0, {
      events: [{ t: 2.0, kind: "release", payload: "pl1" }],
    } as Partial<TelemetryMessage>));
    await waitFor(() => client.eventLog.length === 1);
    expect(client.eventLog[0].kind).toBe("release");
    client.close();
  });

  it("resolves a command exactly once even if the ack repeats", async () => {
    commandHandler = (sock, msg) => {
      // duplicate ack: the second must be ignored
      const ack = JSON.stringify({ type: "ack", id: msg.id, applied_tick: 7 }) + "\n";
      sock.write(ack + ack);
    };
    const client = await connected();
    const ack = await client.send({ command: "pause" });
    expect(ack.appliedTick).toBe(7);
    await new Promise((r) => setTimeout(r, 50)); // the duplicate arrives
    client.close();
  });

  it("rejects on server error reply", async () => {
    commandHandler = (sock, msg) => {
      sock.write(JSON.stringify({ type: "error", id: msg.id,
                                  reason: "unknown state 'NOWHERE'" }) + "\n");
    };
    const client = await connected();
    await expect(client.send({ command: "sequence_goto", state: "NOWHERE" }))
      .rejects.toThrow(/unknown state/);
    client.close();
  });

  it("times out a command that is never answered", async () => {
    commandHandler = () => undefined; // server stays silent
    const client = await connected({ commandTimeoutMs: 100 });
    await expect(client.send({ command: "pause" })).rejects.toThrow(/timed out/);
    client.close();
  });

  it("reports stale when records stop", async () => {
    const client = await connected({ staleAfterMs: 80 });
    sockets[0].write(telemetry(1.0));
    await waitFor(() => client.recordCount === 1);
    expect(client.isStale()).toBe(false);
    await new Promise((r) => setTimeout(r, 150));
    expect(client.isStale()).toBe(true);
    client.close();
  });

  it("reconnects after the server drops the connection", async () => {
    const client = new ConsoleClient({ host: "127.0.0.1", port,
                                       reconnectDelayMs: 50 });
    await client.connect();
    await waitFor(() => sockets.length === 1);
    sockets[0].destroy();
    await waitFor(() => sockets.length === 2, 3000);
    await waitFor(() => client.connected);
    client.close();
  });

  it("interleaves acks with the telemetry stream", async () => {
    commandHandler = (sock, msg) => {
      sock.write(telemetry(3.0) +
        JSON.stringify({ type: "ack", id: msg.id, applied_tick: 42 }) + "\n" +
        telemetry(3.1));
    };
    const client = await connected();
    const ack = await client.send({ command: "resume" });
    expect(ack.appliedTick).toBe(42);
    await waitFor(() => client.recordCount === 2);
    client.close();
  });
});
