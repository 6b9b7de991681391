/**
 * Operator console: connect to a live `upstage serve --telemetry-listen`
 * endpoint, render the telemetry panels, and steer the run.
 *
 *   node dist/console.js 127.0.0.1:46000
 *
 * Keys: f inject a fault, g jump the sequence, r retarget the spin rate,
 * p pause, c resume, q quit.  Prompted input is read from stdin; every
 * command's ack (with the tick it applied at) or rejection is shown in
 * the status area.
 */

import * as readline from "node:readline";

import { ConsoleClient } from "./client.js";
import { renderDashboard } from "./panels.js";
import { Command, FaultKind } from "./types.js";

const REDRAW_MS = 100; // 10 Hz redraw: at least as fast as the stream

function parseEndpoint(arg: string | undefined): { host: string; port: number } {
  const text = arg ?? "127.0.0.1:46000";
  const idx = text.lastIndexOf(":");
  return { host: text.slice(0, idx) || "127.0.0.1", port: Number(text.slice(idx + 1)) };
}

async function prompt(question: string): Promise<string> {
  const rl = readline.createInterface({ input: process.stdin, output: process.stdout });
  const answer: string = await new Promise((resolve) => rl.question(question, resolve));
  rl.close();
  return answer.trim();
}

async function main(): Promise<void> {
  const { host, port } = parseEndpoint(process.argv[2]);
  const client = new ConsoleClient({ host, port });
  let statusNote = "";
  let promptOpen = false;

  try {
    await client.connect();
  } catch (err) {
    console.error(`connection refused at ${host}:${port}: ${String(err)}`);
    process.exitCode = 1;
    return;
  }

  const redraw = setInterval(() => {
    if (promptOpen) return;
    const frame = renderDashboard(client, 58);
    process.stdout.write("\x1b[2J\x1b[H" + frame +
      (statusNote ? `\n${statusNote}` : "") + "\n");
  }, REDRAW_MS);

  async function issue(command: Command): Promise<void> {
    try {
      const ack = await client.send(command);
      statusNote = `ack #${ack.id} applied at tick ${ack.appliedTick}`;
    } catch (err) {
      statusNote = `rejected: ${err instanceof Error ? err.message : String(err)}`;
    }
  }

  async function handleKey(key: string): Promise<void> {
    promptOpen = true;
    try {
      if (key === "f") {
        const thruster = await prompt(`thruster (${client.hello?.thrusters.join(", ")}): `);
        const kind = await prompt("kind (stuck_open, stuck_closed, leak, degraded, extra_delay): ");
        await issue({ command: "inject_fault", thruster, kind: kind as FaultKind });
      } else if (key === "g") {
        const state = await prompt(`state (${client.hello?.states.join(", ")}): `);
        await issue({ command: "sequence_goto", state });
      } else if (key === "r") {
        const text = await prompt("rate target deg/s (x,y,z): ");
        const parts = text.split(",").map(Number);
        if (parts.length === 3 && parts.every(Number.isFinite)) {
          await issue({ command: "set_rate_target",
                        w_deg_s: parts as [number, number, number] });
        } else {
          statusNote = "rejected: need three numbers";
        }
      } else if (key === "p") {
        await issue({ command: "pause" });
      } else if (key === "c") {
        await issue({ command: "resume" });
      }
    } finally {
      promptOpen = false;
    }
  }

  readline.emitKeypressEvents(process.stdin);
  if (process.stdin.isTTY) process.stdin.setRawMode(true);
  process.stdin.on("keypress", (_chunk, key: { name?: string; ctrl?: boolean }) => {
    if (key.name === "q" || (key.ctrl && key.name === "c")) {
      clearInterval(redraw);
      client.close();
      process.stdout.write("\n");
      process.exit(0);
    }
    if (!promptOpen && key.name && "fgrpc".includes(key.name)) {
      void handleKey(key.name);
    }
  });
}

void main();
