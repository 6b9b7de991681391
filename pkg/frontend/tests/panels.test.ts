import { describe, expect, it } from "vitest";

import { ConsoleClient } from "../src/client.js";
import {
  renderDashboard,
  renderSequencePanel,
  renderStatusLine,
  sparkline,
} from "../src/panels.js";
import { TelemetryMessage } from "../src/types.js";

function sample(t: number): TelemetryMessage {
  return {
    type: "telemetry", t, tick: Math.round(t * 100),
    w_deg_s: [0.01, -0.02, 3.0], rate_err_deg_s: 0.05, nutation_deg: 2.5,
    p_tank: 2.0e6, m_prop: 600 - t, t_tank: 290, seq_state: "COAST",
    ctrl_mode: "adaptive", pulse_count: 12, flags: 0,
  };
}

describe("sparkline", () => {
  it("has fixed width and spans the character ramp", () => {
    const line = sparkline([0, 1, 2, 3, 4, 5, 6, 7, 8, 9], 10);
    expect(line.length).toBe(10);
    expect(line[0]).toBe(" ");
    expect(line[9]).toBe("@");
  });

  it("renders a flat series mid-ramp", () => {
    const line = sparkline([5, 5, 5, 5], 4);
    expect(new Set(line.split("")).size).toBe(1);
  });

  it("pads when the series is shorter than the width", () => {
    expect(sparkline([1], 8).length).toBe(8);
  });
});

describe("panels", () => {
  it("sequence panel highlights the current state", () => {
    const lines = renderSequencePanel(sample(10), ["SPIN_UP", "COAST", "SAFE"]);
    expect(lines.join("\n")).toContain("[COAST]");
    expect(lines.join("\n")).toContain(" SPIN_UP ");
  });

  it("dashboard shows waiting state before telemetry", () => {
    const client = new ConsoleClient({ host: "x", port: 1 });
    const text = renderDashboard(client);
    expect(text).toContain("waiting for telemetry");
    expect(text).toContain("DISCONNECTED");
  });

  it("dashboard renders all panels from history", () => {
    const client = new ConsoleClient({ host: "x", port: 1 });
    client.connected = true;
    for (let k = 0; k < 30; k++) {
      (client as any).dispatch(sample(k * 0.1));
    }
    (client as any).dispatch({
      type: "hello", scenario: "s", states: ["SPIN_UP", "COAST"],
      thrusters: ["xp"], rate_hz: 10, decimation: 10, dt: 0.01,
    });
    const text = renderDashboard(client, 40, Date.now());
    expect(text).toContain("RATES [deg/s]");
    expect(text).toContain("TANK / PROPELLANT");
    expect(text).toContain("SEQUENCE");
    expect(text).toContain("[COAST]");
    expect(text).toContain("LINK: LIVE");
  });

  it("status line flags staleness", () => {
    const client = new ConsoleClient({ host: "x", port: 1, staleAfterMs: 10 });
    client.connected = true;
    (client as any).dispatch(sample(0));
    const later = Date.now() + 5000;
    expect(renderStatusLine(client, later)).toContain("STALE");
  });
});
