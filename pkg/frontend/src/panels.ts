/**
 * Terminal panel rendering: pure functions from client state to text,
 * so the layout is testable without a TTY.
 */

import { ConsoleClient } from "./client.js";
import { RunEvent, TelemetryMessage } from "./types.js";

const SPARK_CHARS = " .:-=+*#%@";

/** Fixed-width sparkline over the most recent values of a series. */
export function sparkline(values: number[], width: number): string {
  if (values.length === 0) return " ".repeat(width);
  const recent = values.slice(-width);
  const lo = Math.min(...recent);
  const hi = Math.max(...recent);
  const span = hi - lo;
  const chars = recent.map((v) => {
    const norm = span < 1e-12 ? 0.5 : (v - lo) / span;
    const idx = Math.min(SPARK_CHARS.length - 1,
      Math.max(0, Math.round(norm * (SPARK_CHARS.length - 1))));
    return SPARK_CHARS[idx];
  });
  return chars.join("").padStart(width);
}

function fmt(value: number, digits = 3): string {
  return value.toFixed(digits);
}

function seriesOf(history: TelemetryMessage[],
                  pick: (m: TelemetryMessage) => number): number[] {
  return history.map(pick);
}

export function renderRatePanel(history: TelemetryMessage[],
                                latest: TelemetryMessage, width: number): string[] {
  const axes: Array<[string, (m: TelemetryMessage) => number]> = [
    ["wx", (m) => m.w_deg_s[0]],
    ["wy", (m) => m.w_deg_s[1]],
    ["wz", (m) => m.w_deg_s[2]],
  ];
  const lines = ["RATES [deg/s]"];
  for (const [label, pick] of axes) {
    lines.push(`  ${label} ${fmt(pick(latest)).padStart(9)} ` +
      sparkline(seriesOf(history, pick), width));
  }
  lines.push(`  nutation ${fmt(latest.nutation_deg).padStart(7)} ` +
    sparkline(seriesOf(history, (m) => m.nutation_deg), width));
  return lines;
}

export function renderTankPanel(history: TelemetryMessage[],
                                latest: TelemetryMessage, width: number): string[] {
  return [
    "TANK / PROPELLANT",
    `  p ${(latest.p_tank / 1e5).toFixed(3).padStart(9)} bar ` +
      sparkline(seriesOf(history, (m) => m.p_tank), width - 4),
    `  m ${fmt(latest.m_prop, 2).padStart(9)} kg  ` +
      sparkline(seriesOf(history, (m) => m.m_prop), width - 4),
    `  T ${fmt(latest.t_tank, 2).padStart(9)} K`,
  ];
}

export function renderSequencePanel(latest: TelemetryMessage,
                                    states: string[]): string[] {
  const chain = states.map((s) =>
    s === latest.seq_state ? `[${s}]` : ` ${s} `).join(" > ");
  return [
    "SEQUENCE",
    `  ${chain}`,
    `  controller ${latest.ctrl_mode}   pulses ${latest.pulse_count}` +
      `   rate err ${fmt(latest.rate_err_deg_s)} deg/s`,
  ];
}

export function renderEventPanel(events: RunEvent[], rows: number): string[] {
  const lines = ["EVENTS"];
  for (const e of events.slice(-rows)) {
    const extra = Object.entries(e)
      .filter(([k]) => k !== "t" && k !== "kind")
      .map(([k, v]) => `${k}=${JSON.stringify(v)}`)
      .join(" ");
    lines.push(`  t=${e.t.toFixed(2)} ${e.kind} ${extra}`.slice(0, 100));
  }
  while (lines.length < rows + 1) lines.push("");
  return lines;
}

export function renderStatusLine(client: ConsoleClient, now = Date.now()): string {
  if (!client.connected) return "LINK: DISCONNECTED (reconnecting...)";
  if (client.isStale(now)) {
    const age = client.recordAgeMs(now);
    return `LINK: STALE (${(age / 1000).toFixed(1)} s since last record)`;
  }
  return `LINK: LIVE   records ${client.recordCount}`;
}

/** The whole dashboard as one string (ANSI clear + panels). */
export function renderDashboard(client: ConsoleClient, width = 60,
                                now = Date.now()): string {
  const out: string[] = [];
  out.push(renderStatusLine(client, now));
  const latest = client.latest;
  if (latest === null) {
    out.push("(waiting for telemetry...)");
  } else {
    out.push(`t = ${latest.t.toFixed(2)} s   tick ${latest.tick}`);
    out.push("");
    out.push(...renderRatePanel(client.history, latest, width));
    out.push("");
    out.push(...renderTankPanel(client.history, latest, width));
    out.push("");
    out.push(...renderSequencePanel(latest, client.hello?.states ?? []));
    out.push("");
    out.push(...renderEventPanel(client.eventLog, 6));
  }
  out.push("");
  out.push("keys: [f]ault  [g]oto state  [r]ate target  [p]ause  " +
    "[c]ontinue  [q]uit");
  return out.join("\n");
}
