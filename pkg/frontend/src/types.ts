/** Messages on the telemetry/command stream (line-delimited JSON). */

export interface HelloMessage {
  type: "hello";
  scenario: string;
  states: string[];
  thrusters: string[];
  rate_hz: number;
  decimation: number;
  dt: number;
}

export interface RunEvent {
  t: number;
  kind: string;
  [key: string]: unknown;
}

export interface TelemetryMessage {
  type: "telemetry";
  t: number;
  tick: number;
  w_deg_s: [number, number, number];
  rate_err_deg_s: number;
  nutation_deg: number;
  p_tank: number;
  m_prop: number;
  t_tank: number;
  seq_state: string;
  ctrl_mode: string;
  pulse_count: number;
  flags: number;
  events?: RunEvent[];
}

export interface AckMessage {
  type: "ack";
  id: number;
  applied_tick: number;
}

export interface ErrorMessage {
  type: "error";
  id: number | null;
  reason: string;
}

export type ServerMessage =
  | HelloMessage
  | TelemetryMessage
  | AckMessage
  | ErrorMessage;

export type FaultKind =
  | "stuck_closed"
  | "stuck_open"
  | "leak"
  | "degraded"
  | "extra_delay";

export interface FaultParams {
  mdot?: number;
  thrust_fraction?: number;
  eta?: number;
  extra_delay?: number;
}

export type Command =
  | { command: "inject_fault"; thruster: string; kind: FaultKind; params?: FaultParams }
  | { command: "sequence_goto"; state: string }
  | { command: "set_rate_target"; w_deg_s: [number, number, number] }
  | { command: "pause" }
  | { command: "resume" };

export function isServerMessage(value: unknown): value is ServerMessage {
  if (typeof value !== "object" || value === null) return false;
  const type = (value as { type?: unknown }).type;
  return type === "hello" || type === "telemetry" || type === "ack" ||
    type === "error";
}
