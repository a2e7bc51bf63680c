/** Wire types mirroring protocol.md; the golden fixtures freeze the shape. */

export interface RequestFrame {
  id: number;
  method: string;
  params: Record<string, unknown>;
}

export interface ErrorInfo {
  code: string;
  message: string;
}

export interface ResponseFrame {
  id: number | null;
  result?: Record<string, unknown>;
  error?: ErrorInfo;
}

export interface EdgeStep {
  op: "step";
  rule: string;
  true: string[];
  false: string[];
}

export interface EdgeJump {
  op: "jump";
  rules: string[];
  model: string[];
}

export type EdgePayload = EdgeStep | EdgeJump | null;

export interface StatePayload {
  node: number;
  parent: number | null;
  edge: EdgePayload;
  rules: string[];
  pos: string[];
  neg: string[];
  unfounded: string[][];
  stable: boolean;
  status: "in_progress" | "complete" | "succeeded" | "stuck";
}

export interface EventFrame {
  event: string;
  payload: StatePayload;
}

export type Bindings = Record<string, number | string>;

export interface InstanceInfo {
  id: string;
  text: string;
  atoms: string[];
  active: boolean;
  considered: boolean;
  steppable: boolean;
  substs: Bindings[];
}

export interface CandidateGroup {
  source: string;
  text: string;
  is_constraint: boolean;
  span: [number, number, number, number];
  instances: InstanceInfo[];
}

export interface ValidateResult {
  ok: boolean;
  condition?: string;
  detail?: string;
}

export interface StatusResult {
  status: StatePayload["status"];
  checked_failure: boolean;
  failed_at?: number | null;
}

export function isResponse(frame: unknown): frame is ResponseFrame {
  return typeof frame === "object" && frame !== null && !("event" in frame);
}

export function isEvent(frame: unknown): frame is EventFrame {
  return typeof frame === "object" && frame !== null && "event" in frame;
}
