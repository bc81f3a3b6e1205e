/** Wire types mirroring the gateway's documented /v1 schemas. */

export type MessageKind = "DATA" | "CONTROL" | "BOS" | "EOS";

export interface TranscriptRecord {
  stream: string;
  seq: number;
  kind: MessageKind;
  tags: string[];
  payload: unknown;
  producer: string;
  session: string;
  ts: number;
}

export interface FeedEntry {
  id: number;
  record: TranscriptRecord;
}

export interface BudgetSnapshot {
  allocated: { cost: number | null; latency_ms: number | null; min_quality: number };
  projected: { cost: number; latency_ms: number; quality: number } | null;
  accrued: { cost: number; latency_ms: number; quality: number };
  policy: string;
  waived: string[];
}

export interface SessionView {
  id: string;
  state: string;
  plan_mode: string;
  participants: { agent: string; instance: string }[];
  open_streams: string[];
  plans: Record<string, string>;
  pending_decisions: string[];
  pending_confirms: string[];
  budget: BudgetSnapshot | null;
}

export interface PlanBinding {
  edge?: string;
  literal?: unknown;
  literal_source?: string;
  source?: string;
  needs_transform?: boolean;
}

export interface PlanNodeWire {
  id: string;
  agent: string;
  bindings: Record<string, PlanBinding>;
  status: string;
}

export interface PlanWire {
  plan_id: string;
  state: string;
  intent: string;
  origin: { text?: string; event?: unknown };
  nodes: PlanNodeWire[];
  edges: { from: string; to: string; needs_transform: boolean }[];
  meta: Record<string, unknown>;
}

export interface FormField {
  name: string;
  label: string;
  type: string;
  value: unknown;
}

export interface FormSpec {
  form_id: string;
  fields: FormField[];
  submit_event: string;
}

export interface TablePayload {
  columns: string[];
  rows: unknown[][];
}

export interface BudgetConfirm {
  instruction: "BUDGET_CONFIRM";
  confirm_id: string;
  plan: string;
  dimension: string;
  estimate: { cost: number; latency_ms: number; quality: number };
  accrued: { cost: number; latency_ms: number; quality: number };
  allocated: { cost: number | null; latency_ms: number | null; min_quality: number };
}

export type PlanDecision = "approve" | "reject" | "revise";

export interface PlanRevision {
  replace_agent?: { node: string; agent: string }[];
  set_literal?: { node: string; param: string; value: unknown }[];
}

export function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

export function isTable(payload: unknown): payload is TablePayload {
  return isRecord(payload) && Array.isArray(payload.columns) &&
    Array.isArray(payload.rows);
}

export function isForm(payload: unknown): payload is FormSpec {
  return isRecord(payload) && typeof payload.form_id === "string" &&
    Array.isArray(payload.fields);
}

export function isPlan(payload: unknown): payload is PlanWire {
  return isRecord(payload) && typeof payload.plan_id === "string" &&
    Array.isArray(payload.nodes);
}

export function isBudgetConfirm(payload: unknown): payload is BudgetConfirm {
  return isRecord(payload) && payload.instruction === "BUDGET_CONFIRM";
}
