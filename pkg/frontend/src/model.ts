/** Console session model: a pure reducer over the event feed.
 *
 * Everything the console shows is derived from feed entries plus REST
 * snapshots; there is no console-private truth, so replaying the same
 * feed always reconstructs the same state.
 */
import {
  isBudgetConfirm,
  isForm,
  isPlan,
  isRecord,
  type BudgetConfirm,
  type BudgetSnapshot,
  type FeedEntry,
  type FormSpec,
  type PlanWire,
  type SessionView,
  type TranscriptRecord,
} from "./types.js";

export interface PendingEcho {
  text: string;
  requestId: string;
}

export interface ConsoleState {
  sessionId: string;
  feed: FeedEntry[];
  lastEventId: number;
  planStates: Map<string, string>;
  pendingPlans: Map<string, PlanWire>;
  pendingForms: Map<string, FormSpec>;
  pendingConfirms: Map<string, BudgetConfirm>;
  results: TranscriptRecord[];
  budget: BudgetSnapshot | null;
  pendingEchoes: PendingEcho[];
}

export function initialState(sessionId: string): ConsoleState {
  return {
    sessionId,
    feed: [],
    lastEventId: 0,
    planStates: new Map(),
    pendingPlans: new Map(),
    pendingForms: new Map(),
    pendingConfirms: new Map(),
    results: [],
    budget: null,
    pendingEchoes: [],
  };
}

/** Seed plan states and the budget gauge from a REST snapshot. */
export function applySnapshot(state: ConsoleState, view: SessionView): void {
  state.budget = view.budget;
  for (const [planId, planState] of Object.entries(view.plans)) {
    state.planStates.set(planId, planState);
  }
}

/** Optimistic local echo for a just-sent utterance; reconciled when the
 * matching UTTERANCE message arrives on the feed. */
export function addEcho(state: ConsoleState, text: string,
  requestId: string): void {
  state.pendingEchoes.push({ text, requestId });
}

export function applyEntry(state: ConsoleState, entry: FeedEntry): void {
  if (entry.id <= state.lastEventId) return; // duplicate across resume
  state.lastEventId = entry.id;
  state.feed.push(entry);
  const record = entry.record;
  const tags = new Set(record.tags);
  const payload = record.payload;

  if (tags.has("UTTERANCE") && record.kind === "DATA") {
    const index = state.pendingEchoes.findIndex((e) => e.text === payload);
    if (index >= 0) state.pendingEchoes.splice(index, 1);
  }
  if (record.kind === "DATA" && tags.has("PLAN") && isPlan(payload)) {
    state.planStates.set(payload.plan_id, payload.state);
    if (payload.state === "PROPOSED") {
      state.pendingPlans.set(payload.plan_id, payload);
    }
    return;
  }
  if (record.kind === "DATA" && tags.has("FORM") && isForm(payload)) {
    state.pendingForms.set(payload.form_id, payload);
    return;
  }
  if (record.kind === "DATA" && tags.has("EVENT") && isRecord(payload)
    && payload.type === "form_submit"
    && typeof payload.form_id === "string") {
    state.pendingForms.delete(payload.form_id);
    return;
  }
  if (record.kind === "DATA" && tags.has("RESULT")) {
    state.results.push(record);
    return;
  }
  if (record.kind !== "CONTROL" || !isRecord(payload)) return;
  switch (payload.instruction) {
    case "BUDGET": {
      const accrued = payload.accrued as BudgetSnapshot["accrued"];
      const allocated = payload.allocated as BudgetSnapshot["allocated"];
      state.budget = {
        allocated,
        accrued,
        projected: state.budget?.projected ?? null,
        policy: state.budget?.policy ?? "",
        waived: state.budget?.waived ?? [],
      };
      break;
    }
    case "BUDGET_CONFIRM":
      if (isBudgetConfirm(payload)) {
        state.pendingConfirms.set(payload.confirm_id, payload);
      }
      break;
    case "BUDGET_DECISION":
      if (typeof payload.confirm_id === "string") {
        state.pendingConfirms.delete(payload.confirm_id);
      }
      break;
    case "PLAN_DECISION":
      if (typeof payload.plan === "string") {
        state.pendingPlans.delete(payload.plan);
      }
      break;
    case "PLAN_DONE":
      if (typeof payload.plan === "string"
        && typeof payload.state === "string") {
        state.planStates.set(payload.plan, payload.state);
        state.pendingPlans.delete(payload.plan);
      }
      break;
    case "ABORTED":
      if (typeof payload.plan === "string") {
        state.planStates.set(payload.plan, "ABORTED");
        state.pendingPlans.delete(payload.plan);
      }
      break;
    default:
      break;
  }
}

export function applyEntries(state: ConsoleState,
  entries: Iterable<FeedEntry>): void {
  for (const entry of entries) applyEntry(state, entry);
}

/** True when accrued cost or latency exceeds the allocation (gauge flag). */
export function overBudget(state: ConsoleState): boolean {
  const budget = state.budget;
  if (!budget) return false;
  const { allocated, accrued } = budget;
  return (allocated.cost !== null && accrued.cost > allocated.cost)
    || (allocated.latency_ms !== null
      && accrued.latency_ms > allocated.latency_ms);
}

/** Per-stream live tail with include/exclude tag filtering (inspector). */
export function streamTail(state: ConsoleState, streamId: string,
  include: string[] = [], exclude: string[] = [], limit = 50):
  TranscriptRecord[] {
  const matches = (record: TranscriptRecord) => {
    if (record.stream !== streamId) return false;
    const tags = new Set(record.tags);
    if (exclude.some((tag) => tags.has(tag))) return false;
    if (include.length === 0) return true;
    return include.some((tag) => tags.has(tag));
  };
  const out = state.feed.map((entry) => entry.record).filter(matches);
  return out.slice(-limit);
}

export function streams(state: ConsoleState): string[] {
  return [...new Set(state.feed.map((entry) => entry.record.stream))].sort();
}
