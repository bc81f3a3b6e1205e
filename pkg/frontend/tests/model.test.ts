import { describe, expect, it } from "vitest";

import {
  addEcho,
  applyEntries,
  applyEntry,
  applySnapshot,
  initialState,
  overBudget,
  streamTail,
  streams,
} from "../src/model.js";
import type { FeedEntry, TranscriptRecord } from "../src/types.js";

let counter = 0;

function entry(partial: Partial<TranscriptRecord>): FeedEntry {
  counter += 1;
  return {
    id: counter,
    record: {
      stream: "SESSION:S1:AGENT:X:0",
      seq: counter,
      kind: "DATA",
      tags: [],
      payload: null,
      producer: "X",
      session: "S1",
      ts: 0,
      ...partial,
    },
  };
}

function planPayload(state = "PROPOSED", planId = "plan-1") {
  return {
    plan_id: planId,
    state,
    intent: "SUMMARIZE",
    origin: { text: "" },
    nodes: [{ id: "n", agent: "Summarizer", bindings: {}, status: "PENDING" }],
    edges: [],
    meta: {},
  };
}

describe("console model", () => {
  it("tracks plan proposals until a terminal control arrives", () => {
    const state = initialState("S1");
    applyEntry(state, entry({ tags: ["PLAN"], payload: planPayload() }));
    expect([...state.pendingPlans.keys()]).toEqual(["plan-1"]);
    expect(state.planStates.get("plan-1")).toBe("PROPOSED");
    applyEntry(state, entry({
      kind: "CONTROL",
      tags: ["SYS"],
      payload: { instruction: "PLAN_DONE", plan: "plan-1",
        state: "COMPLETED" },
    }));
    expect(state.pendingPlans.size).toBe(0);
    expect(state.planStates.get("plan-1")).toBe("COMPLETED");
  });

  it("removes pending plans on an explicit decision message", () => {
    const state = initialState("S1");
    applyEntry(state, entry({ tags: ["PLAN"], payload: planPayload() }));
    applyEntry(state, entry({
      kind: "CONTROL",
      tags: ["DECISION"],
      payload: { instruction: "PLAN_DECISION", plan: "plan-1",
        decision: "reject" },
    }));
    expect(state.pendingPlans.size).toBe(0);
  });

  it("tracks forms until their submit event arrives", () => {
    const state = initialState("S1");
    applyEntry(state, entry({
      tags: ["FORM"],
      payload: { form_id: "form-S1-1", fields: [], submit_event:
        "form_submit" },
    }));
    expect(state.pendingForms.has("form-S1-1")).toBe(true);
    applyEntry(state, entry({
      tags: ["EVENT"],
      payload: { type: "form_submit", form_id: "form-S1-1", values: {} },
    }));
    expect(state.pendingForms.size).toBe(0);
  });

  it("updates the budget gauge and flags overage", () => {
    const state = initialState("S1");
    applyEntry(state, entry({
      kind: "CONTROL",
      tags: ["BUDGET"],
      payload: {
        instruction: "BUDGET", node: "n",
        charge: { cost: 2, latency_ms: 5 },
        accrued: { cost: 2, latency_ms: 5, quality: 0.9 },
        allocated: { cost: 10, latency_ms: null, min_quality: 0 },
      },
    }));
    expect(state.budget?.accrued.cost).toBe(2);
    expect(overBudget(state)).toBe(false);
    applyEntry(state, entry({
      kind: "CONTROL",
      tags: ["BUDGET"],
      payload: {
        instruction: "BUDGET", node: "n2",
        charge: { cost: 11, latency_ms: 5 },
        accrued: { cost: 13, latency_ms: 10, quality: 0.9 },
        allocated: { cost: 10, latency_ms: null, min_quality: 0 },
      },
    }));
    expect(overBudget(state)).toBe(true);
  });

  it("tracks budget confirmations until decided", () => {
    const state = initialState("S1");
    applyEntry(state, entry({
      kind: "CONTROL",
      tags: ["BUDGET", "CONFIRM"],
      payload: {
        instruction: "BUDGET_CONFIRM", confirm_id: "confirm-S1-1",
        plan: "plan-1", dimension: "cost",
        estimate: { cost: 2, latency_ms: 1, quality: 1 },
        accrued: { cost: 0, latency_ms: 0, quality: 1 },
        allocated: { cost: 0.5, latency_ms: null, min_quality: 0 },
      },
    }));
    expect([...state.pendingConfirms.keys()]).toEqual(["confirm-S1-1"]);
    applyEntry(state, entry({
      kind: "CONTROL",
      tags: ["DECISION"],
      payload: { instruction: "BUDGET_DECISION", confirm_id: "confirm-S1-1",
        decision: "approve" },
    }));
    expect(state.pendingConfirms.size).toBe(0);
  });

  it("collects RESULT messages and reconciles optimistic echoes", () => {
    const state = initialState("S1");
    addEcho(state, "hello", "req-1");
    expect(state.pendingEchoes.length).toBe(1);
    applyEntry(state, entry({ tags: ["UTTERANCE"], payload: "hello" }));
    expect(state.pendingEchoes.length).toBe(0);
    applyEntry(state, entry({ tags: ["RESULT"], payload: "Hi there" }));
    expect(state.results.map((record) => record.payload)).toEqual(
      ["Hi there"]);
  });

  it("ignores duplicate entries across a resume", () => {
    const state = initialState("S1");
    const one = entry({ tags: ["RESULT"], payload: "x" });
    applyEntry(state, one);
    applyEntry(state, one);
    expect(state.results.length).toBe(1);
    expect(state.feed.length).toBe(1);
  });

  it("is a pure function of the feed (replay reconstructs state)", () => {
    const sequence = [
      entry({ tags: ["PLAN"], payload: planPayload() }),
      entry({ tags: ["FORM"], payload: { form_id: "f1", fields: [],
        submit_event: "form_submit" } }),
      entry({ tags: ["RESULT"], payload: "done" }),
    ];
    const a = initialState("S1");
    const b = initialState("S1");
    applyEntries(a, sequence);
    applyEntries(b, sequence);
    expect(JSON.stringify({ ...a, pendingPlans: [...a.pendingPlans],
      pendingForms: [...a.pendingForms],
      pendingConfirms: [...a.pendingConfirms],
      planStates: [...a.planStates] }))
      .toBe(JSON.stringify({ ...b, pendingPlans: [...b.pendingPlans],
        pendingForms: [...b.pendingForms],
        pendingConfirms: [...b.pendingConfirms],
        planStates: [...b.planStates] }));
  });

  it("filters the stream inspector tail by tags", () => {
    const state = initialState("S1");
    applyEntry(state, entry({ stream: "A", tags: ["SQL"], payload: "q1" }));
    applyEntry(state, entry({ stream: "A", tags: ["NLQ"], payload: "q2" }));
    applyEntry(state, entry({ stream: "B", tags: ["SQL"], payload: "q3" }));
    expect(streams(state)).toEqual(["A", "B"]);
    const tail = streamTail(state, "A", ["SQL"]);
    expect(tail.map((r) => r.payload)).toEqual(["q1"]);
    const all = streamTail(state, "A");
    expect(all.length).toBe(2);
    const excluded = streamTail(state, "A", [], ["NLQ"]);
    expect(excluded.map((r) => r.payload)).toEqual(["q1"]);
  });

  it("seeds budget and plan states from a REST snapshot", () => {
    const state = initialState("S1");
    applySnapshot(state, {
      id: "S1", state: "ACTIVE", plan_mode: "AUTO", participants: [],
      open_streams: [], plans: { "plan-9": "EXECUTING" },
      pending_decisions: [], pending_confirms: [],
      budget: { allocated: { cost: 5, latency_ms: null, min_quality: 0 },
        projected: null,
        accrued: { cost: 1, latency_ms: 2, quality: 1 },
        policy: "ABORT", waived: [] },
    });
    expect(state.planStates.get("plan-9")).toBe("EXECUTING");
    expect(state.budget?.allocated.cost).toBe(5);
  });
});
