/** Headless console driver.
 *
 * Replays the same gateway requests the browser console sends: create a
 * session, post utterances and events, answer plan proposals and budget
 * confirmations as they arrive on the feed, and wait for expected tags.
 * Used by the parity tests: a transcript produced through this driver
 * must be verify-equal to the headless CLI run of the same scenario.
 */
import type { GatewayClient } from "./client.js";
import {
  applyEntry,
  initialState,
  type ConsoleState,
} from "./model.js";

export interface DriverStep {
  action: "utterance" | "event" | "approve_plan" | "confirm_budget" | "wait";
  payload?: unknown;
  expect?: string[];
  forbid?: string[];
  timeoutMs?: number;
}

export interface DriverScript {
  session: {
    agents?: string[];
    budget?: Record<string, unknown>;
    plan_mode?: string;
  };
  steps: DriverStep[];
}

export interface DriverResult {
  sessionId: string;
  state: ConsoleState;
}

export class DriverError extends Error {}

export async function driveScript(
  client: GatewayClient,
  script: DriverScript,
): Promise<DriverResult> {
  const view = await client.createSession({
    agents: script.session.agents ?? [],
    budget: script.session.budget ?? null,
    plan_mode: script.session.plan_mode ?? "AUTO",
  });
  const state = initialState(view.id);
  for (const [index, step] of script.steps.entries()) {
    switch (step.action) {
      case "utterance":
        await client.postUtterance(view.id, step.payload as string);
        break;
      case "event":
        await client.postEvent(view.id,
          step.payload as Record<string, unknown>);
        break;
      case "approve_plan": {
        const planId = await latestPending(
          client, view.id, "pending_decisions", step.timeoutMs ?? 5000);
        const body = (step.payload ?? {}) as {
          decision?: "approve" | "reject" | "revise";
        };
        await client.decidePlan(view.id, planId, body.decision ?? "approve");
        break;
      }
      case "confirm_budget": {
        const confirmId = await latestPending(
          client, view.id, "pending_confirms", step.timeoutMs ?? 5000);
        const body = (step.payload ?? {}) as {
          decision?: "approve" | "deny";
        };
        await client.decideBudget(view.id, confirmId,
          body.decision ?? "approve");
        break;
      }
      case "wait":
        break;
      default:
        throw new DriverError(`step ${index + 1}: unknown action`);
    }
    await awaitTags(client, state, step, index + 1);
  }
  return { sessionId: view.id, state };
}

/** Consume the feed from the model's cursor until the expected tags have
 * appeared in order (or fail after the timeout). */
async function awaitTags(
  client: GatewayClient,
  state: ConsoleState,
  step: DriverStep,
  stepNumber: number,
): Promise<void> {
  const expect = [...(step.expect ?? [])];
  const forbid = step.forbid ?? [];
  const deadline = Date.now() + (step.timeoutMs ?? 8000);
  const seen: string[][] = [];
  let position = 0;
  for (;;) {
    const remaining = Math.max(50, deadline - Date.now());
    for await (const entry of client.feed(state.sessionId, {
      after: state.lastEventId,
      timeoutMs: Math.min(remaining, 500),
    })) {
      applyEntry(state, entry);
      seen.push(entry.record.tags);
      for (const tag of entry.record.tags) {
        if (forbid.includes(tag)) {
          throw new DriverError(
            `step ${stepNumber}: forbidden tag ${tag} observed`);
        }
      }
    }
    while (position < expect.length) {
      const target = expect[position];
      const found = seen.findIndex((tags) => tags.includes(target));
      if (found < 0) break;
      seen.splice(0, found + 1);
      position += 1;
    }
    if (position >= expect.length) {
      // settle: drain whatever is still arriving before the next step
      let quietPasses = 0;
      while (quietPasses < 2 && Date.now() < deadline) {
        let got = 0;
        for await (const entry of client.feed(state.sessionId, {
          after: state.lastEventId,
          timeoutMs: 150,
        })) {
          applyEntry(state, entry);
          got += 1;
          for (const tag of entry.record.tags) {
            if (forbid.includes(tag)) {
              throw new DriverError(
                `step ${stepNumber}: forbidden tag ${tag} observed`);
            }
          }
        }
        quietPasses = got === 0 ? quietPasses + 1 : 0;
      }
      return;
    }
    if (Date.now() >= deadline) {
      throw new DriverError(
        `step ${stepNumber}: tag ${expect[position]} not observed in order`);
    }
  }
}

async function latestPending(
  client: GatewayClient,
  sessionId: string,
  field: "pending_decisions" | "pending_confirms",
  timeoutMs: number,
): Promise<string> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const view = await client.getSession(sessionId);
    const pending = view[field];
    if (pending.length > 0) return pending[pending.length - 1];
    if (Date.now() >= deadline) {
      throw new DriverError(`no ${field} within ${timeoutMs}ms`);
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
}
