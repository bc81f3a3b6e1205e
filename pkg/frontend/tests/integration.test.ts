/** Console parity against a live gateway.
 *
 * Spawns the actual daemon, drives the ui_select_summary/conversation_query scenarios through the
 * headless console driver (the same requests the browser sends), and
 * checks the resulting transcripts are verify-equal to headless CLI runs
 * of the same scripts. Also checks that approval/confirmation controls
 * post the documented messages and that feed reconnects lose nothing.
 */
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { afterEach, describe, expect, it } from "vitest";

import { GatewayClient } from "../src/client.js";
import { driveScript, type DriverScript } from "../src/driver.js";
import type { FeedEntry, TranscriptRecord } from "../src/types.js";

const REPO_ROOT = resolve(__dirname, "..", "..");
const TOKEN = "console-test-token";

const pythonOk = spawnSync("python3", ["-c", "import orchestra_kernel"], {
  cwd: REPO_ROOT,
}).status === 0;

const maybe = pythonOk ? describe : describe.skip;

let nextPort = 8840 + (process.pid % 50);

interface Daemon {
  proc: ChildProcess;
  base: string;
  client: GatewayClient;
}

const running: Daemon[] = [];

async function startDaemon(): Promise<Daemon> {
  nextPort += 1;
  const port = nextPort;
  const dir = mkdtempSync(join(tmpdir(), "console-"));
  const config = join(dir, "serve.yaml");
  writeFileSync(config, [
    "host: 127.0.0.1",
    `port: ${port}`,
    `auth_token: ${TOKEN}`,
    "seeds: seeds",
    "log_level: warning",
    "",
  ].join("\n"));
  const proc = spawn("python3",
    ["-m", "orchestra_kernel.cli", "serve", "--config", config],
    { cwd: REPO_ROOT, stdio: "ignore" });
  const base = `http://127.0.0.1:${port}`;
  const client = new GatewayClient(base, TOKEN);
  const deadline = Date.now() + 15000;
  for (;;) {
    try {
      await client.health();
      break;
    } catch {
      if (Date.now() > deadline) {
        proc.kill();
        throw new Error("daemon did not come up");
      }
      await new Promise((resolveSleep) => setTimeout(resolveSleep, 200));
    }
  }
  const daemon = { proc, base, client };
  running.push(daemon);
  return daemon;
}

afterEach(() => {
  while (running.length) running.pop()?.proc.kill();
});

function cli(args: string[]): { status: number; output: string } {
  const result = spawnSync("python3",
    ["-m", "orchestra_kernel.cli", ...args],
    { cwd: REPO_ROOT, encoding: "utf-8" });
  return { status: result.status ?? -1,
    output: `${result.stdout}\n${result.stderr}` };
}

function writeTranscript(records: TranscriptRecord[], name: string): string {
  const dir = mkdtempSync(join(tmpdir(), "transcript-"));
  const path = join(dir, name);
  writeFileSync(path,
    records.map((record) => JSON.stringify(record)).join("\n") + "\n");
  return path;
}

const UI_SELECT_SUMMARY: DriverScript = {
  session: {
    agents: ["AgenticEmployer", "Summarizer"],
    plan_mode: "AUTO",
    budget: { cost: 100.0, latency_ms: 600000.0, min_quality: 0.0,
      policy: "ABORT" },
  },
  steps: [{
    action: "event",
    payload: { type: "select", entity: "job", id: 7 },
    expect: ["EVENT", "JOBID", "PLAN", "EXEC", "RESULT"],
  }],
};

const CONVERSATION_QUERY: DriverScript = {
  session: {
    agents: ["IntentClassifier", "AgenticEmployer", "NL2Q", "QueryExecutor",
      "QuerySummarizer"],
    plan_mode: "AUTO",
    budget: { cost: 100.0, latency_ms: 600000.0, min_quality: 0.0,
      policy: "ABORT" },
  },
  steps: [{
    action: "utterance",
    payload: "how many applicants have python skills",
    expect: ["UTTERANCE", "INTENT", "NLQ", "SQL", "QRESULT", "RESULT"],
  }],
};

async function consoleTranscript(daemon: Daemon, script: DriverScript):
  Promise<TranscriptRecord[]> {
  const { sessionId } = await driveScript(daemon.client, script);
  await daemon.client.closeSession(sessionId);
  return daemon.client.transcript(sessionId);
}

maybe("console parity with the headless CLI", () => {
  it("ui_select_summary transcript is verify-equal to the CLI run", async () => {
    const daemon = await startDaemon();
    const records = await consoleTranscript(daemon, UI_SELECT_SUMMARY);
    const consolePath = writeTranscript(records, "ui_select_summary-console.jsonl");
    const cliPath = join(mkdtempSync(join(tmpdir(), "cli-")), "ui_select_summary.jsonl");
    const run = cli(["run",
      "--scenario", "seeds/scenarios/ui_select_summary.yaml",
      "--seeds", "seeds", "--out", cliPath]);
    expect(run.status, run.output).toBe(0);
    const verify = cli(["verify", "--transcript", consolePath,
      "--golden", cliPath]);
    expect(verify.status, verify.output).toBe(0);
  }, 60000);

  it("conversation_query transcript is verify-equal to the CLI run", async () => {
    const daemon = await startDaemon();
    const records = await consoleTranscript(daemon, CONVERSATION_QUERY);
    const consolePath = writeTranscript(records, "conversation_query-console.jsonl");
    const cliPath = join(mkdtempSync(join(tmpdir(), "cli-")), "conversation_query.jsonl");
    const run = cli(["run",
      "--scenario", "seeds/scenarios/conversation_query.yaml",
      "--seeds", "seeds", "--out", cliPath]);
    expect(run.status, run.output).toBe(0);
    const verify = cli(["verify", "--transcript", consolePath,
      "--golden", cliPath]);
    expect(verify.status, verify.output).toBe(0);
  }, 60000);

  it("plan approval posts the documented decision control", async () => {
    const daemon = await startDaemon();
    const { sessionId, state } = await driveScript(daemon.client, {
      session: {
        agents: ["IntentClassifier", "AgenticEmployer", "Responder"],
        plan_mode: "INTERACTIVE",
        budget: { cost: 100.0, policy: "ABORT" },
      },
      steps: [
        { action: "utterance", payload: "hello there", expect: ["PLAN"] },
        { action: "approve_plan", payload: { decision: "approve" },
          expect: ["DECISION", "EXEC", "RESULT"] },
      ],
    });
    const decisions = state.feed
      .map((entry) => entry.record)
      .filter((record) => record.kind === "CONTROL"
        && record.tags.includes("DECISION"))
      .map((record) => record.payload as Record<string, unknown>);
    expect(decisions.some((payload) =>
      payload.instruction === "PLAN_DECISION"
      && payload.decision === "approve"
      && typeof payload.plan === "string")).toBe(true);
    const view = await daemon.client.getSession(sessionId);
    expect(Object.values(view.plans)).toContain("COMPLETED");
  }, 60000);

  it("budget confirmation resumes execution and flags the gauge", async () => {
    const daemon = await startDaemon();
    const { sessionId, state } = await driveScript(daemon.client, {
      session: {
        agents: ["AgenticEmployer", "Summarizer"],
        plan_mode: "AUTO",
        budget: { cost: 0.5, latency_ms: 600000.0, min_quality: 0.0,
          policy: "CONFIRM" },
      },
      steps: [
        { action: "event",
          payload: { type: "select", entity: "job", id: 7 },
          expect: ["EVENT", "PLAN", "CONFIRM"], forbid: ["EXEC"] },
        { action: "confirm_budget", payload: { decision: "approve" },
          expect: ["DECISION", "EXEC", "RESULT"] },
      ],
    });
    const decisions = state.feed
      .map((entry) => entry.record)
      .filter((record) => record.kind === "CONTROL"
        && record.tags.includes("DECISION"))
      .map((record) => record.payload as Record<string, unknown>);
    expect(decisions.some((payload) =>
      payload.instruction === "BUDGET_DECISION"
      && payload.decision === "approve"
      && typeof payload.confirm_id === "string")).toBe(true);
    const view = await daemon.client.getSession(sessionId);
    expect(view.budget!.accrued.cost)
      .toBeGreaterThan(view.budget!.allocated.cost as number);
    expect(state.pendingConfirms.size).toBe(0);
  }, 60000);

  it("feed reconnect mid-scenario loses zero messages", async () => {
    const daemon = await startDaemon();
    const view = await daemon.client.createSession({
      agents: ["AgenticEmployer", "Summarizer"],
      budget: { cost: 100.0, policy: "ABORT" },
      plan_mode: "AUTO",
    });
    await daemon.client.postEvent(view.id,
      { type: "select", entity: "job", id: 7 });
    // first page, then a deliberate disconnect, then resume from cursor
    const first: FeedEntry[] = [];
    for await (const entry of daemon.client.feed(view.id,
      { after: 0, maxEvents: 5 })) {
      first.push(entry);
    }
    expect(first.length).toBe(5);
    const rest: FeedEntry[] = [];
    const deadline = Date.now() + 10000;
    let cursor = first[first.length - 1].id;
    let sawResult = false;
    while (!sawResult && Date.now() < deadline) {
      for await (const entry of daemon.client.feed(view.id,
        { after: cursor, timeoutMs: 500 })) {
        cursor = entry.id;
        rest.push(entry);
        if (entry.record.tags.includes("RESULT")) sawResult = true;
      }
    }
    expect(sawResult).toBe(true);
    const ids = [...first, ...rest].map((entry) => entry.id);
    // gapless and duplicate-free across the reconnect
    expect(ids).toEqual(
      Array.from({ length: ids.length }, (_v, index) => index + 1));
  }, 60000);
});

if (!pythonOk) {
  it("integration suite skipped: orchestra_kernel not importable", () => {
    expect(pythonOk).toBe(false);
  });
}
