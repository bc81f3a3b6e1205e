/** Browser console: conversation pane, plan approvals, budget modal,
 * and a tag-filtered stream inspector, all driven off the live feed. */
import { GatewayClient } from "./client.js";
import {
  addEcho,
  applyEntry,
  applySnapshot,
  initialState,
  overBudget,
  streamTail,
  streams,
  type ConsoleState,
} from "./model.js";
import { escapeHtml, renderMessage } from "./render.js";
import { isRecord } from "./types.js";

export interface ConsoleOptions {
  baseUrl: string;
  token: string;
  agents?: string[];
  budget?: Record<string, unknown>;
  planMode?: string;
}

export class ConsoleApp {
  private client: GatewayClient;
  private state: ConsoleState | null = null;
  private abort = new AbortController();
  private requestCounter = 0;

  constructor(private root: HTMLElement, private options: ConsoleOptions) {
    this.client = new GatewayClient(options.baseUrl, options.token);
  }

  async start(): Promise<void> {
    const view = await this.client.createSession({
      agents: this.options.agents ?? [],
      budget: this.options.budget ?? null,
      plan_mode: this.options.planMode ?? "INTERACTIVE",
    });
    this.state = initialState(view.id);
    applySnapshot(this.state, view);
    this.mount();
    void this.pump();
  }

  stop(): void {
    this.abort.abort();
  }

  private mount(): void {
    this.root.innerHTML = `
      <div class="console">
        <header>
          <span class="session-id">${escapeHtml(this.state!.sessionId)}</span>
          <span class="budget-gauge"></span>
        </header>
        <main class="feed" aria-live="polite"></main>
        <aside class="panels">
          <section class="plans"></section>
          <section class="confirms"></section>
          <section class="inspector">
            <select class="stream-select"></select>
            <input class="tag-filter" placeholder="TAG,TAG" />
            <div class="tail"></div>
          </section>
        </aside>
        <footer>
          <form class="composer">
            <input name="utterance" placeholder="Say something" autofocus />
            <button type="submit">Send</button>
          </form>
          <p class="errors" role="alert"></p>
        </footer>
      </div>`;
    const composer = this.root.querySelector<HTMLFormElement>(".composer")!;
    composer.addEventListener("submit", (event) => {
      event.preventDefault();
      const input = composer.elements.namedItem(
        "utterance") as HTMLInputElement;
      if (input.value.trim()) void this.send(input.value.trim());
      input.value = "";
    });
    this.root.addEventListener("submit", (event) => {
      const form = event.target as HTMLElement;
      if (form.classList?.contains("msg-form")) {
        event.preventDefault();
        void this.submitForm(form as HTMLFormElement);
      }
    });
    this.root.addEventListener("click", (event) => {
      const button = event.target as HTMLElement;
      if (!(button instanceof HTMLButtonElement)) return;
      const decision = button.dataset.decision;
      const planBox = button.closest<HTMLElement>("[data-plan-id]");
      const confirmBox = button.closest<HTMLElement>("[data-confirm-id]");
      if (decision && planBox?.dataset.planId) {
        void this.decidePlan(planBox.dataset.planId,
          decision as "approve" | "reject" | "revise");
      } else if (decision && confirmBox?.dataset.confirmId) {
        void this.decideBudget(confirmBox.dataset.confirmId,
          decision as "approve" | "deny");
      }
    });
    const inspector = this.root.querySelector<HTMLElement>(".inspector")!;
    inspector.addEventListener("change", () => this.renderInspector());
    inspector.addEventListener("input", () => this.renderInspector());
  }

  private async pump(): Promise<void> {
    const state = this.state!;
    try {
      for await (const entry of this.client.liveFeed(state.sessionId, {
        after: state.lastEventId,
        signal: this.abort.signal,
      })) {
        applyEntry(state, entry);
        this.renderEntry(entry.record);
        this.renderPanels();
      }
    } catch (error) {
      this.surfaceError(error);
    }
  }

  private async send(text: string): Promise<void> {
    const state = this.state!;
    this.requestCounter += 1;
    const requestId = `console-${state.sessionId}-${this.requestCounter}`;
    addEcho(state, text, requestId);
    this.renderEcho(text);
    try {
      await this.client.postUtterance(state.sessionId, text, requestId);
    } catch (error) {
      this.surfaceError(error);
    }
  }

  private async submitForm(form: HTMLFormElement): Promise<void> {
    const values: Record<string, unknown> = {};
    for (const element of Array.from(form.elements)) {
      if (element instanceof HTMLInputElement && element.name) {
        values[element.name] = element.type === "number"
          ? (element.value === "" ? null : Number(element.value))
          : element.value;
      }
    }
    try {
      await this.client.postEvent(this.state!.sessionId, {
        type: form.dataset.submitEvent ?? "form_submit",
        form_id: form.dataset.formId,
        values,
      });
      form.querySelector("button")?.setAttribute("disabled", "disabled");
    } catch (error) {
      this.surfaceError(error);
    }
  }

  private async decidePlan(planId: string,
    decision: "approve" | "reject" | "revise"): Promise<void> {
    try {
      await this.client.decidePlan(this.state!.sessionId, planId, decision);
    } catch (error) {
      this.surfaceError(error);
    }
  }

  private async decideBudget(confirmId: string,
    decision: "approve" | "deny"): Promise<void> {
    try {
      await this.client.decideBudget(this.state!.sessionId, confirmId,
        decision);
    } catch (error) {
      this.surfaceError(error);
    }
  }

  private renderEcho(text: string): void {
    const feed = this.root.querySelector(".feed")!;
    const node = document.createElement("article");
    node.className = "message echo";
    node.innerHTML = `<p class="msg-text">${escapeHtml(text)}</p>`;
    feed.appendChild(node);
  }

  private renderEntry(record: ConsoleState["feed"][number]["record"]): void {
    if (record.kind === "BOS" || record.kind === "EOS") return;
    if (record.kind === "CONTROL" && isRecord(record.payload)
      && record.payload.instruction === "STREAM_CREATED") {
      return; // plumbing noise in the conversation pane
    }
    const feed = this.root.querySelector(".feed")!;
    // reconcile the optimistic echo with the authoritative message
    if (record.tags.includes("UTTERANCE")) {
      feed.querySelector(".echo")?.remove();
    }
    const wrapper = document.createElement("div");
    wrapper.innerHTML = renderMessage(record);
    feed.appendChild(wrapper.firstElementChild!);
    feed.scrollTop = feed.scrollHeight;
  }

  private renderPanels(): void {
    const state = this.state!;
    const plans = this.root.querySelector(".plans")!;
    plans.innerHTML = [...state.pendingPlans.values()]
      .map((plan) => renderMessage({
        stream: "", seq: 0, kind: "DATA", tags: ["PLAN"], payload: plan,
        producer: "TaskPlanner", session: state.sessionId, ts: 0,
      })).join("");
    const confirms = this.root.querySelector(".confirms")!;
    confirms.innerHTML = [...state.pendingConfirms.values()]
      .map((confirm) => renderMessage({
        stream: "", seq: 0, kind: "CONTROL", tags: ["BUDGET", "CONFIRM"],
        payload: confirm, producer: "TC", session: state.sessionId, ts: 0,
      })).join("");
    const gauge = this.root.querySelector(".budget-gauge")!;
    if (state.budget) {
      const { accrued, allocated } = state.budget;
      gauge.textContent =
        `cost ${accrued.cost}${allocated.cost !== null
          ? ` / ${allocated.cost}` : ""}`;
      gauge.classList.toggle("over", overBudget(state));
    }
    const select = this.root.querySelector<HTMLSelectElement>(
      ".stream-select")!;
    const known = new Set(
      Array.from(select.options).map((option) => option.value));
    for (const streamId of streams(state)) {
      if (!known.has(streamId)) {
        const option = document.createElement("option");
        option.value = streamId;
        option.textContent = streamId;
        select.appendChild(option);
      }
    }
    this.renderInspector();
  }

  private renderInspector(): void {
    const state = this.state!;
    const select = this.root.querySelector<HTMLSelectElement>(
      ".stream-select")!;
    const filter = this.root.querySelector<HTMLInputElement>(".tag-filter")!;
    if (!select.value) return;
    const include = filter.value.split(",")
      .map((tag) => tag.trim().toUpperCase())
      .filter((tag) => tag.length > 0);
    const tail = streamTail(state, select.value, include);
    this.root.querySelector(".tail")!.innerHTML =
      tail.map(renderMessage).join("");
  }

  private surfaceError(error: unknown): void {
    const box = this.root.querySelector(".errors");
    if (box) box.textContent = error instanceof Error
      ? error.message : String(error);
  }
}

export function mountConsole(root: HTMLElement,
  options: ConsoleOptions): ConsoleApp {
  const app = new ConsoleApp(root, options);
  void app.start();
  return app;
}
