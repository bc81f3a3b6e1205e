/** Payload-kind-driven renderers producing HTML strings.
 *
 * Simple payloads get plain renderers; tables become grids, forms become
 * interactive forms whose submit posts an event, plans become a DAG view
 * with approve/revise/reject controls, and budget confirmations become a
 * modal. The registry is keyed by detected payload kind so new renderers
 * slot in without touching callers.
 */
import {
  isBudgetConfirm,
  isForm,
  isPlan,
  isRecord,
  isTable,
  type BudgetConfirm,
  type FormSpec,
  type PlanWire,
  type TablePayload,
  type TranscriptRecord,
} from "./types.js";

export function escapeHtml(value: unknown): string {
  return String(value ?? "")
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

export type PayloadKind =
  | "text"
  | "table"
  | "form"
  | "plan"
  | "budget-confirm"
  | "list"
  | "record";

export function payloadKind(record: TranscriptRecord): PayloadKind {
  const payload = record.payload;
  if (typeof payload === "string" || typeof payload === "number"
    || typeof payload === "boolean") {
    return "text";
  }
  if (isBudgetConfirm(payload)) return "budget-confirm";
  if (isPlan(payload)) return "plan";
  if (isForm(payload)) return "form";
  if (isTable(payload)) return "table";
  if (isRecord(payload) && payload.kind === "list") return "list";
  return "record";
}

export function renderText(payload: unknown): string {
  return `<p class="msg-text">${escapeHtml(payload)}</p>`;
}

export function renderTable(payload: TablePayload): string {
  const head = payload.columns
    .map((column) => `<th>${escapeHtml(column)}</th>`)
    .join("");
  const body = payload.rows
    .map((row) =>
      `<tr>${row.map((cell) => `<td>${escapeHtml(cell)}</td>`).join("")}</tr>`)
    .join("");
  return `<table class="msg-table"><thead><tr>${head}</tr></thead>` +
    `<tbody>${body}</tbody></table>`;
}

export function renderForm(form: FormSpec): string {
  const fields = form.fields.map((field) => {
    const value = field.value === null || field.value === undefined
      ? ""
      : escapeHtml(field.value);
    return `<label>${escapeHtml(field.label)}` +
      `<input name="${escapeHtml(field.name)}" ` +
      `type="${field.type === "number" ? "number" : "text"}" ` +
      `value="${value}"></label>`;
  }).join("");
  return `<form class="msg-form" data-form-id="${escapeHtml(form.form_id)}" ` +
    `data-submit-event="${escapeHtml(form.submit_event)}">${fields}` +
    `<button type="submit">Submit</button></form>`;
}

export function renderPlan(plan: PlanWire): string {
  const nodes = plan.nodes.map((node) => {
    const bindings = Object.entries(node.bindings).map(([param, binding]) => {
      const source = binding.edge ?? binding.literal_source ??
        binding.source ?? JSON.stringify(binding.literal);
      const marker = binding.needs_transform ? " ~" : "";
      return `<li>${escapeHtml(param)} &larr; ${escapeHtml(source)}` +
        `${marker}</li>`;
    }).join("");
    return `<li class="plan-node" data-node-id="${escapeHtml(node.id)}">` +
      `<strong>${escapeHtml(node.agent)}</strong>` +
      `<ul>${bindings}</ul></li>`;
  }).join("");
  const edges = plan.edges.map((edge) =>
    `<li>${escapeHtml(edge.from)} &rarr; ${escapeHtml(edge.to)}` +
    `${edge.needs_transform ? " (transform)" : ""}</li>`).join("");
  const controls = plan.state === "PROPOSED"
    ? `<div class="plan-controls" data-plan-id="${escapeHtml(plan.plan_id)}">` +
      `<button data-decision="approve">Approve</button>` +
      `<button data-decision="revise">Revise</button>` +
      `<button data-decision="reject">Reject</button></div>`
    : "";
  return `<section class="msg-plan" data-plan-id="${escapeHtml(plan.plan_id)}">` +
    `<header>${escapeHtml(plan.intent)} plan ` +
    `<code>${escapeHtml(plan.plan_id)}</code> [${escapeHtml(plan.state)}]` +
    `</header><ol class="plan-nodes">${nodes}</ol>` +
    `<ul class="plan-edges">${edges}</ul>${controls}</section>`;
}

export function renderBudgetConfirm(confirm: BudgetConfirm): string {
  const allocated = confirm.allocated[
    confirm.dimension === "latency" ? "latency_ms" : "cost"];
  return `<dialog class="budget-confirm" open ` +
    `data-confirm-id="${escapeHtml(confirm.confirm_id)}">` +
    `<p>Budget ${escapeHtml(confirm.dimension)} would exceed its allocation ` +
    `(${escapeHtml(allocated)}). Continue?</p>` +
    `<button data-decision="approve">Approve overage</button>` +
    `<button data-decision="deny">Deny</button></dialog>`;
}

export function renderList(payload: Record<string, unknown>): string {
  const items = Array.isArray(payload.items) ? payload.items : [];
  const rendered = items.map((item) => {
    if (isRecord(item)) {
      const line = Object.entries(item)
        .map(([key, value]) => `${escapeHtml(key)}: ${escapeHtml(value)}`)
        .join(", ");
      return `<li>${line}</li>`;
    }
    return `<li>${escapeHtml(item)}</li>`;
  }).join("");
  return `<div class="msg-list"><p>${escapeHtml(payload.text ?? "")}</p>` +
    `<ol>${rendered}</ol></div>`;
}

export function renderRecord(payload: unknown): string {
  return `<pre class="msg-record">${escapeHtml(
    JSON.stringify(payload, null, 2))}</pre>`;
}

const RENDERERS: Record<PayloadKind, (record: TranscriptRecord) => string> = {
  "text": (record) => renderText(record.payload),
  "table": (record) => renderTable(record.payload as TablePayload),
  "form": (record) => renderForm(record.payload as FormSpec),
  "plan": (record) => renderPlan(record.payload as PlanWire),
  "budget-confirm": (record) =>
    renderBudgetConfirm(record.payload as BudgetConfirm),
  "list": (record) =>
    renderList(record.payload as Record<string, unknown>),
  "record": (record) => renderRecord(record.payload),
};

export function renderMessage(record: TranscriptRecord): string {
  const body = RENDERERS[payloadKind(record)](record);
  const tags = record.tags.map((tag) =>
    `<span class="tag">${escapeHtml(tag)}</span>`).join("");
  return `<article class="message" data-stream="${escapeHtml(record.stream)}" ` +
    `data-seq="${record.seq}"><span class="producer">` +
    `${escapeHtml(record.producer)}</span>${tags}${body}</article>`;
}
