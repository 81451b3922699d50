// DOM wiring for the single-page client.  All invariants live server-side;
// this file only renders the event-derived view and gates inputs.

import { ApiClient } from "./api.js";
import {
  CONFIRM_UTTERANCE,
  biasUtterance,
  replaceUtterance,
} from "./protocol.js";
import {
  SessionView,
  applyEvent,
  canConfirm,
  canEdit,
  emptyView,
  isIdentityEdit,
  viewFromEnvelope,
} from "./state.js";
import type { EventStreamHandle } from "./api.js";

const api = new ApiClient("");

let view: SessionView = emptyView();
let stream: EventStreamHandle | null = null;
let editing: number | null = null; // ordinal with an open editor
let notice = "";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setView(next: SessionView): void {
  view = next;
  if (view.needsResync) {
    void resync();
    return;
  }
  render();
}

async function resync(): Promise<void> {
  if (!view.sessionId) return;
  const envelope = await api.getEnvelope(view.sessionId);
  const fresh = viewFromEnvelope(envelope);
  view = fresh;
  connectStream();
  render();
}

function connectStream(): void {
  stream?.close();
  stream = api.streamEvents(view.sessionId, view.lastSeq + 1, (event) => {
    setView(applyEvent(view, event));
  }, {
    onError: () => {
      // dropped stream: resynchronize from the canonical session state
      setTimeout(() => void resync(), 500);
    },
  });
}

async function startSession(query: string): Promise<void> {
  const created = await api.createSession(query);
  view = { ...emptyView(), sessionId: created.session_id };
  await resync();
}

async function send(text: string): Promise<void> {
  if (!view.sessionId) return;
  notice = "";
  try {
    await api.sendUtterance(view.sessionId, text);
  } catch (error) {
    notice = String(error instanceof Error ? error.message : error);
  }
  await resync();
}

// -- rendering ----------------------------------------------------------------

const STATUS_CLASS: Record<string, string> = {
  Fresh: "badge fresh",
  Stale: "badge stale",
  UserEdited: "badge edited",
};

function render(): void {
  el("session-setup").style.display = view.sessionId ? "none" : "block";
  el("session-main").style.display = view.sessionId ? "block" : "none";
  if (!view.sessionId) return;

  el("query-banner").textContent = view.query;
  const banner = el("state-banner");
  banner.textContent = view.state;
  banner.className = `state ${view.state.toLowerCase()}`;

  renderWarnings();
  renderChain();
  renderDisclosures();
  renderFinal();

  const noticeBox = el("notice");
  noticeBox.textContent = notice;
  noticeBox.style.display = notice ? "block" : "none";

  const confirmButton = el<HTMLButtonElement>("confirm-button");
  confirmButton.disabled = !canConfirm(view);
  confirmButton.title = canConfirm(view)
    ? "Generate the final answer from this chain"
    : "Available once every step is reviewed and none is stale";

  const utteranceInput = el<HTMLInputElement>("utterance-input");
  const utteranceSend = el<HTMLButtonElement>("utterance-send");
  const busy = view.state === "Regenerating" || view.state === "Finalizing";
  utteranceInput.disabled = !canEdit(view);
  utteranceSend.disabled = !canEdit(view);
  utteranceSend.title = busy ? "Queued until regeneration finishes" : "Send";
}

function renderWarnings(): void {
  const box = el("warnings");
  box.innerHTML = "";
  box.style.display = view.warnings.length ? "block" : "none";
  for (const warning of view.warnings) {
    const line = document.createElement("div");
    line.className = "warning";
    line.textContent = warning;
    box.appendChild(line);
  }
}

function renderChain(): void {
  const container = el("chain");
  container.innerHTML = "";
  for (const step of view.steps) {
    const card = document.createElement("article");
    card.className = "step-card";

    const header = document.createElement("header");
    const label = document.createElement("span");
    label.className = "ordinal";
    label.textContent = `[Step ${step.ordinal}]`;
    const status = document.createElement("span");
    status.className = STATUS_CLASS[step.status] ?? "badge";
    status.textContent = step.status;
    const provenance = document.createElement("span");
    provenance.className = "badge provenance";
    provenance.textContent = step.provenance === "UserAuthored" ? "user" : "model";
    header.append(label, status, provenance);
    card.appendChild(header);

    if (editing === step.ordinal) {
      const editor = document.createElement("textarea");
      editor.value = step.text;
      editor.rows = Math.max(3, step.text.split("\n").length + 1);
      const save = document.createElement("button");
      save.textContent = "Save";
      save.onclick = () => {
        const text = editor.value;
        editing = null;
        if (isIdentityEdit(view, step.ordinal, text)) {
          notice = `Step ${step.ordinal} is unchanged; nothing was sent.`;
          render();
          return;
        }
        void send(replaceUtterance(step.ordinal, text));
      };
      const cancel = document.createElement("button");
      cancel.textContent = "Cancel";
      cancel.className = "secondary";
      cancel.onclick = () => {
        editing = null;
        render();
      };
      card.append(editor, save, cancel);
    } else {
      const body = document.createElement("pre");
      body.className = "step-text";
      body.textContent = step.text; // no client-side reformatting
      card.appendChild(body);
      const actions = document.createElement("div");
      actions.className = "actions";
      const edit = document.createElement("button");
      edit.textContent = "Edit";
      edit.disabled = !canEdit(view);
      edit.title = canEdit(view) ? "Replace this step" : "Queued until regeneration finishes";
      edit.onclick = () => {
        editing = step.ordinal;
        render();
      };
      const bias = document.createElement("button");
      bias.textContent = "Bias check";
      bias.className = "secondary";
      bias.disabled = !canEdit(view);
      bias.onclick = () => void send(biasUtterance(step.ordinal));
      actions.append(edit, bias);
      card.appendChild(actions);
    }
    container.appendChild(card);
  }
}

function renderDisclosures(): void {
  const list = el("disclosures");
  list.innerHTML = "";
  for (const rendered of view.disclosures) {
    const item = document.createElement("pre");
    item.className = "disclosure";
    item.textContent = rendered;
    list.appendChild(item);
  }
  el("disclosure-count").textContent = String(view.disclosures.length);
}

function renderFinal(): void {
  const panel = el("final-panel");
  if (!view.finalAnswer) {
    panel.style.display = "none";
    return;
  }
  panel.style.display = "block";
  el("final-text").textContent = view.finalAnswer;
}

async function showExport(format: "markdown" | "json"): Promise<void> {
  const document_ = await api.exportDocument(view.sessionId, format);
  el<HTMLPreElement>("export-view").textContent = document_;
  el("export-panel").style.display = "block";
}

export function main(): void {
  el<HTMLFormElement>("query-form").onsubmit = (submitEvent) => {
    submitEvent.preventDefault();
    const input = el<HTMLInputElement>("query-input");
    if (input.value.trim()) void startSession(input.value.trim());
  };
  el<HTMLFormElement>("utterance-form").onsubmit = (submitEvent) => {
    submitEvent.preventDefault();
    const input = el<HTMLInputElement>("utterance-input");
    if (input.value.trim()) {
      void send(input.value.trim());
      input.value = "";
    }
  };
  el<HTMLButtonElement>("confirm-button").onclick = () => void send(CONFIRM_UTTERANCE);
  el<HTMLButtonElement>("export-markdown").onclick = () => void showExport("markdown");
  el<HTMLButtonElement>("export-json").onclick = () => void showExport("json");
  render();
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  main();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", main);
}
