/** Single-page wiring: one active session per tab, fed by the event stream. */

import { ApiError, SessionApi, type MetricsReport, type TagRules, type TagSelection } from "./api.js";
import { renderHardwareLink, renderMetrics, renderStatusBadge, renderStepsTable, renderTagEditor, type TagRowState } from "./render.js";
import { renderTranscript } from "./render.js";
import { parseFinalSteps } from "./steps.js";
import { streamEvents } from "./sse.js";
import { emptySelection, firstIncompleteStep, type StepTagContext } from "./tagRules.js";
import { applyEvent, hardwareReady, initialState, taggingEnabled, type ViewState } from "./viewModel.js";

const BASE_URL = (window as unknown as { PLATEBENCH_URL?: string }).PLATEBENCH_URL ?? "";

const api = new SessionApi(BASE_URL);
let state: ViewState = initialState();
let rules: TagRules | null = null;
let selections: TagSelection[] = [];
let metrics: MetricsReport | null = null;
let streamAbort: AbortController | null = null;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function tagRows(): TagRowState[] {
  const rows = parseFinalSteps(state.finalSteps ?? "");
  while (selections.length < rows.length) selections.push(emptySelection());
  return rows.map((row, i) => {
    const suggested = state.tags?.[String(row.index)];
    const context: StepTagContext = { kind: row.kind };
    return { row, context, selection: selections[i] ?? suggested ?? emptySelection() };
  });
}

function redraw(): void {
  el("status").innerHTML = renderStatusBadge(state);
  el("chat").innerHTML = renderTranscript(state);
  const rows = parseFinalSteps(state.finalSteps ?? "");
  el("steps").innerHTML = renderStepsTable(rows);
  el("tags").innerHTML = rules
    ? renderTagEditor(rules, tagRows(), taggingEnabled(state))
    : `<p class="empty">loading tag vocabulary…</p>`;
  el("hardware").innerHTML = state.sessionId
    ? renderHardwareLink(api.hardwareUrl(state.sessionId), hardwareReady(state))
    : "";
  el("metrics").innerHTML = renderMetrics(metrics);
  wireChat();
  wireTags();
}

function wireChat(): void {
  const form = document.getElementById("chat-form") as HTMLFormElement | null;
  form?.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const input = document.getElementById("chat-input") as HTMLInputElement;
    const content = input.value.trim();
    if (!content || !state.sessionId) return;
    input.value = "";
    api.postMessage(state.sessionId, content).catch(showError);
  });
}

function wireTags(): void {
  const container = el("tags");
  container.querySelectorAll<HTMLSelectElement>("select.core").forEach((select) => {
    select.addEventListener("change", () => {
      const i = Number(select.dataset["step"]);
      const current = selections[i] ?? emptySelection();
      selections[i] = { ...current, core: select.value || null, tip_size: null };
      redraw();
    });
  });
  container.querySelectorAll<HTMLSelectElement>("select.tip").forEach((select) => {
    select.addEventListener("change", () => {
      const i = Number(select.dataset["step"]);
      const current = selections[i] ?? emptySelection();
      selections[i] = { ...current, tip_size: select.value || null };
      redraw();
    });
  });
  container.querySelectorAll<HTMLInputElement>("input.optional").forEach((box) => {
    box.addEventListener("change", () => {
      const i = Number(box.dataset["step"]);
      const current = selections[i] ?? emptySelection();
      const optional = new Set(current.optional);
      if (box.checked) optional.add(box.value);
      else optional.delete(box.value);
      selections[i] = { ...current, optional: [...optional] };
      redraw();
    });
  });
  document.getElementById("submit-tags")?.addEventListener("click", () => {
    if (!rules || !state.sessionId) return;
    const rows = tagRows();
    const incomplete = firstIncompleteStep(
      rows.map((r) => ({ context: r.context, selection: r.selection })),
      rules,
    );
    if (incomplete !== null) {
      el("tag-feedback").textContent = `step ${incomplete + 1} needs attention before submitting`;
      return;
    }
    const payload: Record<string, TagSelection> = {};
    rows.forEach((r, i) => {
      payload[String(i)] = r.selection;
    });
    api.postTags(state.sessionId, payload).catch(showError);
  });
}

function showError(error: unknown): void {
  const box = el("errors");
  box.textContent = error instanceof ApiError ? `${error.status}: ${error.detail}` : String(error);
}

async function followEvents(sessionId: string): Promise<void> {
  streamAbort?.abort();
  streamAbort = new AbortController();
  try {
    for await (const event of streamEvents(BASE_URL, sessionId, {
      lastEventId: state.lastEventId,
      signal: streamAbort.signal,
      retries: 20,
      retryDelayMs: 500,
    })) {
      state = applyEvent(state, event);
      redraw();
      if (state.status === "done" && state.sessionId && state.experiment) {
        metrics = await api.getMetrics(state.sessionId).catch(() => null);
        redraw();
      }
    }
  } catch (error) {
    showError(error);
  }
}

async function start(): Promise<void> {
  rules = await api.getTagRules();
  const experiments = await api.getExperiments();
  const picker = el("experiment-picker") as HTMLSelectElement;
  picker.innerHTML = experiments
    .map((e) => `<option value="${e.id}">${e.id}: ${e.description.slice(0, 80)}…</option>`)
    .join("");
  el("new-session").addEventListener("click", async () => {
    state = initialState();
    selections = [];
    metrics = null;
    const snapshot = await api
      .createSession({ experiment: picker.value, mode: "interactive", client: "stub" })
      .catch((e) => {
        showError(e);
        return null;
      });
    if (!snapshot) return;
    void followEvents(snapshot.session_id);
  });
  redraw();
}

document.addEventListener("DOMContentLoaded", () => {
  void start();
});
