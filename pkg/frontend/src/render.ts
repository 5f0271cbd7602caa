/** HTML renderers for the four panels. Pure string templates over the view
 * state so they are trivially testable; main.ts owns DOM wiring. */

import type { MetricsReport, TagRules, TagSelection } from "./api.js";
import type { StepRow } from "./steps.js";
import type { StepTagContext } from "./tagRules.js";
import { coreOptions, optionalOptions, tipRequired, validateSelection } from "./tagRules.js";
import type { ViewState } from "./viewModel.js";
import { inputEnabled, visibleMessages } from "./viewModel.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderStatusBadge(state: ViewState): string {
  const label = state.error ? `${state.status}: ${state.error}` : state.status;
  return `<span class="badge badge-${esc(state.status)}">${esc(label)}</span>`;
}

export function renderTranscript(state: ViewState, showInternal = false): string {
  const items = visibleMessages(state, showInternal)
    .map((m) => {
      const who = m.agent ? `${m.role} · ${m.agent}` : m.role;
      return `<li class="msg msg-${esc(m.role)}"><span class="who">${esc(who)}</span><pre>${esc(
        m.content,
      )}</pre></li>`;
    })
    .join("");
  const disabled = inputEnabled(state) ? "" : "disabled";
  const hint = inputEnabled(state)
    ? "the agent is waiting for your reply"
    : `input disabled while ${esc(state.status)}`;
  return `
    <ol class="transcript" data-count="${visibleMessages(state, showInternal).length}">${items}</ol>
    <form id="chat-form">
      <input id="chat-input" type="text" placeholder="${hint}" ${disabled} />
      <button id="chat-send" type="submit" ${disabled}>send</button>
    </form>`;
}

export function renderStepsTable(rows: StepRow[]): string {
  if (rows.length === 0) return `<p class="empty">no final steps yet</p>`;
  const body = rows
    .map((row) => {
      const entries = row.entries
        .map((e) => `<span class="vial"><b>${esc(e.vial)}</b> ${esc(e.value)}</span>`)
        .join(" ");
      return `<tr data-step="${row.index}">
        <td>${row.index + 1}</td>
        <td><span class="kind kind-${row.kind.toLowerCase()}">${row.kind}</span></td>
        <td class="sentence">${esc(row.sentence)}</td>
        <td class="entries">${entries}</td>
      </tr>`;
    })
    .join("");
  return `<table class="steps"><thead>
    <tr><th>#</th><th>action</th><th>step</th><th>per-vial values</th></tr>
  </thead><tbody>${body}</tbody></table>`;
}

export interface TagRowState {
  row: StepRow;
  context: StepTagContext;
  selection: TagSelection;
}

export function renderTagEditor(rules: TagRules, rows: TagRowState[], enabled: boolean): string {
  if (!enabled) return `<p class="empty">tag selection opens once the steps are final</p>`;
  const body = rows
    .map(({ row, context, selection }, i) => {
      if (context.kind !== "Add" && context.kind !== "Transfer") {
        return `<tr data-step="${i}"><td>${i + 1}</td>
          <td class="sentence">${esc(row.sentence)}</td>
          <td colspan="3" class="no-tags">no tags for ${row.kind} steps</td></tr>`;
      }
      const cores = coreOptions(rules, context);
      const coreSelect =
        context.kind === "Add"
          ? `<select class="core" data-step="${i}">
              <option value="">—</option>
              ${cores
                .map(
                  (c) =>
                    `<option value="${esc(c)}" ${selection.core === c ? "selected" : ""}>${esc(c)}</option>`,
                )
                .join("")}
            </select>`
          : `<span class="no-tags">n/a</span>`;
      const tip = tipRequired(rules, selection.core)
        ? `<select class="tip" data-step="${i}">
            <option value="">pick a tip…</option>
            ${rules.tip_sizes
              .map(
                (t) =>
                  `<option value="${esc(t)}" ${selection.tip_size === t ? "selected" : ""}>${esc(t)}</option>`,
              )
              .join("")}
          </select>`
        : `<span class="no-tip">—</span>`;
      const optional = optionalOptions(rules, context, selection.core)
        .map(
          (tag) => `<label><input type="checkbox" class="optional" data-step="${i}"
            value="${esc(tag)}" ${selection.optional.includes(tag) ? "checked" : ""}/>${esc(tag)}</label>`,
        )
        .join(" ");
      const problems = validateSelection(rules, context, selection)
        .map((p) => `<div class="problem">${esc(p.message)}</div>`)
        .join("");
      return `<tr data-step="${i}" class="${problems ? "invalid" : "valid"}">
        <td>${i + 1}</td>
        <td class="sentence">${esc(row.sentence)}</td>
        <td>${coreSelect}</td>
        <td>${tip}</td>
        <td>${optional}${problems}</td>
      </tr>`;
    })
    .join("");
  return `<table class="tags"><thead>
      <tr><th>#</th><th>step</th><th>dispense</th><th>tip</th><th>options</th></tr>
    </thead><tbody>${body}</tbody></table>
    <button id="submit-tags">submit tags</button>
    <div id="tag-feedback"></div>`;
}

export function renderMetrics(report: MetricsReport | null): string {
  if (!report) return `<p class="empty">pick a reference experiment to compare against</p>`;
  const fmt = (v: number | null) => (v === null ? "undefined" : v.toFixed(4));
  const unmatchedGen = report.unmatched_generated
    .map((u) => `<li class="fp">${esc(u.step ?? `step ${u.index + 1}`)}</li>`)
    .join("");
  const unmatchedGt = report.unmatched_ground_truth
    .map((u) => `<li class="fn">${esc(u.step ?? `step ${u.index + 1}`)}</li>`)
    .join("");
  return `<dl class="metrics">
      <dt>precision</dt><dd>${fmt(report.precision)}</dd>
      <dt>recall</dt><dd>${fmt(report.recall)}</dd>
      <dt>F1</dt><dd data-metric="f1">${fmt(report.f1)}</dd>
      <dt>Spearman</dt><dd>${fmt(report.spearman)}</dd>
      <dt>nRMSE</dt><dd data-metric="nrmse">${fmt(report.nrmse)}</dd>
      <dt>matches</dt><dd>TP ${report.true_positives} · FP ${report.false_positives} · FN ${report.false_negatives}</dd>
    </dl>
    ${unmatchedGen ? `<h4>extra generated steps</h4><ul>${unmatchedGen}</ul>` : ""}
    ${unmatchedGt ? `<h4>missing ground-truth steps</h4><ul>${unmatchedGt}</ul>` : ""}`;
}

export function renderHardwareLink(url: string, ready: boolean): string {
  return ready
    ? `<a id="hardware-link" href="${esc(url)}" download="experiment.xml">download hardware file</a>`
    : `<span class="empty">hardware file appears after tagging</span>`;
}
