/** Client-side tag validity hints, driven entirely by the rules document the
 * service exports at /tag-rules. The server re-validates every submission;
 * these helpers exist so the editor can offer only selectable choices and
 * explain blocked ones before the round trip. */

import type { TagRules, TagSelection } from "./api.js";
import type { StepRow } from "./steps.js";

export interface StepTagContext {
  kind: StepRow["kind"];
  /** solid | liquid, when the service reported it via suggested tags */
  state?: "solid" | "liquid";
}

export function coreOptions(rules: TagRules, context: StepTagContext): string[] {
  if (context.kind !== "Add") return [];
  if (context.state) return rules.core_by_state[context.state] ?? [];
  // unknown state: every core the vocabulary knows
  return [...new Set(Object.values(rules.core_by_state).flat())];
}

export function tipRequired(rules: TagRules, core: string | null): boolean {
  return core !== null && rules.tip_required_for.includes(core);
}

export function optionalOptions(rules: TagRules, context: StepTagContext, core: string | null): string[] {
  if (context.kind === "Transfer") return rules.transfer_tags;
  if (context.kind !== "Add" || !core) return [];
  return rules.optional_by_core[core] ?? [];
}

export interface TagProblem {
  field: "core" | "tip_size" | "optional";
  message: string;
}

/** Mirror of the server-side rules for inline hints; never a substitute for
 * the server's verdict. */
export function validateSelection(
  rules: TagRules,
  context: StepTagContext,
  selection: TagSelection,
): TagProblem[] {
  const problems: TagProblem[] = [];
  if (context.kind === "Add") {
    const cores = coreOptions(rules, context);
    if (!selection.core) {
      problems.push({ field: "core", message: "pick a dispense method" });
    } else if (!cores.includes(selection.core)) {
      problems.push({
        field: "core",
        message: `${selection.core} is not valid here (allowed: ${cores.join(", ")})`,
      });
    }
    if (tipRequired(rules, selection.core)) {
      if (!selection.tip_size) {
        problems.push({ field: "tip_size", message: "PDT needs a tip size" });
      } else if (!rules.tip_sizes.includes(selection.tip_size)) {
        problems.push({ field: "tip_size", message: `unknown tip ${selection.tip_size}` });
      }
    } else if (selection.tip_size) {
      problems.push({ field: "tip_size", message: "tip size applies only to PDT" });
    }
    const allowed = new Set(optionalOptions(rules, context, selection.core));
    for (const tag of selection.optional) {
      if (!allowed.has(tag)) {
        problems.push({ field: "optional", message: `${tag} is not valid for ${selection.core}` });
      }
    }
  } else {
    if (selection.core || selection.tip_size) {
      problems.push({ field: "core", message: "only additions carry dispense tags" });
    }
    const allowed = new Set(optionalOptions(rules, context, null));
    for (const tag of selection.optional) {
      if (!allowed.has(tag)) {
        problems.push({ field: "optional", message: `${tag} is not valid here` });
      }
    }
  }
  return problems;
}

export function emptySelection(): TagSelection {
  return { core: null, tip_size: null, optional: [] };
}

/** Untagged Add steps block submission; the first offender is reported. */
export function firstIncompleteStep(
  rows: { context: StepTagContext; selection: TagSelection }[],
  rules: TagRules,
): number | null {
  for (let i = 0; i < rows.length; i++) {
    const row = rows[i]!;
    if (validateSelection(rules, row.context, row.selection).length > 0) return i;
  }
  return null;
}
