/** Display-side parsing of a final-steps block into table rows.
 *
 * This is presentation only: the server owns the real grammar. The UI just
 * needs each step's sentence and per-vial entries to draw the review table.
 */

export interface StepRow {
  index: number;
  sentence: string;
  kind: "Add" | "Set" | "Transfer" | "Other";
  entries: { vial: string; value: string }[];
}

const STEP_RE = /<step>([\s\S]*?)<\/step>/gi;

export function parseFinalSteps(block: string): StepRow[] {
  const rows: StepRow[] = [];
  let match: RegExpExecArray | null;
  let index = 0;
  while ((match = STEP_RE.exec(block)) !== null) {
    const text = (match[1] ?? "").trim();
    const braceStart = text.indexOf("{");
    const braceEnd = text.lastIndexOf("}");
    const sentence = (braceStart >= 0 ? text.slice(0, braceStart) : text).trim();
    const body = braceStart >= 0 && braceEnd > braceStart ? text.slice(braceStart + 1, braceEnd) : "";
    const entries: { vial: string; value: string }[] = [];
    // split on top-level commas; transfer values contain bracketed commas
    let depth = 0;
    let current = "";
    const flush = () => {
      const entry = current.trim();
      current = "";
      if (!entry) return;
      const colon = entry.indexOf(":");
      if (colon < 0) return;
      entries.push({
        vial: entry.slice(0, colon).trim().toUpperCase(),
        value: entry.slice(colon + 1).trim(),
      });
    };
    for (const ch of body) {
      if (ch === "[") depth += 1;
      if (ch === "]") depth -= 1;
      if (ch === "," && depth === 0) flush();
      else current += ch;
    }
    flush();
    const word = sentence.split(/\s+/)[0]?.toLowerCase() ?? "";
    const kind =
      word === "add"
        ? "Add"
        : word === "set"
          ? "Set"
          : word === "transfer" || word === "uniform" || word === "discrete"
            ? "Transfer"
            : "Other";
    rows.push({ index, sentence, kind, entries });
    index += 1;
  }
  return rows;
}
