import { describe, expect, it } from "vitest";

import { parseFinalSteps } from "../src/steps.js";

const BLOCK = `<final-steps>
<step> Add naphthalene (mg) to vials in Plate 1. {A1: 5, A2: 10} </step>
<step> Set Cap in vials in Plate 1. {A1: 1, A2: 1} </step>
<step> Uniform transfer from Plate 1 to Plate 2. (MoveVial, StartVialTimer) {A1: [A1, 5uL], A2: [A2, 5uL]} </step>
</final-steps>`;

describe("parseFinalSteps", () => {
  it("splits steps and classifies their kinds", () => {
    const rows = parseFinalSteps(BLOCK);
    expect(rows).toHaveLength(3);
    expect(rows.map((r) => r.kind)).toEqual(["Add", "Set", "Transfer"]);
    expect(rows[0]!.sentence).toBe("Add naphthalene (mg) to vials in Plate 1.");
  });

  it("extracts per-vial entries, keeping transfer payloads intact", () => {
    const rows = parseFinalSteps(BLOCK);
    expect(rows[0]!.entries).toEqual([
      { vial: "A1", value: "5" },
      { vial: "A2", value: "10" },
    ]);
    expect(rows[2]!.entries).toEqual([
      { vial: "A1", value: "[A1, 5uL]" },
      { vial: "A2", value: "[A2, 5uL]" },
    ]);
  });

  it("returns nothing for text without steps", () => {
    expect(parseFinalSteps("no steps here")).toEqual([]);
  });

  it("is resilient to uppercase tags and missing dictionaries", () => {
    const rows = parseFinalSteps("<STEP> Add water (uL) to vials in Plate 1. </STEP>");
    expect(rows).toHaveLength(1);
    expect(rows[0]!.entries).toEqual([]);
  });
});
