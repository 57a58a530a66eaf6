import { describe, expect, it } from "vitest";

import type { Foil, Schema } from "../src/api.js";
import {
  applyFoil, applyPrediction, clampTolerance, draftRow, draftValid,
  editField, initialViewState, PanelSequencer, seedDraft,
} from "../src/state.js";

const schema: Schema = {
  columns: [
    { name: "age", kind: "numeric", range: [18, 72] },
    { name: "sex", kind: "categorical", values: ["F", "M"] },
  ],
  target: "income",
  protected: ["sex"],
};

describe("instance draft", () => {
  it("seeds from a row and starts stale", () => {
    const draft = seedDraft(schema, [30, "M"]);
    expect(draftRow(draft)).toEqual([30, "M"]);
    expect(draft.stale).toBe(true);
    expect(draft.prediction).toBeNull();
  });

  it("rejects rows that do not match the schema", () => {
    expect(() => seedDraft(schema, [30])).toThrow();
    expect(() => seedDraft(schema, [30, "X"])).toThrow();
  });

  it("marks the prediction stale on any edit", () => {
    let draft = seedDraft(schema, [30, "M"]);
    draft = applyPrediction(draft, { prediction: "1", digest: "d" }, 1);
    expect(draft.stale).toBe(false);
    draft = editField(draft, "age", "31");
    expect(draft.stale).toBe(true);
    expect(draftRow(draft)).toEqual([31, "M"]);
  });

  it("clamps numeric edits to the schema range", () => {
    let draft = seedDraft(schema, [30, "M"]);
    draft = editField(draft, "age", "500");
    expect(draftRow(draft)[0]).toBe(72);
    draft = editField(draft, "age", "1");
    expect(draftRow(draft)[0]).toBe(18);
    expect(draftValid(draft)).toBe(true);
  });

  it("keeps the old value and records an error on junk input", () => {
    let draft = seedDraft(schema, [30, "M"]);
    draft = editField(draft, "age", "not-a-number");
    expect(draftRow(draft)[0]).toBe(30);
    expect(draftValid(draft)).toBe(false);
  });

  it("rejects categorical values outside the value set", () => {
    let draft = seedDraft(schema, [30, "M"]);
    draft = editField(draft, "sex", "Z");
    expect(draftRow(draft)[1]).toBe("M");
    expect(draftValid(draft)).toBe(false);
  });

  it("applies a foil's changes and goes stale", () => {
    let draft = seedDraft(schema, [30, "M"]);
    draft = applyPrediction(draft, { prediction: "0", digest: "d" }, 1);
    const foil: Foil = {
      changes: [{ feature: "sex", old: "M", new: "F" }],
      class: "1", distance: 0.5, density: 0.1,
    };
    draft = applyFoil(draft, foil);
    expect(draftRow(draft)).toEqual([30, "F"]);
    expect(draft.stale).toBe(true);
    expect(draft.fields[1].dirty).toBe(true);
  });

  it("prediction carries class and density from the payload only", () => {
    let draft = seedDraft(schema, [30, "M"]);
    draft = applyPrediction(draft, {
      prediction: "1", density_score: 0.73, robust: false, digest: "d",
    }, 99);
    expect(draft.prediction).toEqual(
      { klass: "1", density: 0.73, robust: false, at: 99 });
  });
});

describe("panel sequencing", () => {
  it("discards replies from superseded requests", () => {
    const seq = new PanelSequencer();
    const first = seq.begin();
    const second = seq.begin();
    expect(seq.accept(first)).toBe(false);
    expect(seq.accept(second)).toBe(true);
    expect(seq.inFlight).toBe(false);
  });

  it("tracks a single in-flight request", () => {
    const seq = new PanelSequencer();
    expect(seq.inFlight).toBe(false);
    const token = seq.begin();
    expect(seq.inFlight).toBe(true);
    seq.accept(token);
    expect(seq.inFlight).toBe(false);
  });
});

describe("view state", () => {
  it("clamps the tolerance slider to [0, 1]", () => {
    expect(clampTolerance(-0.3)).toBe(0);
    expect(clampTolerance(0.42)).toBe(0.42);
    expect(clampTolerance(7)).toBe(1);
    expect(clampTolerance(Number.NaN)).toBe(0);
  });

  it("starts on the instance tab with a protected feature selected", () => {
    const view = initialViewState(schema);
    expect(view.tab).toBe("instance");
    expect(view.feature).toBe("sex");
    expect(view.tolerance).toBe(0.2);
  });
});
