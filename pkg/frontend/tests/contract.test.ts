/** Contract tests against a live audit service, covering the UI acceptance
 * criteria: the apply-foil/re-predict loop shows the foil's class, the
 * tolerance slider toggles exactly one highlighted pair across the 0.25-gap
 * fixture, and every displayed number equals its recorded API payload.
 */

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { heatmapCells, flaggedPairCount } from "../src/heatmap.js";
import {
  applyFoil, applyPrediction, draftRow, seedDraft, InstanceDraft,
} from "../src/state.js";

const PORT = 8907;
const BASE = `http://127.0.0.1:${PORT}`;

// group A positive rate 0.5, group B 0.25: demographic-parity gap 0.25,
// memorised exactly by 1-NN so predictions equal labels
const FIXTURE_CSV = [
  "x,grp,y",
  "1,A,1", "2,A,1", "3,A,0", "4,A,0",
  "5,B,1", "6,B,0", "7,B,0", "8,B,0",
].join("\n") + "\n";

let server: ChildProcess;
const api = new ApiClient(BASE);

async function waitForHealth(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    try {
      const health = await api.health();
      if (health.status === "ok") {
        return;
      }
    } catch (err) {
      lastError = err;
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error(`service did not come up: ${String(lastError)}`);
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "fataudit-ui-"));
  const csv = join(dir, "gap.csv");
  writeFileSync(csv, FIXTURE_CSV);
  server = spawn("python3", [
    "-m", "fataudit.cli", "serve", "--data", csv, "--target", "y",
    "--protected", "grp", "--model", "knn:k=1",
    "--host", "127.0.0.1", "--port", String(PORT),
  ], { stdio: "ignore" });
  await waitForHealth();
}, 40000);

afterAll(() => {
  server?.kill();
});

describe("instance what-if loop", () => {
  it("applying a returned foil and re-predicting shows the foil's class", async () => {
    const summary = await api.summary();
    const seed = await api.instance(0);
    let draft: InstanceDraft = seedDraft(summary.schema, seed.row);

    const before = await api.predict(draftRow(draft));
    draft = applyPrediction(draft, before, Date.now());
    expect(draft.prediction?.klass).toBe(before.prediction);

    const response = await api.counterfactuals(draftRow(draft),
                                               { k: 2, max_results: 8 });
    expect(response.counterfactuals.length).toBeGreaterThan(0);
    const foil = response.counterfactuals[0];
    expect(foil.class).not.toBe(before.prediction);

    draft = applyFoil(draft, foil);
    expect(draft.stale).toBe(true);

    const after = await api.predict(draftRow(draft));
    draft = applyPrediction(draft, after, Date.now());
    expect(draft.stale).toBe(false);
    expect(draft.prediction?.klass).toBe(foil.class);
  });

  it("displayed prediction fields come verbatim from the payload", async () => {
    const summary = await api.summary();
    const seed = await api.instance(1);
    let draft = seedDraft(summary.schema, seed.row);
    const payload = await api.predict(draftRow(draft));
    draft = applyPrediction(draft, payload, 7);
    expect(draft.prediction?.klass).toBe(payload.prediction);
    expect(draft.prediction?.density).toBe(payload.density_score ?? null);
    expect(draft.prediction?.robust).toBe(payload.robust ?? null);
  });

  it("draft edits stay schema-valid, so requests cannot carry bad values", async () => {
    const summary = await api.summary();
    const seed = await api.instance(0);
    const draft = seedDraft(summary.schema, seed.row);
    const row = draftRow(draft);
    const echoed = await api.predict(row);  // server-side validation agrees
    expect(echoed.prediction).toBeDefined();
  });
});

describe("disparity heatmap and tolerance slider", () => {
  it("toggles exactly one highlighted pair across the 0.25 gap", async () => {
    const below = await api.fairness("grp", "demographic_parity", 0.2);
    expect(flaggedPairCount(below.matrix)).toBe(1);

    const above = await api.fairness("grp", "demographic_parity", 0.3);
    expect(flaggedPairCount(above.matrix)).toBe(0);
  });

  it("cell values equal the recorded payload, symmetrically", async () => {
    const payload = await api.fairness("grp", "demographic_parity", 0.2);
    const cells = heatmapCells(payload.matrix);
    const groups = payload.matrix.groups;
    for (let i = 0; i < groups.length; i += 1) {
      for (let j = 0; j < groups.length; j += 1) {
        expect(cells[i][j].value).toBe(payload.matrix.values[i][j]);
        expect(cells[i][j].text).toBe(cells[j][i].text);
        expect(cells[i][j].flagged).toBe(payload.matrix.flags[i][j] === 1);
      }
    }
    expect(cells[0][1].value).toBeCloseTo(0.25, 12);
  });

  it("performance endpoint drives the same heatmap path", async () => {
    const payload = await api.performance("grp", "accuracy", 0.2);
    const cells = heatmapCells(payload.matrix);
    expect(cells.length).toBe(payload.matrix.groups.length);
  });
});
