/**
 * Secondary acceptance: the scripted workshop walkthrough runs against a
 * live server (spawned here), and the committed session export contains
 * exactly one copula event and the published beta anchor parameters.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { runWalkthrough } from "../src/walkthrough.js";
import { asNumber } from "../src/types.js";

const PORT = 8650 + Math.floor(Math.random() * 200);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;

async function serverUp(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const res = await fetch(`${BASE}/sessions/__probe__`);
      if (res.status === 404) return; // structured not-found means the app is up
    } catch {
      // not listening yet
    }
    if (Date.now() > deadline) throw new Error("server did not come up");
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
}

beforeAll(async () => {
  const dataDir = mkdtempSync(join(tmpdir(), "elicit-walkthrough-"));
  server = spawn(
    "elicit",
    ["--data-dir", dataDir, "serve", "--port", String(PORT)],
    { stdio: "ignore" },
  );
  await serverUp();
}, 40_000);

afterAll(() => {
  server?.kill();
});

describe("scripted workshop walkthrough", () => {
  it("completes and exports one copula event with the beta anchor", async () => {
    const result = await runWalkthrough(BASE);

    // probability-method consensus lands on the published beta anchor
    const [a, b] = result.betaParams;
    expect(Math.abs(a - 2.81)).toBeLessThanOrEqual(0.05);
    expect(Math.abs(b - 3.05)).toBeLessThanOrEqual(0.05);

    // exploration at 0.5 / 0.7 / 0.8 happened, previews only
    expect(result.exploredSummaries.map((e) => e.concordance)).toEqual([0.5, 0.7, 0.8]);
    expect(result.exploreEventDelta).toBe(0);
    for (const summary of result.exploredSummaries) {
      expect(Math.abs(summary.empirical - summary.concordance)).toBeLessThanOrEqual(0.03);
      expect(summary.seed).toBeGreaterThan(0);
    }

    // exactly one copula event committed, at 0.7
    expect(result.copulaEventCount).toBe(1);
    expect(result.report.copula).not.toBeNull();
    expect(asNumber(result.report.copula!.judgements[0]!.probability)).toBeCloseTo(0.7, 12);

    // the export carries the anchor parameters too
    const exported = result.report.quantities.find((q) => q.qoi.id === "exac");
    const [ea, eb] = (exported?.consensus?.distribution.params ?? []).map(asNumber);
    expect(Math.abs((ea ?? 0) - 2.81)).toBeLessThanOrEqual(0.05);
    expect(Math.abs((eb ?? 0) - 3.05)).toBeLessThanOrEqual(0.05);
  }, 120_000);

  it("session stages advanced through the SHELF order", async () => {
    const result = await runWalkthrough(BASE);
    expect(result.finalSession.stages["exac"]).toBe("group");
    const types = result.finalSession.events.map((e) => e.type);
    const reveal = types.indexOf("revealed");
    const group = types.indexOf("group_judgement_set");
    const consensus = types.indexOf("consensus_fitted");
    expect(reveal).toBeGreaterThan(-1);
    expect(group).toBeGreaterThan(reveal);
    expect(consensus).toBeGreaterThan(group);
  }, 120_000);
});
