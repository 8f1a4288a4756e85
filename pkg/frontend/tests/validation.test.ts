import { describe, expect, it } from "vitest";

import {
  CHALLENGE_PROMPTS,
  currentStep,
  emptyWizard,
  fieldEnabled,
  statementsSubmittable,
  submittable,
  validateMedian,
  validateRange,
  validateSpread,
  validateStatements,
  validateWizard,
} from "../src/validation.js";

describe("wizard step order", () => {
  it("starts at the plausible range", () => {
    const w = emptyWizard();
    expect(currentStep(w)).toBe("range");
    expect(fieldEnabled(w, "median")).toBe(false);
    expect(fieldEnabled(w, "spread")).toBe(false);
  });

  it("median unlocks only after a valid range", () => {
    const w = { ...emptyWizard(), rangeLow: 0, rangeHigh: 0.7 };
    expect(fieldEnabled(w, "median")).toBe(true);
    expect(fieldEnabled(w, "spread")).toBe(false);
  });

  it("median-first attempt stays blocked until the range is entered", () => {
    const w = { ...emptyWizard(), median: 0.3 };
    expect(fieldEnabled(w, "median")).toBe(false);
    expect(submittable(w)).toBe(false);
  });

  it("tertiles unlock after range and median", () => {
    const w = { ...emptyWizard(), rangeLow: 0, rangeHigh: 0.7, median: 0.3 };
    expect(fieldEnabled(w, "spread")).toBe(true);
  });

  it("has a challenge prompt for every step", () => {
    for (const step of ["range", "median", "spread"] as const) {
      expect(CHALLENGE_PROMPTS[step].length).toBeGreaterThan(20);
    }
  });
});

describe("wizard invariants", () => {
  it("rejects an inverted range", () => {
    const w = { ...emptyWizard(), rangeLow: 0.7, rangeHigh: 0.2 };
    expect(validateRange(w).length).toBe(1);
  });

  it("rejects a median outside the range", () => {
    const w = { ...emptyWizard(), rangeLow: 0, rangeHigh: 0.7, median: 0.7 };
    expect(validateMedian(w)[0]?.message).toMatch(/strictly inside/);
  });

  it("rejects a tertile outside the plausible range", () => {
    const w = {
      ...emptyWizard(),
      rangeLow: 0,
      rangeHigh: 0.7,
      median: 0.3,
      spreadLow: -0.1,
      spreadHigh: 0.4,
    };
    const errors = validateSpread(w);
    expect(errors.some((e) => e.field === "spreadLow")).toBe(true);
  });

  it("rejects tertiles that do not straddle the median", () => {
    const w = {
      ...emptyWizard(),
      rangeLow: 0,
      rangeHigh: 0.7,
      median: 0.3,
      spreadLow: 0.35,
      spreadHigh: 0.5,
    };
    expect(validateSpread(w).some((e) => e.message.includes("below the median"))).toBe(true);
  });

  it("accepts and submits a fully valid entry", () => {
    const w = {
      ...emptyWizard(),
      rangeLow: 0,
      rangeHigh: 0.7,
      median: 0.3,
      spreadLow: 0.22,
      spreadHigh: 0.39,
    };
    expect(validateWizard(w)).toEqual([]);
    expect(submittable(w)).toBe(true);
  });

  it("quartile labels flow through messages", () => {
    const w = {
      ...emptyWizard("quartiles"),
      rangeLow: 0,
      rangeHigh: 1,
      median: 0.5,
      spreadLow: 0.6,
      spreadHigh: 0.8,
    };
    expect(validateSpread(w)[0]?.message).toMatch(/quartile/);
  });
});

describe("group probability statements", () => {
  it("requires at least two complete rows", () => {
    expect(statementsSubmittable([{ value: 0.25, cumProb: 0.3 }])).toBe(false);
  });

  it("accepts the workshop statements", () => {
    const rows = [
      { value: 0.25, cumProb: 0.3 },
      { value: 0.35, cumProb: 0.5 },
      { value: 0.4, cumProb: 0.7 },
    ];
    expect(validateStatements(rows)).toEqual([]);
    expect(statementsSubmittable(rows)).toBe(true);
  });

  it("flags non-monotone probabilities with the offending pair", () => {
    const rows = [
      { value: 0.25, cumProb: 0.6 },
      { value: 0.35, cumProb: 0.5 },
    ];
    const errors = validateStatements(rows);
    expect(errors[0]?.message).toMatch(/0\.25.*0\.35/s);
  });

  it("flags probabilities outside (0, 1)", () => {
    const rows = [
      { value: 0.25, cumProb: 0 },
      { value: 0.35, cumProb: 0.5 },
    ];
    expect(validateStatements(rows).length).toBeGreaterThan(0);
  });

  it("ignores incomplete rows", () => {
    const rows = [
      { value: 0.25, cumProb: 0.3 },
      { value: null, cumProb: null },
      { value: 0.4, cumProb: 0.7 },
    ];
    expect(validateStatements(rows)).toEqual([]);
  });
});
