/**
 * Client-side validation for the judgement entry wizard.
 *
 * Mirrors the server's judgement invariants and enforces the SHELF asking
 * order: plausible range first, then the median, then tertiles or quartiles.
 * Server rejections remain authoritative; these checks exist to give inline
 * feedback before a submit is attempted.
 */

export type WizardStep = "range" | "median" | "spread";

export interface WizardState {
  rangeLow: number | null;
  rangeHigh: number | null;
  median: number | null;
  spreadKind: "tertiles" | "quartiles";
  spreadLow: number | null;
  spreadHigh: number | null;
}

export interface FieldError {
  field: string;
  message: string;
}

export const CHALLENGE_PROMPTS: Record<WizardStep, string> = {
  range:
    "Challenge: if a large study estimated the quantity outside this range, " +
    "would you widen the range or distrust the study? If you would widen it, widen it now.",
  median:
    "Challenge: would you genuinely bet even odds on the true value falling on " +
    "either side of this median?",
  spread:
    "Challenge: the three (or four) intervals you just drew should feel equally " +
    "likely. If one feels safer than the others, adjust the points.",
};

export function emptyWizard(spreadKind: "tertiles" | "quartiles" = "tertiles"): WizardState {
  return {
    rangeLow: null,
    rangeHigh: null,
    median: null,
    spreadKind,
    spreadLow: null,
    spreadHigh: null,
  };
}

function entered(v: number | null): v is number {
  return v !== null && Number.isFinite(v);
}

/** The furthest step the facilitator may edit; earlier steps stay editable. */
export function currentStep(state: WizardState): WizardStep {
  if (!entered(state.rangeLow) || !entered(state.rangeHigh)) return "range";
  if (!entered(state.median)) return "median";
  return "spread";
}

/** Order enforcement: a field is enabled only once the preceding steps hold. */
export function fieldEnabled(state: WizardState, field: WizardStep): boolean {
  if (field === "range") return true;
  const rangeOk = validateRange(state).length === 0 && entered(state.rangeLow) && entered(state.rangeHigh);
  if (field === "median") return rangeOk;
  return rangeOk && entered(state.median) && validateMedian(state).length === 0;
}

export function validateRange(state: WizardState): FieldError[] {
  const errors: FieldError[] = [];
  const { rangeLow, rangeHigh } = state;
  if (!entered(rangeLow) || !entered(rangeHigh)) return errors; // incomplete, not invalid
  if (!(rangeLow < rangeHigh)) {
    errors.push({
      field: "rangeHigh",
      message: "The upper plausible bound must exceed the lower bound.",
    });
  }
  return errors;
}

export function validateMedian(state: WizardState): FieldError[] {
  const errors: FieldError[] = [];
  if (!entered(state.median)) return errors;
  if (!entered(state.rangeLow) || !entered(state.rangeHigh)) {
    errors.push({ field: "median", message: "Enter the plausible range first." });
    return errors;
  }
  if (!(state.rangeLow < state.median && state.median < state.rangeHigh)) {
    errors.push({
      field: "median",
      message: "The median must lie strictly inside the plausible range.",
    });
  }
  return errors;
}

export function validateSpread(state: WizardState): FieldError[] {
  const errors: FieldError[] = [];
  const { spreadLow, spreadHigh, spreadKind } = state;
  if (!entered(spreadLow) && !entered(spreadHigh)) return errors;
  if (!entered(state.median)) {
    errors.push({ field: "spreadLow", message: "Enter the median first." });
    return errors;
  }
  const name = spreadKind === "tertiles" ? "tertile" : "quartile";
  if (entered(spreadLow)) {
    if (!entered(state.rangeLow) || !(state.rangeLow < spreadLow)) {
      errors.push({
        field: "spreadLow",
        message: `The lower ${name} must lie strictly inside the plausible range.`,
      });
    } else if (!(spreadLow < state.median)) {
      errors.push({
        field: "spreadLow",
        message: `The lower ${name} must fall below the median.`,
      });
    }
  }
  if (entered(spreadHigh)) {
    if (!entered(state.rangeHigh) || !(spreadHigh < state.rangeHigh)) {
      errors.push({
        field: "spreadHigh",
        message: `The upper ${name} must lie strictly inside the plausible range.`,
      });
    } else if (!(state.median < spreadHigh)) {
      errors.push({
        field: "spreadHigh",
        message: `The upper ${name} must fall above the median.`,
      });
    }
  }
  return errors;
}

export function validateWizard(state: WizardState): FieldError[] {
  return [...validateRange(state), ...validateMedian(state), ...validateSpread(state)];
}

/** Ready to submit: every step entered and nothing invalid. */
export function submittable(state: WizardState): boolean {
  return (
    entered(state.rangeLow) &&
    entered(state.rangeHigh) &&
    entered(state.median) &&
    entered(state.spreadLow) &&
    entered(state.spreadHigh) &&
    validateWizard(state).length === 0
  );
}

export interface ProbabilityRow {
  value: number | null;
  cumProb: number | null;
}

/**
 * Validation for the group probability-method panel: statements must be
 * strictly increasing in both value and probability, probabilities in (0,1).
 */
export function validateStatements(rows: ProbabilityRow[]): FieldError[] {
  const errors: FieldError[] = [];
  const complete = rows.filter((r) => entered(r.value) && entered(r.cumProb)) as {
    value: number;
    cumProb: number;
  }[];
  complete.forEach((row, i) => {
    if (!(row.cumProb > 0 && row.cumProb < 1)) {
      errors.push({
        field: `row${i}.cumProb`,
        message: "Cumulative probabilities must lie strictly between 0 and 1.",
      });
    }
  });
  const sorted = [...complete].sort((a, b) => a.value - b.value);
  for (let i = 1; i < sorted.length; i++) {
    const prev = sorted[i - 1]!;
    const curr = sorted[i]!;
    if (!(prev.value < curr.value && prev.cumProb < curr.cumProb)) {
      errors.push({
        field: "statements",
        message:
          `Statements must increase together: P(X < ${prev.value}) = ${prev.cumProb} ` +
          `conflicts with P(X < ${curr.value}) = ${curr.cumProb}.`,
      });
    }
  }
  return errors;
}

export function statementsSubmittable(rows: ProbabilityRow[]): boolean {
  const complete = rows.filter((r) => entered(r.value) && entered(r.cumProb));
  return complete.length >= 2 && validateStatements(rows).length === 0;
}
