/**
 * Scripted workshop walkthrough, driven through the console's state layer.
 *
 * Five experts enter tertile judgements for the exacerbation quantity, the
 * facilitator reveals and runs the probability method to a beta consensus,
 * the FEV1 quantity gets a quick consensus, and the joint distribution is
 * explored at concordances 0.5 / 0.7 / 0.8 before committing 0.7.  Returns
 * everything the acceptance check needs to assert on.
 */

import { ApiClient } from "./api.js";
import { ConsoleState } from "./state.js";
import type { QoiWire, ReportView, SessionView } from "./types.js";
import { asNumber } from "./types.js";

export const WORKSHOP_QOIS: QoiWire[] = [
  {
    id: "exac",
    label: "relative reduction in exacerbation rate",
    scale: "percent-reduction",
    support: { lower: 0.0, upper: 0.7 },
    definition: "average relative reduction vs placebo over eligible patients",
  },
  {
    id: "fev1",
    label: "FEV1 difference vs placebo (mL)",
    scale: "difference",
    support: { lower: "-inf", upper: "inf" },
    definition: "",
  },
];

export interface WalkthroughResult {
  sessionId: string;
  betaParams: [number, number];
  exploreEventDelta: number;
  exploredSummaries: { concordance: number; empirical: number; seed: number }[];
  copulaEventCount: number;
  report: ReportView;
  finalSession: SessionView;
}

const EXPERT_MEDIANS: Record<string, number> = {
  A: 0.28,
  B: 0.31,
  C: 0.33,
  D: 0.35,
  E: 0.3,
};

export async function runWalkthrough(baseUrl: string): Promise<WalkthroughResult> {
  const api = new ApiClient(baseUrl);
  const state = new ConsoleState(api);

  await state.createSession(WORKSHOP_QOIS, 5);
  const session = state.session!;
  const sid = session.id;

  // individual judgements through the wizard (range -> median -> tertiles)
  state.setActiveQoi("exac");
  for (const expert of session.experts) {
    const median = EXPERT_MEDIANS[expert] ?? 0.3;
    state.editJudgement(expert, { rangeLow: 0.0, rangeHigh: 0.7 });
    state.editJudgement(expert, { median });
    state.editJudgement(expert, {
      spreadLow: median - 0.07,
      spreadHigh: median + 0.08,
    });
    await state.submitJudgement(expert);
  }

  // reveal, then the probability method with a live refit before committing
  await state.reveal();
  state.pendingStatements = [
    { value: 0.25, cumProb: 0.3 },
    { value: 0.35, cumProb: 0.5 },
    { value: 0.4, cumProb: 0.7 },
  ];
  await state.refreshFitPreview();
  const previewBest = state.fitPreview?.fits[0];
  if (!previewBest || previewBest.family !== "beta") {
    throw new Error("expected a beta family preview for the bounded quantity");
  }
  await state.commitConsensus("beta");

  // quick consensus for FEV1 so the pair has both marginals
  state.setActiveQoi("fev1");
  state.editJudgement("A", { rangeLow: -100, rangeHigh: 400 });
  state.editJudgement("A", { median: 90 });
  state.editJudgement("A", { spreadLow: 40, spreadHigh: 140 });
  await state.submitJudgement("A");
  await state.reveal();
  state.pendingStatements = [
    { value: 40, cumProb: 1 / 3 },
    { value: 90, cumProb: 0.5 },
    { value: 140, cumProb: 2 / 3 },
  ];
  await state.commitConsensus("normal");

  // concordance what-ifs: previews only, the log must not move
  const eventsBefore = (await api.getSession(sid)).n_events;
  const explored: WalkthroughResult["exploredSummaries"] = [];
  for (const c of [0.5, 0.7, 0.8]) {
    const preview = await state.exploreConcordance(["exac", "fev1"], c);
    const summary = preview.view.pair_summaries["exac-fev1"];
    if (!summary) throw new Error("missing pair summary in explore response");
    explored.push({
      concordance: c,
      empirical: summary.empirical_concordance,
      seed: preview.seed,
    });
  }
  const eventsAfterExplore = (await api.getSession(sid)).n_events;

  // the agreed value is committed as a separate, explicit action
  await state.commitConcordance(["exac", "fev1"], 0.7);

  const finalSession = await api.getSession(sid);
  const copulaEvents = finalSession.events.filter((e) => e.type === "copula_committed");
  const report = await api.exportReport(sid);
  const exac = report.quantities.find((q) => q.qoi.id === "exac");
  const params = exac?.consensus?.distribution.params ?? [];

  return {
    sessionId: sid,
    betaParams: [asNumber(params[0]), asNumber(params[1])],
    exploreEventDelta: eventsAfterExplore - eventsBefore,
    exploredSummaries: explored,
    copulaEventCount: copulaEvents.length,
    report,
    finalSession,
  };
}
