/**
 * Wire types for the session HTTP API.
 *
 * Numbers inside derived state and exports arrive as decimal strings (the
 * session-file convention); response payloads from computation endpoints use
 * plain JSON numbers.  `asNumber` bridges the two.
 */

export type Scale = "raw" | "percent-reduction" | "difference";
export type Family = "normal" | "student-t" | "gamma" | "lognormal" | "beta";
export type StageName = "individual" | "discussion" | "group";

/** decimal-string or plain number, as stored in session documents */
export type Num = number | string;

export function asNumber(v: Num | null | undefined): number {
  if (v === null || v === undefined) return NaN;
  return typeof v === "number" ? v : parseFloat(v);
}

export interface SupportWire {
  lower: Num;
  upper: Num;
}

export interface QoiWire {
  id: string;
  label: string;
  scale: Scale;
  support: SupportWire;
  definition?: string;
}

export interface ConstraintWire {
  value: number;
  cum_prob: number;
}

export interface DistributionWire {
  family: Family;
  params: Num[];
  support: SupportWire;
}

export interface FitWire {
  distribution: DistributionWire;
  residual: Num;
}

export interface JudgementWire {
  expert: string;
  qoi: string;
  plausible_range: [Num, Num];
  median: Num | null;
  tertiles: [Num, Num] | null;
  quartiles: [Num, Num] | null;
  probability_statements: { value: Num; cum_prob: Num }[] | null;
}

export interface ElicitationRecordWire {
  qoi: QoiWire;
  stage: StageName;
  individual: { judgement: JudgementWire; fit: FitWire }[];
  group: JudgementWire | null;
  consensus: FitWire | null;
  consensus_family: string | null;
  notes: string[];
}

export interface ScheduleWire {
  points: Num[];
  provenance: string[];
  elicitation_order: Num[];
  anchor: Num;
}

export interface ExtensionRecordWire {
  x_qoi: string;
  y_qoi: string | null;
  schedule: ScheduleWire | null;
  medians: [Num, Num][];
  transform: string | null;
  spread_rule: string | null;
  marginal_summary: Record<string, unknown> | null;
  marginal_fit: DistributionWire | null;
}

export interface CopulaRecordWire {
  qois: string[];
  judgements: { pair: [string, string]; probability: Num }[];
  correlation: Num[][];
}

export interface DerivedStateWire {
  elicitation: Record<string, ElicitationRecordWire>;
  marginal_inputs: Record<string, DistributionWire>;
  extension: Record<string, ExtensionRecordWire>;
  copula: CopulaRecordWire | null;
  pos_runs: Record<string, unknown>[];
  notes: { qoi: string | null; text: string }[];
}

export interface SessionView {
  id: string;
  created: string;
  updated: string;
  experts: string[];
  qois: QoiWire[];
  n_events: number;
  events: { index: number; type: string; at: string }[];
  stages: Record<string, StageName>;
  derived: DerivedStateWire;
  derived_hash: string;
}

export interface ComparisonView {
  qoi: string;
  grid: number[];
  experts: Record<string, { pdf: number[]; cdf: number[]; median: number }>;
  pool: { pdf: number[]; cdf: number[] };
}

export interface FitPreviewEntry {
  family: Family;
  params: number[];
  residual: number;
  median: number;
  interval90: [number, number];
}

export interface ConditionalPreviewEntry {
  y: number;
  median: number;
  quantiles: Record<string, number>;
  extrapolated: boolean;
  truncated_mass: number;
  truncation_warning: boolean;
}

export interface ExtensionPreview {
  median_fn: Record<string, unknown>;
  conditionals: ConditionalPreviewEntry[];
}

export interface PairSummary {
  elicited_concordance: number;
  rho: number;
  empirical_concordance: number;
  empirical_rank_correlation: number;
}

export interface ExploreView {
  seed: number;
  judgements: { pair: [string, string]; probability: number }[];
  pair_summaries: Record<string, PairSummary>;
  samples: [number, number][];
}

export interface MarginalizeSummary {
  n: number;
  seed: number;
  median: number;
  intervals: Record<string, [number, number]>;
  extrapolated_fraction: number;
  truncation_warning: boolean;
  fitted: FitWire | null;
}

export interface PosResultView {
  n_sims: number;
  seed: number;
  p_trial_success: number;
  se_trial_success: number;
  p_tpp_met: number;
  pos: number;
  per_test_rejection: Record<string, number>;
  decomposition: {
    factors: [string, number][];
    joint_frequency: number;
    product: number;
  };
}

export interface PosJobView {
  status: "queued" | "running" | "done" | "failed";
  result: PosResultView | null;
  error: ErrorEnvelope | null;
}

export interface ErrorEnvelope {
  code: string;
  message: string;
  details: unknown;
}

export interface ReportView {
  schema: string;
  session: { id: string; created: string; updated: string; experts: string[] };
  quantities: {
    qoi: QoiWire;
    consensus: FitWire | null;
    consensus_family: string | null;
  }[];
  copula: CopulaRecordWire | null;
  pos_runs: Record<string, unknown>[];
}
