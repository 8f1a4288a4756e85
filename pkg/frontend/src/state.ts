/**
 * Console view state.
 *
 * Holds the session snapshot plus pending (unsubmitted) inputs and preview
 * artifacts.  Two invariants are enforced structurally:
 *   - pending inputs reach the session only through an explicit submit*()
 *     call, which round-trips to the server and refreshes the snapshot;
 *   - previews are kept separate from the snapshot and always carry the seed
 *     they were generated with.
 */

import { ApiClient, type GroupJudgementInput } from "./api.js";
import type {
  ComparisonView,
  ExploreView,
  FitPreviewEntry,
  SessionView,
  StageName,
} from "./types.js";
import {
  emptyWizard,
  submittable,
  statementsSubmittable,
  type ProbabilityRow,
  type WizardState,
} from "./validation.js";

export interface ExplorePreview {
  concordance: number;
  seed: number;
  view: ExploreView;
}

export interface FitPreviewArtifact {
  statements: { value: number; cum_prob: number }[];
  fits: FitPreviewEntry[];
}

export type Listener = () => void;

/** Default preview sample size: large enough to read, fixed for comparability. */
export const PREVIEW_POINTS = 10_000;
/** Engine-wide default preview seed, kept visible next to every preview. */
export const PREVIEW_SEED = 104729;

export class ConsoleState {
  session: SessionView | null = null;
  activeQoi: string | null = null;

  /** pending per-expert wizard inputs, keyed by expert label */
  pendingJudgements = new Map<string, WizardState>();
  /** pending RIO probability rows for the active QoI */
  pendingStatements: ProbabilityRow[] = [
    { value: null, cumProb: null },
    { value: null, cumProb: null },
    { value: null, cumProb: null },
  ];

  comparison: ComparisonView | null = null;
  fitPreview: FitPreviewArtifact | null = null;
  explorePreview: ExplorePreview | null = null;

  /** set only by overrideStageLock(); the server still arbitrates stages */
  stageLockOverridden = false;

  private listeners: Listener[] = [];

  constructor(readonly api: ApiClient) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify() {
    for (const listener of this.listeners) listener();
  }

  get stage(): StageName | null {
    if (!this.session || !this.activeQoi) return null;
    return this.session.stages[this.activeQoi] ?? null;
  }

  async createSession(qois: SessionView["qois"], experts: number | string[]): Promise<void> {
    this.session = await this.api.createSession(qois, experts);
    this.activeQoi = qois[0]?.id ?? null;
    for (const expert of this.session.experts) {
      this.pendingJudgements.set(expert, emptyWizard());
    }
    this.notify();
  }

  async openSession(sid: string): Promise<void> {
    this.session = await this.api.getSession(sid);
    this.activeQoi = this.session.qois[0]?.id ?? null;
    for (const expert of this.session.experts) {
      if (!this.pendingJudgements.has(expert)) {
        this.pendingJudgements.set(expert, emptyWizard());
      }
    }
    this.notify();
  }

  async refresh(): Promise<void> {
    if (!this.session) return;
    this.session = await this.api.getSession(this.session.id);
    this.notify();
  }

  setActiveQoi(qoi: string) {
    this.activeQoi = qoi;
    this.comparison = null;
    this.fitPreview = null;
    this.explorePreview = null;
    this.notify();
  }

  editJudgement(expert: string, patch: Partial<WizardState>) {
    const current = this.pendingJudgements.get(expert) ?? emptyWizard();
    this.pendingJudgements.set(expert, { ...current, ...patch });
    this.notify();
  }

  /** The only path from a pending wizard into the session log. */
  async submitJudgement(expert: string): Promise<void> {
    if (!this.session || !this.activeQoi) throw new Error("no active session");
    const wizard = this.pendingJudgements.get(expert);
    if (!wizard || !submittable(wizard)) {
      throw new Error("judgement is incomplete or invalid; nothing submitted");
    }
    const spread: [number, number] = [wizard.spreadLow!, wizard.spreadHigh!];
    await this.api.submitJudgement(this.session.id, {
      expert,
      qoi: this.activeQoi,
      plausible_range: [wizard.rangeLow!, wizard.rangeHigh!],
      median: wizard.median!,
      tertiles: wizard.spreadKind === "tertiles" ? spread : null,
      quartiles: wizard.spreadKind === "quartiles" ? spread : null,
    });
    this.pendingJudgements.set(expert, emptyWizard(wizard.spreadKind));
    await this.refresh();
  }

  async reveal(): Promise<void> {
    if (!this.session || !this.activeQoi) throw new Error("no active session");
    const out = await this.api.reveal(this.session.id, this.activeQoi);
    this.comparison = out.comparison;
    await this.refresh();
  }

  async loadComparison(): Promise<void> {
    if (!this.session || !this.activeQoi) throw new Error("no active session");
    this.comparison = await this.api.comparison(this.session.id, this.activeQoi);
    this.notify();
  }

  editStatement(index: number, patch: Partial<ProbabilityRow>) {
    const row = this.pendingStatements[index] ?? { value: null, cumProb: null };
    this.pendingStatements[index] = { ...row, ...patch };
    this.notify();
  }

  addStatementRow() {
    this.pendingStatements.push({ value: null, cumProb: null });
    this.notify();
  }

  private completeStatements(): { value: number; cum_prob: number }[] {
    return this.pendingStatements
      .filter((r) => r.value !== null && r.cumProb !== null)
      .map((r) => ({ value: r.value!, cum_prob: r.cumProb! }));
  }

  private groupInput(): GroupJudgementInput {
    if (!this.session || !this.activeQoi) throw new Error("no active session");
    const qoi = this.session.qois.find((q) => q.id === this.activeQoi);
    if (!qoi) throw new Error(`unknown quantity ${this.activeQoi}`);
    const lower = Number(qoi.support.lower);
    const upper = Number(qoi.support.upper);
    const statements = this.completeStatements();
    const values = statements.map((s) => s.value);
    const pad = (Math.max(...values) - Math.min(...values)) || 1;
    return {
      plausible_range: [
        Number.isFinite(lower) ? lower : Math.min(...values) - 2 * pad,
        Number.isFinite(upper) ? upper : Math.max(...values) + 2 * pad,
      ],
      probability_statements: statements,
    };
  }

  /** Pure refit across families; repeated calls never touch the log. */
  async refreshFitPreview(): Promise<void> {
    if (!this.session || !this.activeQoi) throw new Error("no active session");
    if (!statementsSubmittable(this.pendingStatements)) {
      this.fitPreview = null;
      this.notify();
      return;
    }
    const input = this.groupInput();
    const out = await this.api.fitPreview(this.session.id, this.activeQoi, input);
    this.fitPreview = {
      statements: input.probability_statements ?? [],
      fits: out.fits,
    };
    this.notify();
  }

  /** Record the RIO statements, then the facilitator's family choice. */
  async commitConsensus(family: string): Promise<void> {
    if (!this.session || !this.activeQoi) throw new Error("no active session");
    if (!statementsSubmittable(this.pendingStatements)) {
      throw new Error("group statements incomplete or inconsistent; nothing committed");
    }
    await this.api.setGroupJudgement(this.session.id, this.activeQoi, this.groupInput());
    await this.api.fitConsensus(this.session.id, this.activeQoi, family);
    await this.refresh();
  }

  /**
   * What-if loop for the concordance explorer: preview only, fixed seed,
   * result labeled with that seed.  Committing is a separate action below.
   */
  async exploreConcordance(
    qois: [string, string],
    concordance: number,
    seed: number = PREVIEW_SEED,
  ): Promise<ExplorePreview> {
    if (!this.session) throw new Error("no active session");
    const view = await this.api.copulaExplore(
      this.session.id,
      qois,
      concordance,
      PREVIEW_POINTS,
      seed,
    );
    this.explorePreview = { concordance, seed, view };
    this.notify();
    return this.explorePreview;
  }

  /** Distinct, confirmed commit of the agreed concordance probability. */
  async commitConcordance(qois: [string, string], concordance: number): Promise<void> {
    if (!this.session) throw new Error("no active session");
    await this.api.copulaCommit(this.session.id, [...qois], [
      { pair: qois, probability: concordance },
    ]);
    await this.refresh();
  }

  /** Capture a discussion note into the session log. */
  async addNote(text: string, qoi?: string): Promise<void> {
    if (!this.session) throw new Error("no active session");
    const trimmed = text.trim();
    if (!trimmed) throw new Error("empty note");
    await this.api.addNote(this.session.id, trimmed, qoi);
    await this.refresh();
  }

  /**
   * Facilitator override of the stage-locked navigation.  The override is an
   * explicit action recorded in the session log; the server still rejects
   * stage-violating events, so this only unlocks the panels on screen.
   */
  async overrideStageLock(reason: string): Promise<void> {
    if (!this.session) throw new Error("no active session");
    if (!reason.trim()) throw new Error("an override needs a recorded reason");
    await this.api.addNote(
      this.session.id,
      `facilitator override: stage lock lifted (${reason.trim()})`,
      this.activeQoi ?? undefined,
    );
    this.stageLockOverridden = true;
    await this.refresh();
  }

  /**
   * Stage-locked navigation: which panels are reachable for the active QoI.
   */
  panelsEnabled(): Record<string, boolean> {
    if (this.stageLockOverridden) {
      return {
        judgements: true,
        reveal: true,
        discussion: true,
        group: true,
        extension: true,
        copula: true,
        pos: true,
      };
    }
    const stage = this.stage;
    return {
      judgements: stage === "individual",
      reveal: stage === "individual",
      discussion: stage === "discussion" || stage === "group",
      group: stage === "discussion" || stage === "group",
      extension: stage === "group",
      copula: stage === "group",
      pos: this.session?.derived.copula !== null && this.session !== null,
    };
  }
}
