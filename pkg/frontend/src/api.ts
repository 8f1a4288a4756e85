/**
 * Typed client for the session HTTP API.
 *
 * The console never computes statistics locally: every fitted parameter,
 * sample and probability on screen comes through this client.  Server
 * rejections surface as ApiError carrying the structured envelope.
 */

import type {
  ComparisonView,
  ErrorEnvelope,
  ExploreView,
  ExtensionPreview,
  FitPreviewEntry,
  MarginalizeSummary,
  PosJobView,
  QoiWire,
  ReportView,
  SessionView,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly details: unknown;
  readonly status: number;

  constructor(status: number, envelope: ErrorEnvelope) {
    super(envelope.message);
    this.name = "ApiError";
    this.status = status;
    this.code = envelope.code;
    this.details = envelope.details;
  }
}

export interface JudgementInput {
  expert: string;
  qoi: string;
  plausible_range: [number, number];
  median?: number | null;
  tertiles?: [number, number] | null;
  quartiles?: [number, number] | null;
  probability_statements?: { value: number; cum_prob: number }[] | null;
  client_token?: string;
}

export type GroupJudgementInput = Omit<JudgementInput, "expert" | "qoi">;

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const payload = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const envelope: ErrorEnvelope =
        payload && typeof payload === "object" && "code" in payload
          ? (payload as ErrorEnvelope)
          : { code: "error", message: text || response.statusText, details: null };
      throw new ApiError(response.status, envelope);
    }
    return payload as T;
  }

  createSession(qois: QoiWire[], experts: number | string[]): Promise<SessionView> {
    return this.request("POST", "/sessions", { qois, experts });
  }

  getSession(sid: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${sid}`);
  }

  submitJudgement(sid: string, judgement: JudgementInput): Promise<{ event_index: number; appended: boolean }> {
    return this.request("POST", `/sessions/${sid}/judgements`, judgement);
  }

  comparison(sid: string, qoi: string): Promise<ComparisonView> {
    return this.request("GET", `/sessions/${sid}/qois/${qoi}/comparison`);
  }

  reveal(sid: string, qoi: string): Promise<{ event_index: number; comparison: ComparisonView }> {
    return this.request("POST", `/sessions/${sid}/qois/${qoi}/reveal`);
  }

  setGroupJudgement(sid: string, qoi: string, judgement: GroupJudgementInput): Promise<{ event_index: number }> {
    return this.request("POST", `/sessions/${sid}/qois/${qoi}/group-judgement`, judgement);
  }

  /** Pure: live refit across families while the group debates its numbers. */
  fitPreview(sid: string, qoi: string, judgement: GroupJudgementInput): Promise<{ fits: FitPreviewEntry[] }> {
    return this.request("POST", `/sessions/${sid}/qois/${qoi}/fit-preview`, judgement);
  }

  fitConsensus(sid: string, qoi: string, family: string, clientToken?: string): Promise<{ event_index: number; appended: boolean }> {
    return this.request("POST", `/sessions/${sid}/qois/${qoi}/consensus`, {
      family,
      client_token: clientToken,
    });
  }

  setYMarginal(sid: string, qoi: string, distribution: unknown): Promise<{ event_index: number }> {
    return this.request("POST", `/sessions/${sid}/extension/y-marginal`, { qoi, distribution });
  }

  setSchedule(
    sid: string,
    xQoi: string,
    yQoi: string,
    quantiles: number[],
    rounding: number,
  ): Promise<{ event_index: number; schedule: { points: number[]; elicitation_order: number[]; anchor: number } }> {
    return this.request("POST", `/sessions/${sid}/extension/schedule`, {
      x_qoi: xQoi,
      y_qoi: yQoi,
      quantiles,
      rounding,
    });
  }

  setMedians(sid: string, xQoi: string, medians: [number, number][]): Promise<{ event_index: number }> {
    return this.request("POST", `/sessions/${sid}/extension/medians`, { x_qoi: xQoi, medians });
  }

  /** Pure: conditional fan under candidate transform/spread choices. */
  extensionPreview(
    sid: string,
    xQoi: string,
    options: { transform?: string; kind?: string; spread_rule?: string } = {},
  ): Promise<ExtensionPreview> {
    return this.request("POST", `/sessions/${sid}/extension/preview`, { x_qoi: xQoi, ...options });
  }

  extensionCommit(
    sid: string,
    xQoi: string,
    options: { transform?: string; kind?: string; spread_rule?: string } = {},
  ): Promise<{ event_index: number }> {
    return this.request("POST", `/sessions/${sid}/extension/commit`, { x_qoi: xQoi, ...options });
  }

  marginalize(
    sid: string,
    xQoi: string,
    n: number,
    seed: number,
    fitFamily?: string,
  ): Promise<{ event_index: number; summary: MarginalizeSummary }> {
    return this.request("POST", `/sessions/${sid}/extension/marginalize`, {
      x_qoi: xQoi,
      n,
      seed,
      fit_family: fitFamily ?? null,
    });
  }

  /** Pure: fixed-seed scatter preview for a what-if concordance value. */
  copulaExplore(sid: string, qois: [string, string], concordance: number, n: number, seed: number): Promise<ExploreView> {
    return this.request("POST", `/sessions/${sid}/copula/explore`, { qois, concordance, n, seed });
  }

  copulaCommit(
    sid: string,
    qois: string[],
    judgements: { pair: [string, string]; probability: number }[],
    clientToken?: string,
  ): Promise<{ event_index: number; appended: boolean }> {
    return this.request("POST", `/sessions/${sid}/copula/commit`, {
      qois,
      judgements,
      client_token: clientToken,
    });
  }

  addNote(sid: string, text: string, qoi?: string): Promise<{ event_index: number }> {
    return this.request("POST", `/sessions/${sid}/notes`, { text, qoi: qoi ?? null });
  }

  posRun(sid: string, body: Record<string, unknown>): Promise<{ job_id: string }> {
    return this.request("POST", `/sessions/${sid}/pos/run`, body);
  }

  /** Pure: PoS across knob values under common random numbers. */
  posSensitivity(
    sid: string,
    body: Record<string, unknown>,
  ): Promise<{ rows: { knob: string; value: number; p_trial_success: number; p_tpp_met: number; pos: number }[] }> {
    return this.request("POST", `/sessions/${sid}/pos/sensitivity`, body);
  }

  posJob(sid: string, jobId: string): Promise<PosJobView> {
    return this.request("GET", `/sessions/${sid}/pos/jobs/${jobId}`);
  }

  async posRunAndWait(sid: string, body: Record<string, unknown>, pollMs = 250, timeoutMs = 120_000): Promise<PosJobView> {
    const { job_id } = await this.posRun(sid, body);
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const job = await this.posJob(sid, job_id);
      if (job.status === "done" || job.status === "failed") return job;
      if (Date.now() > deadline) throw new Error(`PoS job ${job_id} timed out`);
      await new Promise((resolve) => setTimeout(resolve, pollMs));
    }
  }

  exportReport(sid: string): Promise<ReportView> {
    return this.request("GET", `/sessions/${sid}/export`);
  }
}
