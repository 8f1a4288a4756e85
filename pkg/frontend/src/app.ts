/**
 * Facilitator console single-page app.
 *
 * Panels follow the workshop order and are stage-locked: judgement entry,
 * reveal/discussion, group probability method with live refit, extension
 * sequencer, concordance explorer, PoS dashboard.  All numbers come from the
 * API; this file only renders them.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  concordancePhrasings,
  conditionalFanSvg,
  decompositionSvg,
  densityOverlaySvg,
  scatterSvg,
} from "./charts.js";
import { ConsoleState, PREVIEW_SEED } from "./state.js";
import { asNumber } from "./types.js";
import {
  CHALLENGE_PROMPTS,
  currentStep,
  fieldEnabled,
  statementsSubmittable,
  submittable,
  validateWizard,
} from "./validation.js";

const api = new ApiClient(
  (globalThis as { ELICIT_API_BASE?: string }).ELICIT_API_BASE ?? "http://127.0.0.1:8781",
);
const state = new ConsoleState(api);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function flash(message: string, kind: "ok" | "error" = "ok") {
  const bar = el<HTMLDivElement>("flash");
  bar.textContent = message;
  bar.className = `flash ${kind}`;
  setTimeout(() => {
    bar.textContent = "";
    bar.className = "flash";
  }, 6000);
}

async function guard(action: () => Promise<void>) {
  try {
    await action();
  } catch (err) {
    if (err instanceof ApiError) {
      flash(`${err.code}: ${err.message}`, "error");
    } else {
      flash(String(err), "error");
    }
  }
}

// ---------------------------------------------------------------------------
// session setup

function renderSessionBar() {
  const session = state.session;
  el<HTMLSpanElement>("session-label").textContent = session
    ? `session ${session.id} - experts ${session.experts.join(", ")}`
    : "no session";
  const select = el<HTMLSelectElement>("qoi-select");
  select.innerHTML = "";
  for (const qoi of session?.qois ?? []) {
    const option = document.createElement("option");
    option.value = qoi.id;
    option.textContent = `${qoi.id}: ${qoi.label}`;
    option.selected = qoi.id === state.activeQoi;
    select.appendChild(option);
  }
  el<HTMLSpanElement>("stage-label").textContent = state.stage ? `stage: ${state.stage}` : "";
}

// ---------------------------------------------------------------------------
// judgement wizard

function renderWizard() {
  const container = el<HTMLDivElement>("wizard-experts");
  container.innerHTML = "";
  const session = state.session;
  if (!session || !state.panelsEnabled().judgements) {
    container.innerHTML = "<p class='muted'>Individual entry is closed for this quantity.</p>";
    return;
  }
  for (const expert of session.experts) {
    const wizard = state.pendingJudgements.get(expert)!;
    const step = currentStep(wizard);
    const errors = validateWizard(wizard);
    const row = document.createElement("div");
    row.className = "wizard-row";
    row.innerHTML = `
      <strong>expert ${expert}</strong>
      <label>range <input data-expert="${expert}" data-field="rangeLow" type="number" step="any"
        value="${wizard.rangeLow ?? ""}" placeholder="low"></label>
      <label>to <input data-expert="${expert}" data-field="rangeHigh" type="number" step="any"
        value="${wizard.rangeHigh ?? ""}" placeholder="high"></label>
      <label>median <input data-expert="${expert}" data-field="median" type="number" step="any"
        value="${wizard.median ?? ""}" ${fieldEnabled(wizard, "median") ? "" : "disabled"}></label>
      <label>${wizard.spreadKind}
        <input data-expert="${expert}" data-field="spreadLow" type="number" step="any"
          value="${wizard.spreadLow ?? ""}" ${fieldEnabled(wizard, "spread") ? "" : "disabled"}>
        <input data-expert="${expert}" data-field="spreadHigh" type="number" step="any"
          value="${wizard.spreadHigh ?? ""}" ${fieldEnabled(wizard, "spread") ? "" : "disabled"}>
      </label>
      <button data-submit="${expert}" ${submittable(wizard) ? "" : "disabled"}>submit</button>
      <div class="prompt">${CHALLENGE_PROMPTS[step]}</div>
      <div class="errors">${errors.map((e) => e.message).join(" ")}</div>`;
    container.appendChild(row);
  }
}

function wireWizard() {
  el<HTMLDivElement>("wizard-experts").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    const expert = input.dataset.expert;
    const field = input.dataset.field;
    if (!expert || !field) return;
    const value = input.value === "" ? null : Number(input.value);
    state.editJudgement(expert, { [field]: value });
  });
  el<HTMLDivElement>("wizard-experts").addEventListener("click", (event) => {
    const button = event.target as HTMLButtonElement;
    const expert = button.dataset.submit;
    if (!expert) return;
    void guard(async () => {
      await state.submitJudgement(expert);
      flash(`judgement for expert ${expert} recorded`);
    });
  });
}

// ---------------------------------------------------------------------------
// reveal & discussion

function renderComparison() {
  const target = el<HTMLDivElement>("comparison-chart");
  if (!state.comparison) {
    target.innerHTML = "<p class='muted'>No reveal yet.</p>";
    return;
  }
  const series = Object.entries(state.comparison.experts).map(([label, curves]) => ({
    label,
    values: curves.pdf,
  }));
  series.push({ label: "linear pool", values: state.comparison.pool.pdf, emphasis: true } as never);
  target.innerHTML = densityOverlaySvg(state.comparison.grid, series, undefined, state.comparison.qoi);
}

// ---------------------------------------------------------------------------
// group probability method

function renderGroupPanel() {
  const rows = el<HTMLDivElement>("statement-rows");
  rows.innerHTML = state.pendingStatements
    .map(
      (row, i) => `
      <div class="statement-row">
        P(X &lt; <input data-row="${i}" data-col="value" type="number" step="any"
          value="${row.value ?? ""}">) =
        <input data-row="${i}" data-col="cumProb" type="number" step="any" min="0" max="1"
          value="${row.cumProb ?? ""}">
      </div>`,
    )
    .join("");
  el<HTMLButtonElement>("refit-button").disabled = !statementsSubmittable(state.pendingStatements);
  const table = el<HTMLDivElement>("fit-table");
  if (!state.fitPreview) {
    table.innerHTML = "<p class='muted'>Enter statements and refit to compare families.</p>";
    return;
  }
  table.innerHTML = `
    <table>
      <tr><th>family</th><th>median</th><th>90% interval</th><th>residual</th><th></th></tr>
      ${state.fitPreview.fits
        .map(
          (fit) => `
        <tr>
          <td>${fit.family}</td>
          <td>${fit.median.toPrecision(4)}</td>
          <td>[${fit.interval90[0].toPrecision(4)}, ${fit.interval90[1].toPrecision(4)}]</td>
          <td>${fit.residual.toExponential(2)}</td>
          <td><button data-family="${fit.family}">accept as consensus</button></td>
        </tr>`,
        )
        .join("")}
    </table>`;
}

function wireGroupPanel() {
  el<HTMLDivElement>("statement-rows").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    const row = Number(input.dataset.row);
    const col = input.dataset.col as "value" | "cumProb" | undefined;
    if (Number.isNaN(row) || !col) return;
    state.editStatement(row, { [col]: input.value === "" ? null : Number(input.value) });
  });
  el<HTMLButtonElement>("add-statement").addEventListener("click", () => state.addStatementRow());
  el<HTMLButtonElement>("refit-button").addEventListener("click", () =>
    guard(async () => {
      await state.refreshFitPreview();
    }),
  );
  el<HTMLDivElement>("fit-table").addEventListener("click", (event) => {
    const button = event.target as HTMLButtonElement;
    const family = button.dataset.family;
    if (!family) return;
    void guard(async () => {
      await state.commitConsensus(family);
      flash(`consensus recorded: ${family}`);
    });
  });
}

// ---------------------------------------------------------------------------
// extension sequencer

async function renderExtensionPreview(xQoi: string, transform: string) {
  const target = el<HTMLDivElement>("extension-fan");
  const preview = await api.extensionPreview(state.session!.id, xQoi, { transform });
  target.innerHTML = conditionalFanSvg(
    preview.conditionals.map((c) => ({
      y: c.y,
      median: c.median,
      low: c.quantiles["0.05"] ?? c.median,
      high: c.quantiles["0.95"] ?? c.median,
      flagged: c.truncation_warning,
    })),
  );
  const warnings = preview.conditionals.filter((c) => c.truncation_warning);
  el<HTMLDivElement>("extension-warnings").textContent = warnings.length
    ? `truncation above 1% at conditioning values ${warnings.map((w) => w.y).join(", ")}`
    : "";
}

function wireExtensionPanel() {
  el<HTMLButtonElement>("extension-preview-button").addEventListener("click", () =>
    guard(async () => {
      const xQoi = el<HTMLInputElement>("extension-x-qoi").value;
      const transform = el<HTMLSelectElement>("extension-transform").value;
      await renderExtensionPreview(xQoi, transform);
    }),
  );
  el<HTMLButtonElement>("extension-commit-button").addEventListener("click", () =>
    guard(async () => {
      const xQoi = el<HTMLInputElement>("extension-x-qoi").value;
      const transform = el<HTMLSelectElement>("extension-transform").value;
      await api.extensionCommit(state.session!.id, xQoi, { transform });
      flash("conditional model committed");
      await state.refresh();
    }),
  );
}

// ---------------------------------------------------------------------------
// concordance explorer

function renderExplorePreview() {
  const target = el<HTMLDivElement>("scatter");
  const preview = state.explorePreview;
  if (!preview) {
    target.innerHTML = "<p class='muted'>Move the slider to preview the joint distribution.</p>";
    el<HTMLDivElement>("phrasings").innerHTML = "";
    return;
  }
  target.innerHTML = scatterSvg(preview.view.samples, preview.seed);
  const summary = Object.values(preview.view.pair_summaries)[0];
  el<HTMLDivElement>("explore-summary").textContent = summary
    ? `empirical concordance ${summary.empirical_concordance.toFixed(3)}, ` +
      `rank correlation ${summary.empirical_rank_correlation.toFixed(3)} (seed ${preview.seed})`
    : "";
  const [a, b] = concordancePhrasings(
    preview.concordance,
    "the exacerbation effect",
    "the FEV1 effect",
  );
  el<HTMLDivElement>("phrasings").innerHTML = `<p>${a}</p><p>${b}</p>`;
}

function wireExplorer() {
  const slider = el<HTMLInputElement>("concordance-slider");
  slider.addEventListener("change", () =>
    guard(async () => {
      const pair = explorerPair();
      el<HTMLSpanElement>("concordance-value").textContent = slider.value;
      await state.exploreConcordance(pair, Number(slider.value), PREVIEW_SEED);
    }),
  );
  el<HTMLButtonElement>("commit-concordance").addEventListener("click", () =>
    guard(async () => {
      const pair = explorerPair();
      const value = Number(slider.value);
      if (!window.confirm(`Commit concordance ${value} for ${pair[0]}-${pair[1]}?`)) return;
      await state.commitConcordance(pair, value);
      flash(`concordance ${value} committed`);
    }),
  );
}

function explorerPair(): [string, string] {
  const raw = el<HTMLInputElement>("explorer-pair").value;
  const [a, b] = raw.split(",").map((s) => s.trim());
  if (!a || !b) throw new Error("enter the pair as qoiA,qoiB");
  return [a, b];
}

// ---------------------------------------------------------------------------
// PoS dashboard

function wirePosPanel() {
  el<HTMLButtonElement>("pos-run-button").addEventListener("click", () =>
    guard(async () => {
      const body = JSON.parse(el<HTMLTextAreaElement>("pos-config").value) as Record<string, unknown>;
      el<HTMLDivElement>("pos-status").textContent = "running...";
      const job = await api.posRunAndWait(state.session!.id, body);
      if (job.status === "failed" || !job.result) {
        el<HTMLDivElement>("pos-status").textContent = `failed: ${job.error?.message ?? "unknown"}`;
        return;
      }
      const result = job.result;
      el<HTMLDivElement>("pos-status").textContent =
        `PoS ${result.pos.toFixed(4)} (trial significance ${result.p_trial_success.toFixed(4)}, ` +
        `${result.n_sims} sims, seed ${result.seed})`;
      el<HTMLDivElement>("pos-ledger").innerHTML = decompositionSvg(
        result.decomposition.factors.map(([k, v]) => [k, asNumber(v)]),
      );
      await state.refresh();
    }),
  );
  el<HTMLButtonElement>("pos-sensitivity-button").addEventListener("click", () =>
    guard(async () => {
      const config = JSON.parse(el<HTMLTextAreaElement>("pos-config").value) as Record<string, unknown>;
      const knobs = JSON.parse(el<HTMLInputElement>("pos-knobs").value) as Record<string, number[]>;
      el<HTMLDivElement>("pos-sensitivity").textContent = "running...";
      const out = await api.posSensitivity(state.session!.id, {
        design: config["design"],
        rule: config["rule"],
        benchmarks: config["benchmarks"],
        knobs,
        n_sims: Math.min(Number(config["n_sims"] ?? 50_000), 200_000),
        seed: config["seed"] ?? 11,
      });
      el<HTMLDivElement>("pos-sensitivity").innerHTML = `
        <table>
          <tr><th>knob</th><th>value</th><th>P(significance)</th><th>P(sig &amp; TPP)</th><th>PoS</th></tr>
          ${out.rows
            .map(
              (r) => `<tr><td>${r.knob}</td><td>${r.value}</td>
                <td>${r.p_trial_success.toFixed(4)}</td>
                <td>${r.p_tpp_met.toFixed(4)}</td>
                <td>${r.pos.toFixed(4)}</td></tr>`,
            )
            .join("")}
        </table>`;
    }),
  );
}

// ---------------------------------------------------------------------------
// discussion notes + facilitator override

function wireNotesAndOverride() {
  el<HTMLButtonElement>("note-button").addEventListener("click", () =>
    guard(async () => {
      const input = el<HTMLTextAreaElement>("note-input");
      await state.addNote(input.value, state.activeQoi ?? undefined);
      input.value = "";
      flash("note recorded");
    }),
  );
  el<HTMLButtonElement>("override-button").addEventListener("click", () =>
    guard(async () => {
      const reason = window.prompt(
        "Stage-lock override is recorded in the session log. Reason:",
      );
      if (!reason) return;
      await state.overrideStageLock(reason);
      flash("stage lock lifted; override logged");
    }),
  );
}

function renderNotes() {
  const session = state.session;
  const list = el<HTMLUListElement>("notes-list");
  list.innerHTML = (session?.derived.notes ?? [])
    .map((n) => `<li>${n.qoi ? `[${n.qoi}] ` : ""}${n.text}</li>`)
    .join("");
}

// ---------------------------------------------------------------------------
// boot

function renderAll() {
  renderSessionBar();
  renderWizard();
  renderComparison();
  renderGroupPanel();
  renderExplorePreview();
  renderNotes();
  const enabled = state.panelsEnabled();
  for (const [panel, on] of Object.entries(enabled)) {
    const node = document.getElementById(`panel-${panel}`);
    if (node) node.classList.toggle("locked", !on);
  }
}

export function boot() {
  state.subscribe(renderAll);
  wireWizard();
  wireGroupPanel();
  wireExtensionPanel();
  wireExplorer();
  wirePosPanel();
  wireNotesAndOverride();
  el<HTMLButtonElement>("create-session").addEventListener("click", () =>
    guard(async () => {
      const qois = JSON.parse(el<HTMLTextAreaElement>("qois-input").value);
      const experts = Number(el<HTMLInputElement>("experts-input").value);
      await state.createSession(qois, experts);
      flash(`session ${state.session!.id} created`);
    }),
  );
  el<HTMLButtonElement>("open-session").addEventListener("click", () =>
    guard(async () => {
      await state.openSession(el<HTMLInputElement>("session-id-input").value.trim());
    }),
  );
  el<HTMLSelectElement>("qoi-select").addEventListener("change", (event) => {
    state.setActiveQoi((event.target as HTMLSelectElement).value);
  });
  el<HTMLButtonElement>("reveal-button").addEventListener("click", () =>
    guard(async () => {
      await state.reveal();
      flash("individual judgements revealed; discussion open");
    }),
  );
  el<HTMLButtonElement>("comparison-button").addEventListener("click", () =>
    guard(() => state.loadComparison()),
  );
  renderAll();
}

if (typeof document !== "undefined" && document.getElementById("console-root")) {
  boot();
}
