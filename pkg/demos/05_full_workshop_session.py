"""A complete workshop recorded in an event-sourced session.

Five experts, one quantity elicited conditionally, one directly, a copula
commit and a PoS run, all appended to the session log; the derived state is
recomputed from the log, so the final hash proves the session replays
deterministically.  Uses a temporary directory; point the store at a real
data directory (or set ELICIT_DATA_DIR for the CLI) in actual use.
"""

import tempfile

from elicit import FittedDistribution, Support
from elicit.pos import Benchmarks, ExacerbationEndpoint, Fev1Endpoint, SuccessRule, TrialDesign
from elicit.session import (
    SessionStore,
    derive_state,
    derived_hash,
    export_report,
    marginalize_command,
    pos_command,
    render_report_text,
)

QOIS = [
    {"id": "exac", "label": "relative reduction in exacerbations",
     "scale": "percent-reduction", "support": {"lower": 0.0, "upper": 0.70}},
    {"id": "fev1", "label": "FEV1 difference vs placebo (mL)",
     "scale": "difference", "support": {"lower": "-inf", "upper": "inf"}},
    {"id": "sputum", "label": "reduction in sputum eosinophil counts",
     "scale": "percent-reduction", "support": {"lower": 0.0, "upper": 1.0}},
]


def main():
    tmp = tempfile.mkdtemp(prefix="elicit-demo-")
    store = SessionStore(tmp)
    session = store.create(qois=QOIS, experts=5)
    sid = session.id
    print(f"session {sid} created for experts {session.experts} in {tmp}")

    # individual judgements -> reveal -> group statements -> consensus
    for expert, med in zip("ABCDE", [0.28, 0.31, 0.33, 0.35, 0.30]):
        store.append(sid, "judgement_submitted", {
            "qoi": "exac",
            "judgement": {"expert": expert, "qoi": "exac",
                          "plausible_range": [0.0, 0.70], "median": med,
                          "tertiles": [med - 0.07, med + 0.08]},
        })
    store.append(sid, "revealed", {"qoi": "exac"})
    store.append(sid, "note_added", {"qoi": "exac", "text": (
        "Discussion focused on how far the surrogate effect carries over "
        "to the harder endpoint.")})
    store.append(sid, "group_judgement_set", {"qoi": "exac", "judgement": {
        "expert": "RIO", "qoi": "exac", "plausible_range": [0.0, 0.70],
        "probability_statements": [
            {"value": 0.25, "cum_prob": 0.30},
            {"value": 0.35, "cum_prob": 0.50},
            {"value": 0.40, "cum_prob": 0.70},
        ]}})
    store.append(sid, "consensus_fitted", {"qoi": "exac", "family": "beta"})

    # the FEV1 quantity, elicited directly
    store.append(sid, "judgement_submitted", {"qoi": "fev1", "judgement": {
        "expert": "A", "qoi": "fev1", "plausible_range": [-100.0, 400.0],
        "median": 90.0, "tertiles": [40.0, 140.0]}})
    store.append(sid, "revealed", {"qoi": "fev1"})
    store.append(sid, "group_judgement_set", {"qoi": "fev1", "judgement": {
        "expert": "RIO", "qoi": "fev1", "plausible_range": [-100.0, 400.0],
        "median": 90.0, "tertiles": [40.0, 140.0]}})
    store.append(sid, "consensus_fitted", {"qoi": "fev1", "family": "normal"})

    # extension: surrogate marginal in, schedule, medians, model, marginal out
    y = FittedDistribution("beta", (15.5, 8.5), Support(0.0, 1.0))
    store.append(sid, "y_marginal_set", {"qoi": "sputum", "distribution": y.to_dict()})
    store.append(sid, "extension_schedule_set", {
        "x_qoi": "exac", "y_qoi": "sputum",
        "quantiles": [0.1, 0.25, 0.5, 0.75, 0.9], "rounding": 0.05})
    anchor_median = derive_state(store.load(sid)).elicitation["exac"].consensus.distribution.median
    store.append(sid, "conditional_medians_set", {"x_qoi": "exac", "medians": [
        [0.50, round(anchor_median * 0.55, 4)],
        [0.60, round(anchor_median * 0.82, 4)],
        [0.70, round(anchor_median * 1.10, 4)],
        [0.75, round(anchor_median * 1.20, 4)],
    ]})
    store.append(sid, "extension_model_committed", {
        "x_qoi": "exac", "transform": "log", "kind": "piecewise-linear",
        "spread_rule": "constant-on-transformed-scale"})
    payload = marginalize_command(store.load(sid), "exac", n=100_000, seed=77,
                                  fit_family="beta")
    store.append(sid, "marginalized", payload)
    print("marginalized X:", payload["summary"]["median"])

    # joint distribution and a recorded PoS run
    store.append(sid, "copula_committed", {
        "qois": ["exac", "fev1"],
        "judgements": [{"pair": ["exac", "fev1"], "probability": 0.7}]})
    design = TrialDesign(
        doses=("dose_150", "dose_450"), n_per_arm=400,
        exacerbation=ExacerbationEndpoint(1.0, 1.2, 0.8),
        fev1=Fev1Endpoint(residual_sd_ml=450.0))
    pos_payload, result = pos_command(
        store.load(sid), design, SuccessRule(),
        Benchmarks(approval_given_p3=0.94, safety_multiplier=0.97, risk_adjustment=0.95),
        n_sims=100_000, seed=42)
    store.append(sid, "pos_recorded", pos_payload)
    print(f"recorded PoS: {result.pos:.4f} "
          f"(trial significance {result.p_trial_success:.4f})")

    print()
    print("replay determinism:")
    h1 = derived_hash(store.load(sid))
    h2 = derived_hash(store.load(sid))
    print(f"  derived-state hash: {h1}")
    print(f"  replayed:           {h2}")
    assert h1 == h2

    print()
    report = export_report(store.load(sid))
    print(render_report_text(report))


if __name__ == "__main__":
    main()
