"""Command line for headless workshop operation.

Every API action has a CLI equivalent; sessions live as JSON files under the
data directory (ELICIT_DATA_DIR or --data-dir).  ``pos run`` can also address
a session file directly by path.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .copula import ConcordanceJudgement, DEFAULT_PREVIEW_SEED, explore as copula_explore
from .distributions import FittedDistribution
from .errors import ElicitError, SessionNotFoundError, StageError
from .pos import Benchmarks, SuccessRule, TrialDesign, decompose
from .session import (
    SessionStore,
    copula_model_from_state,
    derive_state,
    derived_hash,
    export_report,
    load_session_file,
    marginalize_command,
    pos_command,
    render_report_text,
)


def _echo_json(obj):
    click.echo(json.dumps(obj, indent=2, sort_keys=True))


def _fail(exc: ElicitError):
    click.echo(json.dumps(exc.envelope(), default=str), err=True)
    sys.exit(1)


def _parse_statements(probs) -> list[dict]:
    out = []
    for spec in probs:
        value, _, cum = spec.partition(":")
        out.append({"value": float(value), "cum_prob": float(cum)})
    return out


def _judgement_payload(qoi, expert, plausible_range, median, tertiles, quartiles, probs):
    lo, hi = (float(v) for v in plausible_range.split(","))
    return {
        "expert": expert,
        "qoi": qoi,
        "plausible_range": [lo, hi],
        "median": median,
        "tertiles": [float(v) for v in tertiles.split(",")] if tertiles else None,
        "quartiles": [float(v) for v in quartiles.split(",")] if quartiles else None,
        "probability_statements": _parse_statements(probs) if probs else None,
    }


@click.group()
@click.option(
    "--data-dir",
    "-d",
    envvar="ELICIT_DATA_DIR",
    default="./elicit-data",
    show_default=True,
    help="Directory holding session files.",
)
@click.pass_context
def main(ctx, data_dir):
    """Expert-elicitation engine: judgements, joint distributions, PoS."""
    ctx.obj = SessionStore(data_dir)


@main.group()
def session():
    """Create, inspect and export sessions."""


@session.command("create")
@click.option("--qois", "qois_file", type=click.Path(exists=True), required=True,
              help="JSON file with a list of quantity definitions.")
@click.option("--experts", default=5, show_default=True,
              help="Number of experts (anonymized as letters) or comma-separated labels.")
@click.pass_obj
def session_create(store: SessionStore, qois_file, experts):
    qois = json.loads(Path(qois_file).read_text())
    try:
        experts_arg = int(experts)
    except (TypeError, ValueError):
        experts_arg = [s.strip() for s in str(experts).split(",") if s.strip()]
    try:
        s = store.create(qois=qois, experts=experts_arg)
    except ElicitError as exc:
        _fail(exc)
    _echo_json({"id": s.id, "experts": s.experts})


@session.command("show")
@click.argument("sid")
@click.pass_obj
def session_show(store: SessionStore, sid):
    try:
        s = store.load(sid)
        state = derive_state(s)
    except ElicitError as exc:
        _fail(exc)
    _echo_json(
        {
            "id": s.id,
            "experts": s.experts,
            "n_events": len(s.events),
            "stages": {k: v.stage.value for k, v in state.elicitation.items()},
            "derived_hash": derived_hash(s),
        }
    )


@session.command("comparison")
@click.argument("sid")
@click.option("--qoi", required=True)
@click.option("--grid/--no-grid", default=False, show_default=True,
              help="Include the full grid evaluations.")
@click.pass_obj
def session_comparison(store: SessionStore, sid, qoi, grid):
    """Reveal-overlay data (read-only; works at any stage with fits present)."""
    from .judgements import reveal_summary

    try:
        state = derive_state(store.load(sid))
        if qoi not in state.elicitation:
            raise SessionNotFoundError(f"unknown quantity {qoi!r}")
        summary = reveal_summary(state.elicitation[qoi])
    except ElicitError as exc:
        _fail(exc)
    if not grid:
        summary = {
            "qoi": summary["qoi"],
            "experts": {k: {"median": v["median"]} for k, v in summary["experts"].items()},
            "grid_points": len(summary["grid"]),
        }
    _echo_json(summary)


@session.command("export")
@click.argument("sid")
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json",
              show_default=True)
@click.pass_obj
def session_export(store: SessionStore, sid, fmt):
    try:
        report = export_report(store.load(sid))
    except ElicitError as exc:
        _fail(exc)
    if fmt == "json":
        _echo_json(report)
    else:
        click.echo(render_report_text(report))


@main.group()
def judgement():
    """Individual expert judgements."""


@judgement.command("submit")
@click.argument("sid")
@click.option("--expert", required=True)
@click.option("--qoi", required=True)
@click.option("--range", "plausible_range", required=True, help="lo,hi")
@click.option("--median", type=float, default=None)
@click.option("--tertiles", default=None, help="t1,t2")
@click.option("--quartiles", default=None, help="q1,q3")
@click.option("--prob", "probs", multiple=True, help="value:cum_prob (repeatable)")
@click.pass_obj
def judgement_submit(store, sid, expert, qoi, plausible_range, median, tertiles, quartiles, probs):
    payload = {
        "qoi": qoi,
        "judgement": _judgement_payload(
            qoi, expert, plausible_range, median, tertiles, quartiles, probs
        ),
    }
    try:
        _, event, appended = store.append(sid, "judgement_submitted", payload)
    except ElicitError as exc:
        _fail(exc)
    _echo_json({"event_index": event.index, "appended": appended})


@main.command("reveal")
@click.argument("sid")
@click.option("--qoi", required=True)
@click.pass_obj
def reveal(store, sid, qoi):
    try:
        _, event, appended = store.append(sid, "revealed", {"qoi": qoi})
    except ElicitError as exc:
        _fail(exc)
    _echo_json({"event_index": event.index, "appended": appended})


@main.group()
def group():
    """Group (RIO) judgements."""


@group.command("set")
@click.argument("sid")
@click.option("--qoi", required=True)
@click.option("--range", "plausible_range", required=True, help="lo,hi")
@click.option("--median", type=float, default=None)
@click.option("--tertiles", default=None)
@click.option("--quartiles", default=None)
@click.option("--prob", "probs", multiple=True, help="value:cum_prob (repeatable)")
@click.pass_obj
def group_set(store, sid, qoi, plausible_range, median, tertiles, quartiles, probs):
    payload = {
        "qoi": qoi,
        "judgement": _judgement_payload(
            qoi, "RIO", plausible_range, median, tertiles, quartiles, probs
        ),
    }
    try:
        _, event, appended = store.append(sid, "group_judgement_set", payload)
    except ElicitError as exc:
        _fail(exc)
    _echo_json({"event_index": event.index, "appended": appended})


@main.group()
def note():
    """Discussion notes."""


@note.command("add")
@click.argument("sid")
@click.option("--qoi", default=None)
@click.option("--text", required=True)
@click.pass_obj
def note_add(store, sid, qoi, text):
    try:
        _, event, appended = store.append(sid, "note_added", {"qoi": qoi, "text": text})
    except ElicitError as exc:
        _fail(exc)
    _echo_json({"event_index": event.index, "appended": appended})


@main.group()
def consensus():
    """Consensus distribution fitting."""


@consensus.command("preview")
@click.argument("sid")
@click.option("--qoi", required=True)
@click.option("--range", "plausible_range", required=True, help="lo,hi")
@click.option("--median", type=float, default=None)
@click.option("--tertiles", default=None)
@click.option("--quartiles", default=None)
@click.option("--prob", "probs", multiple=True, help="value:cum_prob (repeatable)")
@click.pass_obj
def consensus_preview(store, sid, qoi, plausible_range, median, tertiles, quartiles, probs):
    """Rank candidate family fits for trial statements without committing."""
    from .judgements import JudgementSet, candidate_fits

    try:
        session_obj = store.load(sid)
        qoi_obj = next((q for q in session_obj.qois if q.id == qoi), None)
        if qoi_obj is None:
            raise SessionNotFoundError(f"unknown quantity {qoi!r}")
        judgement = JudgementSet.from_dict(
            _judgement_payload(qoi, "RIO", plausible_range, median, tertiles, quartiles, probs)
        )
        fits = candidate_fits(qoi_obj, judgement)
    except ElicitError as exc:
        _fail(exc)
    _echo_json(
        {
            "fits": [
                {
                    "family": f.family,
                    "params": list(f.distribution.params),
                    "residual": f.residual,
                    "median": f.distribution.median,
                    "interval90": [f.distribution.quantile(0.05), f.distribution.quantile(0.95)],
                }
                for f in fits
            ]
        }
    )


@consensus.command("fit")
@click.argument("sid")
@click.option("--qoi", required=True)
@click.option("--family", required=True,
              type=click.Choice(["normal", "student-t", "gamma", "lognormal", "beta"]))
@click.pass_obj
def consensus_fit(store, sid, qoi, family):
    try:
        session_obj, event, appended = store.append(
            sid, "consensus_fitted", {"qoi": qoi, "family": family}
        )
        state = derive_state(session_obj)
    except ElicitError as exc:
        _fail(exc)
    _echo_json(
        {
            "event_index": event.index,
            "appended": appended,
            "consensus": state.elicitation[qoi].consensus.to_dict(),
        }
    )


@main.group()
def extension():
    """Conditional (extension-method) elicitation."""


@extension.command("y-marginal")
@click.argument("sid")
@click.option("--qoi", required=True)
@click.option("--dist", "dist_file", type=click.Path(exists=True), required=True,
              help="JSON file with {family, params, support}.")
@click.pass_obj
def extension_y_marginal(store, sid, qoi, dist_file):
    dist = json.loads(Path(dist_file).read_text())
    FittedDistribution.from_dict(dist)
    try:
        _, event, appended = store.append(
            sid, "y_marginal_set", {"qoi": qoi, "distribution": dist}
        )
    except ElicitError as exc:
        _fail(exc)
    _echo_json({"event_index": event.index, "appended": appended})


@extension.command("schedule")
@click.argument("sid")
@click.option("--x-qoi", required=True)
@click.option("--y-qoi", required=True)
@click.option("--quantiles", default="0.05,0.25,0.5,0.75,0.95", show_default=True)
@click.option("--rounding", type=float, default=0.0, show_default=True)
@click.pass_obj
def extension_schedule(store, sid, x_qoi, y_qoi, quantiles, rounding):
    payload = {
        "x_qoi": x_qoi,
        "y_qoi": y_qoi,
        "quantiles": [float(q) for q in quantiles.split(",")],
        "rounding": rounding,
    }
    try:
        session_obj, event, appended = store.append(sid, "extension_schedule_set", payload)
        state = derive_state(session_obj)
    except ElicitError as exc:
        _fail(exc)
    _echo_json(
        {
            "event_index": event.index,
            "appended": appended,
            "schedule": state.extension[x_qoi].schedule.to_dict(),
        }
    )


@extension.command("medians")
@click.argument("sid")
@click.option("--x-qoi", required=True)
@click.option("--median", "medians", multiple=True, required=True, help="y:median (repeatable)")
@click.pass_obj
def extension_medians(store, sid, x_qoi, medians):
    pairs = []
    for spec in medians:
        y, _, m = spec.partition(":")
        pairs.append([float(y), float(m)])
    try:
        _, event, appended = store.append(
            sid, "conditional_medians_set", {"x_qoi": x_qoi, "medians": pairs}
        )
    except ElicitError as exc:
        _fail(exc)
    _echo_json({"event_index": event.index, "appended": appended})


@extension.command("preview")
@click.argument("sid")
@click.option("--x-qoi", required=True)
@click.option("--transform", default="log", show_default=True,
              type=click.Choice(["identity", "log", "logit"]))
@click.option("--spread", "spread_rule", default="constant-on-transformed-scale",
              show_default=True,
              type=click.Choice(["constant-on-transformed-scale", "scaled-with-median"]))
@click.pass_obj
def extension_preview(store, sid, x_qoi, transform, spread_rule):
    """Conditional fan under candidate choices; nothing is committed."""
    import dataclasses as _dc

    from .extension import conditional
    from .session import _build_conditional_model

    try:
        state = derive_state(store.load(sid))
        rec = state.extension.get(x_qoi)
        if rec is None or rec.schedule is None or not rec.medians:
            raise StageError("schedule and medians are needed before previewing the model")
        trial = _dc.replace(rec, transform=transform, kind="piecewise-linear",
                            spread_rule=spread_rule)
        model = _build_conditional_model(state, trial)
        fan = []
        for y in trial.schedule.points:
            cond = conditional(model, y)
            fan.append(
                {
                    "y": y,
                    "median": cond.median,
                    "q05": cond.quantile(0.05),
                    "q95": cond.quantile(0.95),
                    "truncated_mass": cond.truncated_mass,
                    "truncation_warning": cond.truncation_warning,
                }
            )
    except ElicitError as exc:
        _fail(exc)
    _echo_json({"conditionals": fan})


@extension.command("commit")
@click.argument("sid")
@click.option("--x-qoi", required=True)
@click.option("--transform", default="log", show_default=True,
              type=click.Choice(["identity", "log", "logit"]))
@click.option("--kind", default="piecewise-linear", show_default=True,
              type=click.Choice(["piecewise-linear", "polynomial"]))
@click.option("--spread", "spread_rule", default="constant-on-transformed-scale",
              show_default=True,
              type=click.Choice(["constant-on-transformed-scale", "scaled-with-median"]))
@click.pass_obj
def extension_commit(store, sid, x_qoi, transform, kind, spread_rule):
    try:
        _, event, appended = store.append(
            sid,
            "extension_model_committed",
            {"x_qoi": x_qoi, "transform": transform, "kind": kind, "spread_rule": spread_rule},
        )
    except ElicitError as exc:
        _fail(exc)
    _echo_json({"event_index": event.index, "appended": appended})


@extension.command("marginalize")
@click.argument("sid")
@click.option("--x-qoi", required=True)
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--fit-family", default=None)
@click.pass_obj
def extension_marginalize(store, sid, x_qoi, n, seed, fit_family):
    try:
        session_obj = store.load(sid)
        payload = marginalize_command(session_obj, x_qoi, n=n, seed=seed, fit_family=fit_family)
        _, event, appended = store.append(sid, "marginalized", payload)
    except ElicitError as exc:
        _fail(exc)
    _echo_json({"event_index": event.index, "appended": appended, "summary": payload["summary"]})


@main.group()
def copula():
    """Joint-distribution elicitation via concordance probabilities."""


@copula.command("explore")
@click.argument("sid")
@click.option("--pair", required=True, help="qoiA,qoiB")
@click.option("--concordance", type=float, required=True)
@click.option("--n", type=int, default=10000, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_PREVIEW_SEED, show_default=True)
@click.pass_obj
def copula_explore_cmd(store, sid, pair, concordance, n, seed):
    qois = tuple(s.strip() for s in pair.split(","))
    try:
        state = derive_state(store.load(sid))
        base = copula_model_from_state(
            state, qois, [ConcordanceJudgement(pair=qois, probability=0.5)]
        )
        result = copula_explore(base, concordance, pair=qois, n=n, seed=seed)
    except ElicitError as exc:
        _fail(exc)
    _echo_json(result.to_dict(include_samples=False))


@copula.command("commit")
@click.argument("sid")
@click.option("--pair", "pairs", multiple=True, required=True,
              help="qoiA,qoiB:concordance (repeatable)")
@click.pass_obj
def copula_commit(store, sid, pairs):
    judgements = []
    qois: list[str] = []
    for spec in pairs:
        names, _, c = spec.partition(":")
        a, b = (s.strip() for s in names.split(","))
        judgements.append({"pair": [a, b], "probability": float(c)})
        for q in (a, b):
            if q not in qois:
                qois.append(q)
    try:
        session_obj, event, appended = store.append(
            sid, "copula_committed", {"qois": qois, "judgements": judgements}
        )
        state = derive_state(session_obj)
    except ElicitError as exc:
        _fail(exc)
    _echo_json(
        {"event_index": event.index, "appended": appended, "copula": state.copula.to_dict()}
    )


@main.group()
def pos():
    """Probability-of-success simulation."""


def _apply_rule_overrides(rule_dict: dict, overrides) -> dict:
    out = dict(rule_dict)
    for spec in overrides:
        key, _, raw = spec.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key == "endpoints":
            out[key] = [s for s in raw.split(",") if s]
        elif raw.lower() in ("none", "null"):
            out[key] = None
        else:
            out[key] = float(raw)
    return out


@pos.command("run")
@click.option("--session", "session_ref", required=True,
              help="Session id in the data dir, or a path to a session JSON file.")
@click.option("--design", "design_file", type=click.Path(exists=True), required=True,
              help="JSON file with {design, rule, benchmarks}.")
@click.option("--sims", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--rule-override", "overrides", multiple=True,
              help="key=value, e.g. tpp_exacerbation=0.30 or tpp_fev1=none (repeatable)")
@click.option("--record/--no-record", default=True, show_default=True,
              help="Append the run to the session log.")
@click.pass_obj
def pos_run(store, session_ref, design_file, sims, seed, overrides, record):
    """Simulate the program and print the decomposition (stderr) + JSON (stdout)."""
    spec = json.loads(Path(design_file).read_text())
    try:
        design = TrialDesign.from_dict(spec["design"])
        rule = SuccessRule.from_dict(_apply_rule_overrides(spec.get("rule", {}), overrides))
        benchmarks = Benchmarks.from_dict(spec["benchmarks"])
        as_path = Path(session_ref)
        if as_path.exists() and as_path.suffix == ".json":
            session_obj = load_session_file(as_path)
            record_target = None
        else:
            session_obj = store.load(session_ref)
            record_target = session_ref
        payload, result = pos_command(session_obj, design, rule, benchmarks, sims, seed)
        if record and record_target is not None:
            store.append(record_target, "pos_recorded", payload)
    except ElicitError as exc:
        _fail(exc)
    click.echo(decompose(result).to_text(), err=True)
    _echo_json(result.to_dict())


@pos.command("sensitivity")
@click.option("--session", "session_ref", required=True,
              help="Session id in the data dir, or a path to a session JSON file.")
@click.option("--design", "design_file", type=click.Path(exists=True), required=True)
@click.option("--knob", "knobs", multiple=True, required=True,
              help="name=v1,v2,... e.g. tpp_exacerbation=0.40,0.30 (repeatable)")
@click.option("--sims", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.pass_obj
def pos_sensitivity(store, session_ref, design_file, knobs, sims, seed):
    """PoS vs knob values under common random numbers; no event is recorded."""
    from .pos import sensitivity as run_sensitivity
    from .session import copula_model_from_state

    spec = json.loads(Path(design_file).read_text())
    knob_map = {}
    for spec_str in knobs:
        name, _, raw = spec_str.partition("=")
        knob_map[name.strip()] = [float(v) for v in raw.split(",") if v]
    try:
        as_path = Path(session_ref)
        if as_path.exists() and as_path.suffix == ".json":
            session_obj = load_session_file(as_path)
        else:
            session_obj = store.load(session_ref)
        state = derive_state(session_obj)
        joint = copula_model_from_state(state)
        rows = run_sensitivity(
            joint,
            TrialDesign.from_dict(spec["design"]),
            SuccessRule.from_dict(spec.get("rule", {})),
            Benchmarks.from_dict(spec["benchmarks"]),
            knob_map,
            n_sims=sims,
            seed=seed,
        )
    except ElicitError as exc:
        _fail(exc)
    _echo_json({"rows": [r.to_dict() for r in rows], "seed": seed})


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8781, show_default=True)
@click.pass_obj
def serve(store, host, port):
    """Run the HTTP API (the console talks to this)."""
    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(store.data_dir), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
