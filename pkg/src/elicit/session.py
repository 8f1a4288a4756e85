"""Workshop session: append-only event log, deterministic derived state,
single-writer persistence and report export.

A session is one JSON document on disk.  Mutations append typed events; all
derived records (fits, schedules, models, committed copulas, recorded runs)
are recomputed from the log, so replaying a log reproduces the state exactly.
Heavy Monte Carlo outputs (marginalization summaries, PoS results) are
computed once at command time and carried inside their event payload; replay
incorporates them verbatim, keeping derived state a pure function of the log.
"""

from __future__ import annotations

import datetime as _dt
import os
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import json

from filelock import FileLock, Timeout

from .copula import ConcordanceJudgement, CopulaModel, build as build_copula
from .distributions import FittedDistribution
from .errors import (
    SessionLockError,
    SessionNotFoundError,
    StageError,
    ValidationError,
)
from .extension import (
    ConditionalModel,
    ConditioningSchedule,
    MedianFunction,
    fit_median_function,
    marginalize_x,
    schedule_from_marginal,
)
from .judgements import (
    ElicitationRecord,
    GROUP_EXPERT,
    JudgementSet,
    QuantityOfInterest,
    Stage,
    fit_judgement,
    reveal_summary,
)
from .pos import Benchmarks, PosResult, SuccessRule, TrialDesign, simulate_program
from .serialize import state_hash, stringify_numbers

SESSION_SCHEMA = "session/v1"

EVENT_TYPES = (
    "judgement_submitted",
    "revealed",
    "group_judgement_set",
    "consensus_fitted",
    "note_added",
    "y_marginal_set",
    "extension_schedule_set",
    "conditional_medians_set",
    "extension_model_committed",
    "marginalized",
    "copula_committed",
    "pos_recorded",
)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def expert_labels(n: int) -> list[str]:
    """Anonymized expert labels A, B, C, ... stable for the session lifetime."""
    if not 1 <= n <= 26:
        raise ValidationError("between 1 and 26 experts supported")
    return [chr(ord("A") + i) for i in range(n)]


@dataclass(frozen=True)
class Event:
    index: int
    type: str
    at: str
    payload: dict
    client_token: str | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "type": self.type,
            "at": self.at,
            "payload": self.payload,
            "client_token": self.client_token,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Event":
        return cls(
            index=int(d["index"]),
            type=d["type"],
            at=d["at"],
            payload=d["payload"],
            client_token=d.get("client_token"),
        )


@dataclass
class WorkshopSession:
    id: str
    created: str
    updated: str
    qois: list[QuantityOfInterest]
    experts: list[str]
    events: list[Event] = field(default_factory=list)

    def to_dict(self) -> dict:
        return stringify_numbers(
            {
                "schema": SESSION_SCHEMA,
                "id": self.id,
                "created": self.created,
                "updated": self.updated,
                "qois": [q.to_dict() for q in self.qois],
                "experts": list(self.experts),
                "events": [e.to_dict() for e in self.events],
            }
        )

    @classmethod
    def from_dict(cls, d: dict) -> "WorkshopSession":
        if d.get("schema") != SESSION_SCHEMA:
            raise ValidationError(f"unsupported session schema {d.get('schema')!r}")
        return cls(
            id=d["id"],
            created=d["created"],
            updated=d["updated"],
            qois=[QuantityOfInterest.from_dict(q) for q in d["qois"]],
            experts=list(d["experts"]),
            events=[Event.from_dict(e) for e in d["events"]],
        )


# ---------------------------------------------------------------------------
# derived state


@dataclass
class ExtensionRecord:
    x_qoi: str
    y_qoi: str | None = None
    y_marginal: FittedDistribution | None = None
    schedule: ConditioningSchedule | None = None
    medians: list[tuple[float, float]] = field(default_factory=list)
    transform: str | None = None
    kind: str | None = None
    spread_rule: str | None = None
    median_fn: MedianFunction | None = None
    marginal_summary: dict | None = None
    marginal_fit: FittedDistribution | None = None

    def to_dict(self) -> dict:
        return {
            "x_qoi": self.x_qoi,
            "y_qoi": self.y_qoi,
            "y_marginal": self.y_marginal.to_dict() if self.y_marginal else None,
            "schedule": self.schedule.to_dict() if self.schedule else None,
            "medians": [list(m) for m in self.medians],
            "transform": self.transform,
            "kind": self.kind,
            "spread_rule": self.spread_rule,
            "median_fn": self.median_fn.to_dict() if self.median_fn else None,
            "marginal_summary": self.marginal_summary,
            "marginal_fit": self.marginal_fit.to_dict() if self.marginal_fit else None,
        }


@dataclass
class CopulaRecord:
    qois: tuple[str, ...]
    judgements: tuple[ConcordanceJudgement, ...]
    correlation: list[list[float]]

    def to_dict(self) -> dict:
        return {
            "qois": list(self.qois),
            "judgements": [j.to_dict() for j in self.judgements],
            "correlation": self.correlation,
        }


@dataclass
class DerivedState:
    elicitation: dict[str, ElicitationRecord] = field(default_factory=dict)
    marginal_inputs: dict[str, FittedDistribution] = field(default_factory=dict)
    extension: dict[str, ExtensionRecord] = field(default_factory=dict)
    copula: CopulaRecord | None = None
    pos_runs: list[dict] = field(default_factory=list)
    notes: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "elicitation": {k: v.to_dict() for k, v in sorted(self.elicitation.items())},
            "marginal_inputs": {
                k: v.to_dict() for k, v in sorted(self.marginal_inputs.items())
            },
            "extension": {k: v.to_dict() for k, v in sorted(self.extension.items())},
            "copula": self.copula.to_dict() if self.copula else None,
            "pos_runs": list(self.pos_runs),
            "notes": list(self.notes),
        }


def _judgement_from_payload(payload_judgement: dict) -> JudgementSet:
    return JudgementSet.from_dict(payload_judgement)


def consensus_anchor(state: DerivedState, qoi_id: str) -> FittedDistribution:
    rec = state.elicitation.get(qoi_id)
    if rec is None or rec.consensus is None:
        raise StageError(f"quantity {qoi_id!r} has no consensus fit yet")
    return rec.consensus.distribution


def marginal_for_copula(state: DerivedState, qoi_id: str) -> FittedDistribution:
    """Marginal used in the joint: the extension marginal fit when one exists,
    else the consensus fit."""
    ext = state.extension.get(qoi_id)
    if ext is not None and ext.marginal_fit is not None:
        return ext.marginal_fit
    return consensus_anchor(state, qoi_id)


def _build_conditional_model(state: DerivedState, rec: ExtensionRecord) -> ConditionalModel:
    anchor = consensus_anchor(state, rec.x_qoi)
    knots = list(rec.medians) + [(rec.schedule.anchor, anchor.median)]
    fn = fit_median_function(knots, transform=rec.transform, kind=rec.kind)
    return ConditionalModel(
        y_marginal=rec.y_marginal,
        anchor=anchor,
        anchor_y=rec.schedule.anchor,
        median_fn=fn,
        spread_rule=rec.spread_rule,
    )


def conditional_model_from_state(state: DerivedState, x_qoi: str) -> ConditionalModel:
    rec = state.extension.get(x_qoi)
    if rec is None or rec.median_fn is None:
        raise StageError(f"no committed conditional model for {x_qoi!r}")
    return ConditionalModel(
        y_marginal=rec.y_marginal,
        anchor=consensus_anchor(state, rec.x_qoi),
        anchor_y=rec.schedule.anchor,
        median_fn=rec.median_fn,
        spread_rule=rec.spread_rule,
    )


def copula_model_from_state(state: DerivedState, qois=None, judgements=None) -> CopulaModel:
    if qois is None or judgements is None:
        if state.copula is None:
            raise StageError("no committed copula model in this session")
        qois = state.copula.qois
        judgements = state.copula.judgements
    marginals = [marginal_for_copula(state, q) for q in qois]
    return build_copula(marginals, judgements, qoi_ids=tuple(qois))


def derive_state(session: WorkshopSession) -> DerivedState:
    """Replay the event log into derived records, enforcing the stage machine."""
    state = DerivedState()
    qoi_by_id = {q.id: q for q in session.qois}
    for q in session.qois:
        state.elicitation[q.id] = ElicitationRecord(qoi=q)

    for ev in session.events:
        p = ev.payload
        if ev.type == "judgement_submitted":
            qoi_id = p["qoi"]
            rec = state.elicitation.get(qoi_id)
            if rec is None:
                raise ValidationError(f"unknown quantity {qoi_id!r}")
            if rec.stage != Stage.INDIVIDUAL:
                raise StageError(
                    f"individual judgements for {qoi_id!r} are closed (stage {rec.stage.value})"
                )
            j = _judgement_from_payload(p["judgement"])
            if j.expert not in session.experts:
                raise ValidationError(f"unknown expert {j.expert!r}")
            fit_res = fit_judgement(qoi_by_id[qoi_id], j)
            rec.individual = [(jj, ff) for jj, ff in rec.individual if jj.expert != j.expert]
            rec.individual.append((j, fit_res))
        elif ev.type == "revealed":
            rec = state.elicitation.get(p["qoi"])
            if rec is None:
                raise ValidationError(f"unknown quantity {p['qoi']!r}")
            if rec.stage != Stage.INDIVIDUAL:
                raise StageError(f"{p['qoi']!r} was already revealed (stage {rec.stage.value})")
            if not rec.individual:
                raise StageError("reveal requires at least one individual judgement")
            rec.stage = Stage.DISCUSSION
        elif ev.type == "group_judgement_set":
            rec = state.elicitation.get(p["qoi"])
            if rec is None:
                raise ValidationError(f"unknown quantity {p['qoi']!r}")
            if rec.stage == Stage.INDIVIDUAL:
                raise StageError(
                    "group judgements are only accepted after the reveal/discussion step"
                )
            j = _judgement_from_payload(p["judgement"])
            if j.expert != GROUP_EXPERT:
                raise ValidationError("group judgements must be recorded for RIO")
            rec.group = j
            rec.stage = Stage.GROUP
            rec.consensus = None
            rec.consensus_family = None
        elif ev.type == "consensus_fitted":
            rec = state.elicitation.get(p["qoi"])
            if rec is None:
                raise ValidationError(f"unknown quantity {p['qoi']!r}")
            if rec.stage != Stage.GROUP or rec.group is None:
                raise StageError("consensus fit requires a group judgement (after reveal)")
            family = p["family"]
            rec.consensus = fit_judgement(qoi_by_id[p["qoi"]], rec.group, family=family)
            rec.consensus_family = family
        elif ev.type == "note_added":
            state.notes.append({"qoi": p.get("qoi"), "text": p["text"]})
            if p.get("qoi") in state.elicitation:
                state.elicitation[p["qoi"]].notes.append(p["text"])
        elif ev.type == "y_marginal_set":
            qoi_id = p["qoi"]
            if qoi_id not in qoi_by_id:
                raise ValidationError(f"unknown quantity {qoi_id!r}")
            state.marginal_inputs[qoi_id] = FittedDistribution.from_dict(p["distribution"])
        elif ev.type == "extension_schedule_set":
            x_qoi, y_qoi = p["x_qoi"], p["y_qoi"]
            if x_qoi not in qoi_by_id or y_qoi not in qoi_by_id:
                raise ValidationError("extension schedule names unknown quantities")
            y_marginal = state.marginal_inputs.get(y_qoi)
            if y_marginal is None:
                raise StageError(f"set the marginal distribution for {y_qoi!r} first")
            schedule = schedule_from_marginal(
                y_marginal,
                quantiles=tuple(float(q) for q in p["quantiles"]),
                rounding=float(p["rounding"]),
            )
            rec = state.extension.setdefault(x_qoi, ExtensionRecord(x_qoi=x_qoi))
            rec.y_qoi = y_qoi
            rec.y_marginal = y_marginal
            rec.schedule = schedule
        elif ev.type == "conditional_medians_set":
            rec = state.extension.get(p["x_qoi"])
            if rec is None or rec.schedule is None:
                raise StageError("set the conditioning schedule before the medians")
            medians = [(float(y), float(m)) for y, m in p["medians"]]
            given = {y for y, _ in medians}
            expected = {pt for pt in rec.schedule.points if pt != rec.schedule.anchor}
            if given != expected:
                raise ValidationError(
                    f"conditional medians must cover exactly the non-anchor points "
                    f"{sorted(expected)}, got {sorted(given)}"
                )
            rec.medians = medians
        elif ev.type == "extension_model_committed":
            rec = state.extension.get(p["x_qoi"])
            if rec is None or not rec.medians:
                raise StageError("elicit the conditional medians before committing the model")
            rec.transform = p["transform"]
            rec.kind = p["kind"]
            rec.spread_rule = p["spread_rule"]
            model = _build_conditional_model(state, rec)  # validates anchor consistency
            rec.median_fn = model.median_fn
        elif ev.type == "marginalized":
            rec = state.extension.get(p["x_qoi"])
            if rec is None or rec.median_fn is None:
                raise StageError("commit the conditional model before marginalizing")
            rec.marginal_summary = p["summary"]
            fitted = p["summary"].get("fitted")
            rec.marginal_fit = (
                FittedDistribution.from_dict(fitted["distribution"]) if fitted else None
            )
        elif ev.type == "copula_committed":
            qois = [str(q) for q in p["qois"]]
            judgements = tuple(
                ConcordanceJudgement(
                    pair=tuple(j["pair"]), probability=float(j["probability"])
                )
                for j in p["judgements"]
            )
            model = copula_model_from_state(state, qois, judgements)
            state.copula = CopulaRecord(
                qois=tuple(qois),
                judgements=model.judgements,
                correlation=[list(r) for r in model.correlation],
            )
        elif ev.type == "pos_recorded":
            if state.copula is None:
                raise StageError("commit a copula model before recording a PoS run")
            state.pos_runs.append(
                {
                    "design": p["design"],
                    "rule": p["rule"],
                    "benchmarks": p["benchmarks"],
                    "n_sims": int(p["n_sims"]),
                    "seed": int(p["seed"]),
                    "result": p["result"],
                }
            )
        else:
            raise ValidationError(f"unknown event type {ev.type!r}")
    return state


def derived_hash(session: WorkshopSession) -> str:
    return state_hash(derive_state(session).to_dict())


# ---------------------------------------------------------------------------
# commands: compute heavy payload parts before appending


def marginalize_command(
    session: WorkshopSession,
    x_qoi: str,
    n: int,
    seed: int,
    fit_family: str | None = None,
) -> dict:
    state = derive_state(session)
    model = conditional_model_from_state(state, x_qoi)
    result = marginalize_x(model, n=n, seed=seed, fit_family=fit_family)
    return {
        "x_qoi": x_qoi,
        "n": n,
        "seed": seed,
        "fit_family": fit_family,
        "summary": result.summary_dict(),
    }


def pos_command(
    session: WorkshopSession,
    design: TrialDesign,
    rule: SuccessRule,
    benchmarks: Benchmarks,
    n_sims: int,
    seed: int,
) -> tuple[dict, PosResult]:
    state = derive_state(session)
    joint = copula_model_from_state(state)
    result = simulate_program(joint, design, rule, benchmarks, n_sims, seed)
    payload = {
        "design": design.to_dict(),
        "rule": rule.to_dict(),
        "benchmarks": benchmarks.to_dict(),
        "n_sims": n_sims,
        "seed": seed,
        "result": result.to_dict(),
    }
    return payload, result


# ---------------------------------------------------------------------------
# persistence


class SessionStore:
    """One JSON file per session; atomic writes; one writer at a time."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.json"

    def _lock(self, session_id: str) -> FileLock:
        return FileLock(str(self._path(session_id)) + ".lock")

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.data_dir.glob("*.json"))

    def create(self, qois, experts, session_id: str | None = None) -> WorkshopSession:
        if isinstance(experts, int):
            experts = expert_labels(experts)
        experts = list(experts)
        if len(set(experts)) != len(experts) or not experts:
            raise ValidationError("expert labels must be nonempty and unique")
        qois = [q if isinstance(q, QuantityOfInterest) else QuantityOfInterest.from_dict(q) for q in qois]
        if len({q.id for q in qois}) != len(qois) or not qois:
            raise ValidationError("quantity ids must be nonempty and unique")
        sid = session_id or uuid.uuid4().hex[:12]
        if self._path(sid).exists():
            raise ValidationError(f"session {sid!r} already exists")
        now = _now()
        session = WorkshopSession(
            id=sid, created=now, updated=now, qois=qois, experts=experts
        )
        self._write(session)
        return session

    def load(self, session_id: str) -> WorkshopSession:
        path = self._path(session_id)
        if not path.exists():
            raise SessionNotFoundError(f"unknown session {session_id!r}")
        return load_session_file(path)

    def append(
        self,
        session_id: str,
        event_type: str,
        payload: dict,
        client_token: str | None = None,
    ) -> tuple[WorkshopSession, Event, bool]:
        """Validate, persist and return (session, event, appended).

        ``appended`` is False when an event with the same client token already
        exists (idempotent retry).
        """
        if event_type not in EVENT_TYPES:
            raise ValidationError(f"unknown event type {event_type!r}")
        lock = self._lock(session_id)
        try:
            lock.acquire(timeout=0)
        except Timeout:
            raise SessionLockError(
                f"session {session_id!r} is locked by another writer"
            ) from None
        try:
            session = self.load(session_id)
            if client_token is not None:
                for ev in session.events:
                    if ev.client_token == client_token:
                        return session, ev, False
            event = Event(
                index=len(session.events),
                type=event_type,
                at=_now(),
                payload=stringify_numbers(payload),
                client_token=client_token,
            )
            session.events.append(event)
            derive_state(session)  # stage machine validation before persisting
            session.updated = event.at
            self._write(session)
            return session, event, True
        except Exception:
            raise
        finally:
            lock.release()

    def _write(self, session: WorkshopSession):
        path = self._path(session.id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(session.to_dict(), indent=1, sort_keys=True))
        os.replace(tmp, path)


def load_session_file(path) -> WorkshopSession:
    return WorkshopSession.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# report export


def export_report(session: WorkshopSession) -> dict:
    """SHELF-template-shaped report: judgement tables, fitted parameters,
    discussion notes and figure data, as a JSON document plus rendered text."""
    state = derive_state(session)
    if not any(rec.consensus for rec in state.elicitation.values()):
        raise ValidationError("a report needs at least one consensus distribution")

    qois = []
    for qoi_id, rec in sorted(state.elicitation.items()):
        entry = {
            "qoi": rec.qoi.to_dict(),
            "stage": rec.stage.value,
            "individual_judgements": [
                {"judgement": j.to_dict(), "fit": fr.to_dict()} for j, fr in rec.individual
            ],
            "group_judgement": rec.group.to_dict() if rec.group else None,
            "consensus": rec.consensus.to_dict() if rec.consensus else None,
            "consensus_family": rec.consensus_family,
            "notes": list(rec.notes),
            "comparison": reveal_summary(rec) if rec.individual else None,
        }
        qois.append(entry)

    doc = {
        "schema": "report/v1",
        "session": {
            "id": session.id,
            "created": session.created,
            "updated": session.updated,
            "experts": list(session.experts),
        },
        "quantities": qois,
        "extension": {k: v.to_dict() for k, v in sorted(state.extension.items())},
        "copula": state.copula.to_dict() if state.copula else None,
        "pos_runs": state.pos_runs,
        "discussion_notes": state.notes,
    }
    return stringify_numbers(doc)


def _fmt(value) -> str:
    """Render decimal-string numbers and lists of them without quotes."""
    if value is None:
        return "-"
    if isinstance(value, (list, tuple)):
        return "(" + ", ".join(_fmt(v) for v in value) + ")"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}: {_fmt(v)}" for k, v in value.items()) + "}"
    return str(value)


def render_report_text(report: dict) -> str:
    lines = [
        "ELICITATION WORKSHOP REPORT",
        f"session {report['session']['id']}  (created {report['session']['created']})",
        f"experts: {', '.join(report['session']['experts'])}",
        "",
    ]
    for entry in report["quantities"]:
        q = entry["qoi"]
        lines.append(f"Quantity {q['id']}: {q['label']} [{q['scale']}]")
        for item in entry["individual_judgements"]:
            j = item["judgement"]
            lines.append(
                f"  expert {j['expert']}: range {_fmt(j['plausible_range'])}, "
                f"median {_fmt(j['median'])}, tertiles {_fmt(j['tertiles'])}, "
                f"quartiles {_fmt(j['quartiles'])}"
            )
        if entry["group_judgement"]:
            g = entry["group_judgement"]
            lines.append(f"  RIO statements: {_fmt(g['probability_statements'])}")
        if entry["consensus"]:
            c = entry["consensus"]["distribution"]
            lines.append(
                f"  consensus: {c['family']} params {_fmt(c['params'])} on "
                f"[{_fmt(c['support']['lower'])}, {_fmt(c['support']['upper'])}] "
                f"(residual {_fmt(entry['consensus']['residual'])})"
            )
        if entry["notes"]:
            lines.append("  discussion:")
            lines.extend(f"    - {n}" for n in entry["notes"])
        lines.append("")
    if report["copula"]:
        lines.append("Joint distribution (Gaussian copula)")
        for j in report["copula"]["judgements"]:
            lines.append(f"  concordance {j['pair'][0]}-{j['pair'][1]}: {j['probability']}")
        lines.append(f"  correlation matrix: {report['copula']['correlation']}")
        lines.append("")
    for run in report["pos_runs"]:
        res = run["result"]
        lines.append(
            f"PoS run (sims {run['n_sims']}, seed {run['seed']}): pos {res['pos']}, "
            f"trial significance {res['p_trial_success']}"
        )
    if report["discussion_notes"]:
        lines.append("General notes:")
        lines.extend(f"  - {n['text']}" for n in report["discussion_notes"])
    return "\n".join(lines)
