"""HTTP surface for the workshop console.

Every mutating endpoint appends exactly one event (idempotent under a client
token); preview endpoints are pure and never touch the log.  Errors are
returned as a structured envelope {code, message, details}.
"""

from __future__ import annotations

import dataclasses
import struct
import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Header, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from . import copula as copula_mod
from .distributions import FittedDistribution
from .errors import ElicitError, SessionNotFoundError, StageError
from .extension import conditional
from .judgements import JudgementSet, QuantityOfInterest, candidate_fits, reveal_summary
from .pos import Benchmarks, SuccessRule, TrialDesign
from .session import (
    SessionStore,
    _build_conditional_model,
    copula_model_from_state,
    derive_state,
    derived_hash,
    export_report,
    marginalize_command,
    pos_command,
    render_report_text,
)

API_SCHEMA = "api/v1"

_STATUS = {
    "validation": 422,
    "configuration": 400,
    "fit_failure": 422,
    "schedule": 422,
    "transform": 422,
    "correlation": 422,
    "stage": 409,
    "locked": 409,
    "not_found": 404,
    "simulation": 422,
    "error": 500,
}


class SupportBody(BaseModel):
    # accepts numbers or the strings "inf"/"-inf"
    lower: float | str
    upper: float | str


class QoiBody(BaseModel):
    id: str
    label: str
    scale: str
    support: SupportBody
    definition: str = ""


class CreateSessionBody(BaseModel):
    qois: list[QoiBody]
    experts: int | list[str]


class ConstraintBody(BaseModel):
    value: float
    cum_prob: float


class JudgementBody(BaseModel):
    expert: str
    qoi: str
    plausible_range: tuple[float, float]
    median: float | None = None
    tertiles: tuple[float, float] | None = None
    quartiles: tuple[float, float] | None = None
    probability_statements: list[ConstraintBody] | None = None
    client_token: str | None = None

    def to_judgement_dict(self) -> dict:
        return {
            "expert": self.expert,
            "qoi": self.qoi,
            "plausible_range": list(self.plausible_range),
            "median": self.median,
            "tertiles": list(self.tertiles) if self.tertiles else None,
            "quartiles": list(self.quartiles) if self.quartiles else None,
            "probability_statements": (
                [c.model_dump() for c in self.probability_statements]
                if self.probability_statements
                else None
            ),
        }


class GroupJudgementBody(BaseModel):
    plausible_range: tuple[float, float]
    median: float | None = None
    tertiles: tuple[float, float] | None = None
    quartiles: tuple[float, float] | None = None
    probability_statements: list[ConstraintBody] | None = None
    client_token: str | None = None


class ConsensusBody(BaseModel):
    family: str
    client_token: str | None = None


class FitPreviewBody(BaseModel):
    plausible_range: tuple[float, float]
    median: float | None = None
    tertiles: tuple[float, float] | None = None
    quartiles: tuple[float, float] | None = None
    probability_statements: list[ConstraintBody] | None = None


class MarginalBody(BaseModel):
    qoi: str
    distribution: dict
    client_token: str | None = None


class ScheduleBody(BaseModel):
    x_qoi: str
    y_qoi: str
    quantiles: list[float] = Field(default=[0.05, 0.25, 0.5, 0.75, 0.95])
    rounding: float = 0.0
    client_token: str | None = None


class MediansBody(BaseModel):
    x_qoi: str
    medians: list[tuple[float, float]]
    client_token: str | None = None


class ExtensionCommitBody(BaseModel):
    x_qoi: str
    transform: str = "log"
    kind: str = "piecewise-linear"
    spread_rule: str = "constant-on-transformed-scale"
    client_token: str | None = None


class ExtensionPreviewBody(BaseModel):
    x_qoi: str
    transform: str = "log"
    kind: str = "piecewise-linear"
    spread_rule: str = "constant-on-transformed-scale"
    quantiles: list[float] = Field(default=[0.05, 0.25, 0.5, 0.75, 0.95])


class MarginalizeBody(BaseModel):
    x_qoi: str
    n: int = Field(gt=0)
    seed: int
    fit_family: str | None = None
    client_token: str | None = None


class ExploreBody(BaseModel):
    qois: tuple[str, str]
    concordance: float
    n: int = copula_mod.DEFAULT_PREVIEW_POINTS
    seed: int


class CommitCopulaBody(BaseModel):
    qois: list[str]
    judgements: list[dict]
    client_token: str | None = None


class NoteBody(BaseModel):
    text: str
    qoi: str | None = None
    client_token: str | None = None


class PosRunBody(BaseModel):
    design: dict
    rule: dict
    benchmarks: dict
    n_sims: int = Field(gt=0)
    seed: int
    client_token: str | None = None


class PosSensitivityBody(BaseModel):
    design: dict
    rule: dict
    benchmarks: dict
    knobs: dict[str, list[float]]
    n_sims: int = Field(gt=0, le=200_000)
    seed: int


class JobRegistry:
    def __init__(self):
        self._jobs: dict[str, dict] = {}
        self._lock = threading.Lock()

    def create(self) -> str:
        job_id = uuid.uuid4().hex[:10]
        with self._lock:
            self._jobs[job_id] = {"status": "queued", "result": None, "error": None}
        return job_id

    def set(self, job_id: str, **kwargs):
        with self._lock:
            self._jobs[job_id].update(kwargs)

    def get(self, job_id: str) -> dict:
        with self._lock:
            job = self._jobs.get(job_id)
            return dict(job) if job else None


def create_app(data_dir: str | Path) -> FastAPI:
    app = FastAPI(title="elicitation engine", version=API_SCHEMA)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["X-Shape", "X-Seed", "X-Order"],
    )
    store = SessionStore(data_dir)
    jobs = JobRegistry()

    @app.exception_handler(ElicitError)
    async def elicit_error_handler(request: Request, exc: ElicitError):
        envelope = exc.envelope()
        if hasattr(exc, "diagnosis") and exc.diagnosis is not None:
            envelope["details"] = exc.diagnosis.to_dict()
        return JSONResponse(status_code=_STATUS.get(exc.code, 500), content=envelope)

    def session_view(session) -> dict:
        state = derive_state(session)
        return {
            "id": session.id,
            "created": session.created,
            "updated": session.updated,
            "experts": list(session.experts),
            "qois": [q.to_dict() for q in session.qois],
            "n_events": len(session.events),
            "events": [
                {"index": e.index, "type": e.type, "at": e.at} for e in session.events
            ],
            "stages": {k: v.stage.value for k, v in state.elicitation.items()},
            "derived": state.to_dict(),
            "derived_hash": derived_hash(session),
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        qois = [
            QuantityOfInterest.from_dict(q.model_dump()) for q in body.qois
        ]
        session = store.create(qois=qois, experts=body.experts)
        return session_view(session)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return session_view(store.load(sid))

    @app.post("/sessions/{sid}/judgements")
    def submit_judgement(sid: str, body: JudgementBody):
        session, event, appended = store.append(
            sid,
            "judgement_submitted",
            {"qoi": body.qoi, "judgement": body.to_judgement_dict()},
            client_token=body.client_token,
        )
        return {"event_index": event.index, "appended": appended}

    @app.get("/sessions/{sid}/qois/{qoi}/comparison")
    def comparison(sid: str, qoi: str):
        state = derive_state(store.load(sid))
        if qoi not in state.elicitation:
            raise SessionNotFoundError(f"unknown quantity {qoi!r}")
        return reveal_summary(state.elicitation[qoi])

    @app.post("/sessions/{sid}/qois/{qoi}/reveal")
    def reveal(sid: str, qoi: str, client_token: str | None = None):
        session, event, appended = store.append(
            sid, "revealed", {"qoi": qoi}, client_token=client_token
        )
        state = derive_state(session)
        return {
            "event_index": event.index,
            "appended": appended,
            "comparison": reveal_summary(state.elicitation[qoi]),
        }

    @app.post("/sessions/{sid}/qois/{qoi}/group-judgement")
    def set_group_judgement(sid: str, qoi: str, body: GroupJudgementBody):
        judgement = {
            "expert": "RIO",
            "qoi": qoi,
            "plausible_range": list(body.plausible_range),
            "median": body.median,
            "tertiles": list(body.tertiles) if body.tertiles else None,
            "quartiles": list(body.quartiles) if body.quartiles else None,
            "probability_statements": (
                [c.model_dump() for c in body.probability_statements]
                if body.probability_statements
                else None
            ),
        }
        session, event, appended = store.append(
            sid,
            "group_judgement_set",
            {"qoi": qoi, "judgement": judgement},
            client_token=body.client_token,
        )
        return {"event_index": event.index, "appended": appended}

    @app.post("/sessions/{sid}/qois/{qoi}/fit-preview")
    def fit_preview(sid: str, qoi: str, body: FitPreviewBody):
        session = store.load(sid)
        qoi_obj = next((q for q in session.qois if q.id == qoi), None)
        if qoi_obj is None:
            raise SessionNotFoundError(f"unknown quantity {qoi!r}")
        judgement = JudgementSet.from_dict(
            {
                "expert": "RIO",
                "qoi": qoi,
                "plausible_range": list(body.plausible_range),
                "median": body.median,
                "tertiles": list(body.tertiles) if body.tertiles else None,
                "quartiles": list(body.quartiles) if body.quartiles else None,
                "probability_statements": (
                    [c.model_dump() for c in body.probability_statements]
                    if body.probability_statements
                    else None
                ),
            }
        )
        fits = candidate_fits(qoi_obj, judgement)
        out = []
        for fr in fits:
            d = fr.distribution
            out.append(
                {
                    "family": fr.family,
                    "params": list(d.params),
                    "residual": fr.residual,
                    "median": d.median,
                    "interval90": [d.quantile(0.05), d.quantile(0.95)],
                }
            )
        return {"fits": out}

    @app.post("/sessions/{sid}/qois/{qoi}/consensus")
    def fit_consensus(sid: str, qoi: str, body: ConsensusBody):
        session, event, appended = store.append(
            sid,
            "consensus_fitted",
            {"qoi": qoi, "family": body.family},
            client_token=body.client_token,
        )
        state = derive_state(session)
        rec = state.elicitation[qoi]
        return {
            "event_index": event.index,
            "appended": appended,
            "consensus": rec.consensus.to_dict(),
        }

    @app.post("/sessions/{sid}/extension/y-marginal")
    def set_y_marginal(sid: str, body: MarginalBody):
        FittedDistribution.from_dict(body.distribution)  # validate before appending
        session, event, appended = store.append(
            sid,
            "y_marginal_set",
            {"qoi": body.qoi, "distribution": body.distribution},
            client_token=body.client_token,
        )
        return {"event_index": event.index, "appended": appended}

    @app.post("/sessions/{sid}/extension/schedule")
    def set_schedule(sid: str, body: ScheduleBody):
        session, event, appended = store.append(
            sid,
            "extension_schedule_set",
            {"x_qoi": body.x_qoi, "y_qoi": body.y_qoi,
             "quantiles": body.quantiles, "rounding": body.rounding},
            client_token=body.client_token,
        )
        state = derive_state(session)
        return {
            "event_index": event.index,
            "appended": appended,
            "schedule": state.extension[body.x_qoi].schedule.to_dict(),
        }

    @app.post("/sessions/{sid}/extension/medians")
    def set_medians(sid: str, body: MediansBody):
        session, event, appended = store.append(
            sid,
            "conditional_medians_set",
            {"x_qoi": body.x_qoi, "medians": [list(m) for m in body.medians]},
            client_token=body.client_token,
        )
        return {"event_index": event.index, "appended": appended}

    @app.post("/sessions/{sid}/extension/preview")
    def extension_preview(sid: str, body: ExtensionPreviewBody):
        session = store.load(sid)
        state = derive_state(session)
        rec = state.extension.get(body.x_qoi)
        if rec is None or rec.schedule is None or not rec.medians:
            raise StageError("schedule and medians are needed before previewing the model")
        trial = dataclasses.replace(
            rec, transform=body.transform, kind=body.kind, spread_rule=body.spread_rule
        )
        model = _build_conditional_model(state, trial)
        fan = []
        for y in trial.schedule.points:
            cond = conditional(model, y)
            fan.append(
                {
                    "y": y,
                    "median": cond.median,
                    "quantiles": {str(q): cond.quantile(q) for q in body.quantiles},
                    "extrapolated": cond.extrapolated,
                    "truncated_mass": cond.truncated_mass,
                    "truncation_warning": cond.truncation_warning,
                }
            )
        return {
            "median_fn": model.median_fn.to_dict(),
            "conditionals": fan,
        }

    @app.post("/sessions/{sid}/extension/commit")
    def extension_commit(sid: str, body: ExtensionCommitBody):
        session, event, appended = store.append(
            sid,
            "extension_model_committed",
            {"x_qoi": body.x_qoi, "transform": body.transform,
             "kind": body.kind, "spread_rule": body.spread_rule},
            client_token=body.client_token,
        )
        return {"event_index": event.index, "appended": appended}

    @app.post("/sessions/{sid}/extension/marginalize")
    def extension_marginalize(sid: str, body: MarginalizeBody):
        session = store.load(sid)
        payload = marginalize_command(
            session, body.x_qoi, n=body.n, seed=body.seed, fit_family=body.fit_family
        )
        session, event, appended = store.append(
            sid, "marginalized", payload, client_token=body.client_token
        )
        return {
            "event_index": event.index,
            "appended": appended,
            "summary": payload["summary"],
        }

    @app.post("/sessions/{sid}/copula/explore")
    def copula_explore(
        sid: str,
        body: ExploreBody,
        accept: str | None = Header(default=None),
    ):
        session = store.load(sid)
        state = derive_state(session)
        qois = tuple(body.qois)
        base = copula_model_from_state(
            state,
            qois,
            [copula_mod.ConcordanceJudgement(pair=qois, probability=0.5)],
        )
        result = copula_mod.explore(
            base, body.concordance, pair=qois, n=body.n, seed=body.seed
        )
        if accept == "application/octet-stream":
            # column-major float64 block; shape and seed ride in headers
            arr = np.asfortranarray(result.samples)
            payload = struct.pack(
                f"<{arr.size}d", *arr.flatten(order="F")
            )
            return Response(
                content=payload,
                media_type="application/octet-stream",
                headers={
                    "X-Shape": f"{arr.shape[0]},{arr.shape[1]}",
                    "X-Seed": str(result.seed),
                    "X-Order": "column-major",
                },
            )
        return result.to_dict(include_samples=True)

    @app.post("/sessions/{sid}/copula/commit")
    def copula_commit(sid: str, body: CommitCopulaBody):
        session, event, appended = store.append(
            sid,
            "copula_committed",
            {"qois": body.qois, "judgements": body.judgements},
            client_token=body.client_token,
        )
        state = derive_state(session)
        return {
            "event_index": event.index,
            "appended": appended,
            "copula": state.copula.to_dict(),
        }

    @app.post("/sessions/{sid}/notes")
    def add_note(sid: str, body: NoteBody):
        session, event, appended = store.append(
            sid,
            "note_added",
            {"qoi": body.qoi, "text": body.text},
            client_token=body.client_token,
        )
        return {"event_index": event.index, "appended": appended}

    @app.post("/sessions/{sid}/pos/sensitivity")
    def pos_sensitivity(sid: str, body: PosSensitivityBody):
        from .pos import sensitivity as run_sensitivity

        session = store.load(sid)
        state = derive_state(session)
        joint = copula_model_from_state(state)
        rows = run_sensitivity(
            joint,
            TrialDesign.from_dict(body.design),
            SuccessRule.from_dict(body.rule),
            Benchmarks.from_dict(body.benchmarks),
            body.knobs,
            n_sims=body.n_sims,
            seed=body.seed,
        )
        return {"rows": [r.to_dict() for r in rows], "seed": body.seed}

    @app.post("/sessions/{sid}/pos/run", status_code=202)
    def pos_run(sid: str, body: PosRunBody):
        session = store.load(sid)  # fail fast on unknown session
        design = TrialDesign.from_dict(body.design)
        rule = SuccessRule.from_dict(body.rule)
        benchmarks = Benchmarks.from_dict(body.benchmarks)
        job_id = jobs.create()

        def work():
            jobs.set(job_id, status="running")
            try:
                payload, result = pos_command(
                    store.load(sid), design, rule, benchmarks, body.n_sims, body.seed
                )
                store.append(sid, "pos_recorded", payload, client_token=body.client_token)
                jobs.set(job_id, status="done", result=result.to_dict())
            except ElicitError as exc:
                jobs.set(job_id, status="failed", error=exc.envelope())
            except Exception as exc:  # pragma: no cover - defensive
                jobs.set(job_id, status="failed",
                         error={"code": "error", "message": str(exc), "details": None})

        threading.Thread(target=work, daemon=True).start()
        return {"job_id": job_id}

    @app.get("/sessions/{sid}/pos/jobs/{job_id}")
    def pos_status(sid: str, job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise SessionNotFoundError(f"unknown job {job_id!r}")
        return job

    @app.get("/sessions/{sid}/export")
    def export_json(sid: str):
        return export_report(store.load(sid))

    @app.get("/sessions/{sid}/export.txt")
    def export_text(sid: str):
        report = export_report(store.load(sid))
        return PlainTextResponse(render_report_text(report))

    return app
