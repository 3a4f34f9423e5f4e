"""HTTP surface for the annotation workflow.

Thin request/response adapters around AnnotationService; all state flows
through the append-only log underneath.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel, Field

from .annotation import (
    AnnotationService,
    SequencingError,
    UnknownSessionError,
    ValidationError,
)
from .corpus import gold_to_record
from .exporting import DEFAULT_TOKEN_BUDGET, TAGS_FROM_BOTH, export_training_examples


class SessionRequest(BaseModel):
    annotator_id: str
    narrative_id: str | None = None
    batch_id: str | None = None


class SpanPayload(BaseModel):
    char_start: int
    char_end: int
    text: str


class AnnotationRequest(BaseModel):
    position: int
    selected_candidate_ids: list[str] = Field(default_factory=list)
    added_spans: list[SpanPayload] = Field(default_factory=list)


class BatchRequest(BaseModel):
    annotators: list[str]
    n_batches: int
    seed: int
    narrative_ids: list[str] | None = None


class AdjudicateRequest(BaseModel):
    policy: str = "majority"


def create_app(service: AnnotationService) -> FastAPI:
    app = FastAPI(title="narevents annotation service")

    def _session_payload(session_id: str) -> dict:
        session = service.session(session_id)
        return {
            "session_id": session.id,
            "annotator_id": session.annotator_id,
            "narrative_id": session.narrative_id,
            "cursor": session.cursor,
        }

    @app.post("/sessions")
    def create_session(request: SessionRequest) -> dict:
        try:
            session = service.create_session(
                annotator_id=request.annotator_id,
                narrative_id=request.narrative_id,
                batch_id=request.batch_id,
            )
        except ValidationError as err:
            raise HTTPException(status_code=400, detail=str(err)) from err
        return _session_payload(session.id)

    @app.get("/sessions/{session_id}/current")
    def current_unit(session_id: str) -> dict:
        try:
            return service.current_unit(session_id)
        except UnknownSessionError as err:
            raise HTTPException(status_code=404, detail=str(err)) from err

    @app.post("/sessions/{session_id}/annotations")
    def submit_annotation(session_id: str, request: AnnotationRequest) -> dict:
        try:
            service.submit_annotation(
                session_id,
                position=request.position,
                selected_candidate_ids=request.selected_candidate_ids,
                added_spans=[
                    (span.char_start, span.char_end, span.text)
                    for span in request.added_spans
                ],
            )
        except UnknownSessionError as err:
            raise HTTPException(status_code=404, detail=str(err)) from err
        except SequencingError as err:
            raise HTTPException(status_code=409, detail=str(err)) from err
        except ValidationError as err:
            raise HTTPException(status_code=422, detail=str(err)) from err
        return _session_payload(session_id)

    @app.post("/batches")
    def assemble(request: BatchRequest) -> dict:
        try:
            batches = service.assemble_batches(
                annotators=request.annotators,
                n_batches=request.n_batches,
                seed=request.seed,
                narrative_ids=request.narrative_ids,
            )
        except (ValidationError, KeyError) as err:
            raise HTTPException(status_code=400, detail=str(err)) from err
        except Exception as err:  # AssemblyError
            raise HTTPException(status_code=422, detail=str(err)) from err
        return {
            "batches": [
                {
                    "id": b.id,
                    "overlap_narrative": b.overlap_narrative,
                    "assignment": {a: list(ids) for a, ids in sorted(b.assignment.items())},
                }
                for b in batches
            ]
        }

    @app.get("/batches/{batch_id}/iaa")
    def batch_iaa(batch_id: str) -> dict:
        try:
            return service.monitor_overlap_iaa(batch_id)
        except ValidationError as err:
            raise HTTPException(status_code=404, detail=str(err)) from err

    @app.post("/gold/adjudicate")
    def adjudicate(request: AdjudicateRequest) -> dict:
        try:
            gold = service.adjudicate_gold(policy=request.policy)
        except ValidationError as err:
            raise HTTPException(status_code=400, detail=str(err)) from err
        return {"gold": [gold_to_record(record) for record in gold]}

    @app.get("/export")
    def export(
        setting: str = Query(...),
        budget: int = Query(DEFAULT_TOKEN_BUDGET),
        tags_from: str = Query(TAGS_FROM_BOTH),
        policy: str = Query("majority"),
    ) -> dict:
        try:
            gold_records = service.adjudicate_gold(policy=policy)
            grouped: dict = {}
            for record in gold_records:
                grouped.setdefault(
                    (record.narrative_id, record.sentence_position), []
                ).append(record)
            records = list(
                export_training_examples(
                    grouped,
                    list(service.narratives.values()),
                    service.candidates,
                    setting=setting,
                    token_budget=budget,
                    tags_from=tags_from,
                )
            )
        except (ValidationError, ValueError) as err:
            raise HTTPException(status_code=400, detail=str(err)) from err
        return {"records": records}

    return app
