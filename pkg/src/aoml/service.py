"""Annotation/review HTTP backend for the browser UI.

JSON over HTTP/1.1 against a project directory; every response carries
``X-AOML-Version: 1``.  Writes are annotation PUTs and review verdicts, both
validated through the annotate-module invariants before anything is
persisted, so the store can never hold an invalid document.  Concurrent
edits are fenced by revision tokens (content hashes): a stale PUT gets 409
and changes nothing.  Model inference endpoints are read-only.
"""

from __future__ import annotations

import datetime
import hashlib
import json
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .annotate import parse_annotation_file
from .corpus import ReviewDocument, tokenize
from .encoder import load_checkpoint
from .errors import AomlError
from .evalmetrics import read_curve
from .ner import predict_ner
from .project import Project
from .relex import DEFAULT_THRESHOLD, predict_rel

SCHEMA_VERSION = "1"


class AnnotationsIn(BaseModel):
    revision: str | None = None
    entities: list[dict]
    relations: list[dict]


class PredictIn(BaseModel):
    doc_id: str | None = None
    text: str | None = None
    threshold: float = DEFAULT_THRESHOLD


class ReviewIn(BaseModel):
    verdict: str
    annotations: dict | None = None
    note: str | None = None


def _revision_of(blob: bytes | None) -> str:
    if blob is None:
        return ""
    return hashlib.sha256(blob).hexdigest()


def _error(status: int, name: str, detail: str) -> JSONResponse:
    return JSONResponse({"error": name, "detail": detail}, status_code=status)


def _mention_payload(doc_text: str, tokens, mention) -> dict:
    start = tokens[mention.token_start].start
    end = tokens[mention.token_end - 1].end
    payload = {"token_start": mention.token_start,
               "token_end": mention.token_end,
               "start": start, "end": end,
               "text": doc_text[start:end], "label": mention.label.value}
    if mention.confidence is not None:
        payload["confidence"] = mention.confidence
    return payload


def build_app(project_root: str | Path, ui_dir: str | Path | None = None) -> FastAPI:
    project = Project(project_root)
    app = FastAPI(title="aoml annotation service")
    state: dict = {"models": None}

    @app.middleware("http")
    async def version_header(request: Request, call_next):
        response: Response = await call_next(request)
        response.headers["X-AOML-Version"] = SCHEMA_VERSION
        return response

    def corpus_docs() -> list[ReviewDocument]:
        if not project.corpus_path.exists():
            return []
        return project.load_gold_corpus()

    def find_doc(doc_id: str) -> ReviewDocument | None:
        for doc in corpus_docs() + project.load_unlabeled():
            if doc.id == doc_id:
                return doc
        return None

    def current_annotation(doc_id: str) -> tuple[bytes | None, str]:
        path = project.annotation_path(doc_id)
        blob = path.read_bytes() if path.exists() else None
        return blob, _revision_of(blob)

    def models():
        if state["models"] is None:
            ner_path = project.checkpoint_path("NER")
            rel_path = project.checkpoint_path("REL")
            for path in (ner_path, rel_path):
                if not path.exists():
                    raise AomlError(f"missing checkpoint: {path}")
            state["models"] = (load_checkpoint(ner_path, expect_role="NER"),
                               load_checkpoint(rel_path, expect_role="REL"))
        return state["models"]

    # --- documents ----------------------------------------------------------

    @app.get("/api/documents")
    def list_documents(page: int = 1, page_size: int = 20):
        docs = corpus_docs()
        start = (page - 1) * page_size
        window = docs[start:start + page_size]
        return {"total": len(docs), "page": page, "page_size": page_size,
                "documents": [{"id": d.id,
                               "annotated": project.has_annotation(d.id),
                               "preview": d.text[:80]} for d in window]}

    @app.get("/api/documents/{doc_id}")
    def get_document(doc_id: str):
        doc = find_doc(doc_id)
        if doc is None:
            return _error(404, "UnknownDocument", f"no document {doc_id!r}")
        blob, revision = current_annotation(doc_id)
        tokens = tokenize(doc.text)
        return {"id": doc.id, "text": doc.text, "rating": doc.rating,
                "date": doc.date, "source": doc.source,
                "tokens": [{"surface": t.surface, "start": t.start,
                            "end": t.end} for t in tokens],
                "annotations": json.loads(blob) if blob else None,
                "revision": revision}

    @app.put("/api/documents/{doc_id}/annotations")
    def put_annotations(doc_id: str, body: AnnotationsIn):
        doc = next((d for d in corpus_docs() if d.id == doc_id), None)
        if doc is None:
            return _error(404, "UnknownDocument", f"no document {doc_id!r}")
        _, revision = current_annotation(doc_id)
        if (body.revision or "") != revision:
            return _error(409, "StaleRevision",
                          "annotation changed since it was loaded; reload")
        candidate = {"id": doc.id, "text": doc.text,
                     "entities": body.entities, "relations": body.relations}
        for key in ("rating", "date", "source"):
            value = getattr(doc, key)
            if value is not None:
                candidate[key] = value
        try:
            ann = parse_annotation_file(json.dumps(candidate))
        except AomlError as exc:
            return _error(400, type(exc).__name__, str(exc))
        blob = project.save_annotation(ann)
        return {"annotations": json.loads(blob), "revision": _revision_of(blob)}

    # --- inference ----------------------------------------------------------

    @app.post("/api/predict")
    def predict(body: PredictIn):
        if body.doc_id is not None:
            doc = find_doc(body.doc_id)
            if doc is None:
                return _error(404, "UnknownDocument", f"no document {body.doc_id!r}")
        elif body.text:
            doc = ReviewDocument(id="adhoc", text=body.text)
        else:
            return _error(400, "BadRequest", "provide doc_id or text")
        try:
            ner_model, rel_model = models()
        except AomlError as exc:
            return _error(400, type(exc).__name__, str(exc))
        tokens = tokenize(doc.text)
        mentions = predict_ner(ner_model, doc)
        predictions = predict_rel(rel_model, doc, mentions,
                                  threshold=body.threshold)
        return {"doc_id": doc.id, "text": doc.text,
                "mentions": [_mention_payload(doc.text, tokens, m)
                             for m in mentions],
                "relations": [{"head": _mention_payload(doc.text, tokens, p.head),
                               "tail": _mention_payload(doc.text, tokens, p.tail),
                               "label": p.label,
                               "probability": p.probability}
                              for p in predictions]}

    # --- review loop ----------------------------------------------------------

    def queue_entries() -> list[dict]:
        decided = project.decided_ids()
        entries = []
        for record in project.read_jsonl(project.queue_path):
            doc_id = record["annotation"]["id"]
            if doc_id in decided:
                continue
            entries.append({"doc_id": doc_id,
                            "text": record["annotation"]["text"],
                            "annotation": record["annotation"],
                            "mention_confidences": record["mention_confidences"],
                            "relation_probabilities":
                                record["relation_probabilities"],
                            "mean_confidence": record["mean_confidence"]})
        entries.sort(key=lambda e: (-e["mean_confidence"], e["doc_id"]))
        return entries

    @app.get("/api/review/queue")
    def review_queue():
        return {"queue": queue_entries()}

    @app.post("/api/review/{doc_id}")
    def review(doc_id: str, body: ReviewIn):
        if body.verdict not in ("accept", "reject", "edit"):
            return _error(400, "BadVerdict",
                          "verdict must be accept, reject, or edit")
        entry = next((e for e in queue_entries() if e["doc_id"] == doc_id), None)
        if entry is None:
            return _error(404, "NotQueued", f"document {doc_id!r} is not queued")
        if body.verdict == "edit":
            if body.annotations is None:
                return _error(400, "BadRequest", "edit verdict needs annotations")
            payload = dict(body.annotations)
            payload["id"] = doc_id
            payload.setdefault("text", entry["text"])
        else:
            payload = entry["annotation"]
        try:
            ann = parse_annotation_file(json.dumps(payload))
        except AomlError as exc:
            return _error(400, type(exc).__name__, str(exc))
        if body.verdict in ("accept", "edit"):
            project.adopt_document(ann)
        project.append_jsonl(project.decisions_path, {
            "doc_id": doc_id, "verdict": body.verdict, "note": body.note,
            "timestamp": datetime.datetime.now().isoformat(timespec="seconds")})
        return {"status": "ok", "doc_id": doc_id, "verdict": body.verdict}

    # --- training curves ------------------------------------------------------

    @app.get("/api/runs")
    def list_runs():
        if not project.runs_dir.exists():
            return {"runs": []}
        return {"runs": sorted(p.name for p in project.runs_dir.iterdir()
                               if p.is_dir())}

    @app.get("/api/runs/{run}/curve")
    def run_curve(run: str):
        run_dir = project.runs_dir / run
        if not run_dir.is_dir():
            return _error(404, "UnknownRun", f"no run {run!r}")
        payload: dict = {}
        for name in ("ner", "rel"):
            path = run_dir / f"{name}_curve.csv"
            if path.exists():
                payload[name] = [vars(p) for p in read_curve(path)]
            else:
                payload[name] = None
        mlm = run_dir / "mlm_loss.csv"
        if mlm.exists():
            rows = mlm.read_text().strip().split("\n")[1:]
            payload["mlm"] = [{"epoch": int(r.split(",")[0]),
                               "loss": float(r.split(",")[1])} for r in rows]
        else:
            payload["mlm"] = None
        return payload

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
