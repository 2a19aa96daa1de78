"""Project directory layout shared by the CLI pipeline and the HTTP service.

    <root>/
      corpus/corpus.jsonl        gold (annotatable) documents
      corpus/unlabeled.jsonl     unlabeled pool for pretraining/self-training
      annotations/<docid>.json   canonical annotation files
      vocab/vocab.json
      checkpoints/{mlm,ner,rel}.aoml
      runs/<timestamp>/{ner_curve.csv, rel_curve.csv, audit.jsonl, ...}
      predictions/<timestamp>.jsonl
      review/queue.jsonl         pseudo-label proposals awaiting verdicts
      review/decisions.jsonl     append-only review decisions
"""

from __future__ import annotations

import contextlib
import datetime
import json
import os
from pathlib import Path

from .annotate import AnnotatedDocument, parse_annotation_file, serialize_annotation
from .corpus import ReviewDocument, load_corpus, save_corpus
from .errors import LockHeld


class Project:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    # --- paths -------------------------------------------------------------

    @property
    def corpus_path(self) -> Path:
        return self.root / "corpus" / "corpus.jsonl"

    @property
    def unlabeled_path(self) -> Path:
        return self.root / "corpus" / "unlabeled.jsonl"

    @property
    def annotations_dir(self) -> Path:
        return self.root / "annotations"

    @property
    def vocab_path(self) -> Path:
        return self.root / "vocab" / "vocab.json"

    def checkpoint_path(self, role: str) -> Path:
        return self.root / "checkpoints" / f"{role.lower()}.aoml"

    @property
    def runs_dir(self) -> Path:
        return self.root / "runs"

    @property
    def predictions_dir(self) -> Path:
        return self.root / "predictions"

    @property
    def queue_path(self) -> Path:
        return self.root / "review" / "queue.jsonl"

    @property
    def decisions_path(self) -> Path:
        return self.root / "review" / "decisions.jsonl"

    def ensure_layout(self) -> None:
        for sub in ("corpus", "annotations", "vocab", "checkpoints", "runs",
                    "predictions", "review"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    def new_run_dir(self) -> Path:
        stamp = datetime.datetime.now().strftime("%Y%m%dT%H%M%S")
        run = self.runs_dir / stamp
        n = 0
        while run.exists():
            n += 1
            run = self.runs_dir / f"{stamp}-{n}"
        run.mkdir(parents=True)
        return run

    def new_prediction_path(self) -> Path:
        self.predictions_dir.mkdir(parents=True, exist_ok=True)
        stamp = datetime.datetime.now().strftime("%Y%m%dT%H%M%S")
        path = self.predictions_dir / f"{stamp}.jsonl"
        n = 0
        while path.exists():
            n += 1
            path = self.predictions_dir / f"{stamp}-{n}.jsonl"
        return path

    # --- locking -----------------------------------------------------------

    @contextlib.contextmanager
    def lock(self):
        """One mutating pipeline command at a time per project directory."""
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / ".lock"
        try:
            fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise LockHeld(f"project lock {path} is held; remove it if stale")
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            yield
        finally:
            with contextlib.suppress(FileNotFoundError):
                path.unlink()

    # --- corpus ------------------------------------------------------------

    def load_gold_corpus(self) -> list[ReviewDocument]:
        return load_corpus(self.corpus_path)

    def load_unlabeled(self) -> list[ReviewDocument]:
        if not self.unlabeled_path.exists():
            return []
        return load_corpus(self.unlabeled_path)

    # --- annotations -------------------------------------------------------

    def annotation_path(self, doc_id: str) -> Path:
        return self.annotations_dir / f"{doc_id}.json"

    def has_annotation(self, doc_id: str) -> bool:
        return self.annotation_path(doc_id).exists()

    def load_annotation(self, doc_id: str) -> AnnotatedDocument:
        return parse_annotation_file(self.annotation_path(doc_id).read_bytes())

    def save_annotation(self, ann: AnnotatedDocument) -> bytes:
        """Atomic write of the canonical form; returns the stored bytes."""
        self.annotations_dir.mkdir(parents=True, exist_ok=True)
        blob = serialize_annotation(ann)
        path = self.annotation_path(ann.document.id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_bytes(blob)
        os.replace(tmp, path)
        return blob

    def load_annotated_docs(self) -> list[AnnotatedDocument]:
        """All gold documents that have an annotation file, corpus order."""
        docs = []
        for doc in self.load_gold_corpus():
            if self.has_annotation(doc.id):
                docs.append(self.load_annotation(doc.id))
        return docs

    # --- review state ------------------------------------------------------

    def append_jsonl(self, path: Path, record: dict) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    def read_jsonl(self, path: Path) -> list[dict]:
        if not path.exists():
            return []
        records = []
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    records.append(json.loads(line))
        return records

    def rejected_ids(self) -> set[str]:
        return {r["doc_id"] for r in self.read_jsonl(self.decisions_path)
                if r.get("verdict") == "reject"}

    def decided_ids(self) -> set[str]:
        return {r["doc_id"] for r in self.read_jsonl(self.decisions_path)}

    def adopt_document(self, ann: AnnotatedDocument) -> None:
        """Move a pseudo-labeled/reviewed doc into the gold training set."""
        self.save_annotation(ann)
        gold = self.load_gold_corpus() if self.corpus_path.exists() else []
        if all(d.id != ann.document.id for d in gold):
            gold.append(ann.document)
            self.corpus_path.parent.mkdir(parents=True, exist_ok=True)
            save_corpus(gold, self.corpus_path)
        unlabeled = [d for d in self.load_unlabeled() if d.id != ann.document.id]
        if self.unlabeled_path.exists():
            save_corpus(unlabeled, self.unlabeled_path)
