"""Command-line pipeline: convert, build-vocab, pretrain, train, predict,
evaluate, self-train, serve.

Every command operates on a project directory (see :mod:`aoml.project`) and
accepts ``--seed``.  ``predict`` chains the tagger into the pair scorer and
emits both machine-readable JSONL and a five-column text table
(SI No | Text | ASP | OPI | Probability (%)).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .annotate import (AnnotatedDocument, EntityLabel, EntityMention,
                       RelationAnnotation, annotation_to_json,
                       parse_annotation_file)
from .corpus import (ReviewDocument, Vocabulary, build_vocab, load_corpus,
                     save_corpus, tokenize)
from .encoder import EncoderConfig, load_checkpoint, mlm_pretrain, save_checkpoint
from .errors import (AomlError, DuplicateId, NoUnlabeledDocuments, ParseError)
from .evalmetrics import TrainingCurve, rel_prf, span_prf, write_curve
from .ner import NerModel, TrainConfig, predict_ner, train_ner
from .neuralcore import RandomSource
from .project import Project
from .relex import (DEFAULT_THRESHOLD, RelModel, RelationPrediction,
                    predict_rel, train_rel)

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# Table-I-style output
# --------------------------------------------------------------------------

TABLE_COLUMNS = ["SI No", "Text", "ASP", "OPI", "Probability (%)"]
TEXT_PREVIEW_CHARS = 40


@dataclass(frozen=True)
class ExtractionRecord:
    """One rendered relation: serial number, source text preview, the two
    surfaces, and the probability as a percent string with 2 decimals."""

    serial: int
    text: str
    aspect: str
    opinion: str
    probability_pct: str


def _preview(text: str) -> str:
    if len(text) <= TEXT_PREVIEW_CHARS:
        return text
    return text[:TEXT_PREVIEW_CHARS - 3] + "..."


def char_span_of(doc_text: str, mention: EntityMention) -> tuple[int, int, str]:
    tokens = tokenize(doc_text)
    start = tokens[mention.token_start].start
    end = tokens[mention.token_end - 1].end
    return start, end, doc_text[start:end]


def extraction_records(per_doc: Sequence[tuple[ReviewDocument,
                                               Sequence[RelationPrediction]]]
                       ) -> list[ExtractionRecord]:
    """Flatten per-document predictions into table rows.

    Head surfaces land in the ASP column and tail surfaces in the OPI
    column regardless of predicted mention labels, so direction mistakes
    (e.g. opinion-opinion pairs) stay visible in the output.
    """
    records = []
    serial = 0
    for doc, preds in per_doc:
        if not preds:
            continue
        serial += 1
        for pred in preds:
            _, _, head_text = char_span_of(doc.text, pred.head)
            _, _, tail_text = char_span_of(doc.text, pred.tail)
            records.append(ExtractionRecord(
                serial=serial, text=_preview(doc.text), aspect=head_text,
                opinion=tail_text,
                probability_pct=f"{pred.probability * 100:.2f}"))
    return records


def render_extraction_table(records: Sequence[ExtractionRecord]) -> str:
    """Five-column text table; serial and text shown once per document."""
    rows = []
    last_serial = None
    for r in records:
        first = r.serial != last_serial
        rows.append([str(r.serial) if first else "", r.text if first else "",
                     r.aspect, r.opinion, r.probability_pct])
        last_serial = r.serial
    widths = [len(c) for c in TABLE_COLUMNS]
    for row in rows:
        widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
    header = " | ".join(c.ljust(w) for c, w in zip(TABLE_COLUMNS, widths))
    rule = "-+-".join("-" * w for w in widths)
    lines = [header, rule]
    for row in rows:
        lines.append(" | ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    return "\n".join(line.rstrip() for line in lines)


def prediction_record(doc: ReviewDocument, pred: RelationPrediction) -> dict:
    hs, he, htext = char_span_of(doc.text, pred.head)
    ts, te, ttext = char_span_of(doc.text, pred.tail)
    return {"doc_id": doc.id,
            "aspect": {"start": hs, "end": he, "text": htext},
            "opinion": {"start": ts, "end": te, "text": ttext},
            "probability": pred.probability}


# --------------------------------------------------------------------------
# self-training
# --------------------------------------------------------------------------

@dataclass
class SelfTrainConfig:
    tau_ner: float = 0.9
    tau_rel: float = 0.9
    rounds: int = 1
    max_added_per_round: int = 50
    rel_threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        for name in ("tau_ner", "tau_rel"):
            tau = getattr(self, name)
            if not (0.0 < tau <= 1.0):
                raise ValueError(f"{name} {tau} not in (0,1]")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.max_added_per_round < 1:
            raise ValueError("max_added_per_round must be >= 1")


@dataclass
class PseudoLabelProposal:
    """A document whose predictions cleared both confidence thresholds."""

    annotated: AnnotatedDocument
    mention_confidences: list[float]
    relation_probabilities: list[float]

    @property
    def mean_confidence(self) -> float:
        pool = self.mention_confidences + self.relation_probabilities
        return sum(pool) / len(pool)

    def audit_record(self, round_index: int) -> dict:
        return {"round": round_index,
                "doc_id": self.annotated.document.id,
                "mention_confidences": self.mention_confidences,
                "relation_probabilities": self.relation_probabilities,
                "mean_confidence": self.mean_confidence}


@dataclass
class SelfTrainResult:
    ner_model: NerModel
    rel_model: RelModel
    audit: list[dict]
    pseudo_docs: list[AnnotatedDocument]
    curves: list[tuple[int, TrainingCurve, TrainingCurve]]


def propose_pseudo_label(ner_model: NerModel, rel_model: RelModel,
                         doc: ReviewDocument, config: SelfTrainConfig
                         ) -> PseudoLabelProposal | None:
    """Apply the adoption rule to one unlabeled document.

    Adopt iff the document has at least one predicted mention, every mention
    confidence reaches tau_ner, every emitted relation probability reaches
    tau_rel, and the emitted relations form a valid gold annotation
    (ASP head, OPI tail).
    """
    mentions = predict_ner(ner_model, doc)
    if not mentions:
        return None
    confidences = [m.confidence for m in mentions]
    if min(confidences) < config.tau_ner:
        return None
    predictions = predict_rel(rel_model, doc, mentions,
                              threshold=config.rel_threshold)
    if any(p.probability < config.tau_rel for p in predictions):
        return None
    index_of = {m.span(): i for i, m in enumerate(mentions)}
    relations = []
    for p in predictions:
        if p.head.label is not EntityLabel.ASP or p.tail.label is not EntityLabel.OPI:
            logger.info("doc %s: emitted %s->%s relation is not adoptable as "
                        "gold; skipping document", doc.id,
                        p.head.label.value, p.tail.label.value)
            return None
        relations.append(RelationAnnotation(head=index_of[p.head.span()],
                                            tail=index_of[p.tail.span()]))
    bare = [EntityMention(m.token_start, m.token_end, m.label) for m in mentions]
    annotated = AnnotatedDocument.build(doc, tokenize(doc.text), bare, relations)
    return PseudoLabelProposal(annotated, [float(c) for c in confidences],
                               [float(p.probability) for p in predictions])


def self_train(ner_model: NerModel, rel_model: RelModel,
               gold_docs: list[AnnotatedDocument],
               unlabeled_docs: list[ReviewDocument],
               config: SelfTrainConfig,
               ner_train: TrainConfig, rel_train: TrainConfig,
               blacklist: frozenset[str] | set[str] = frozenset()
               ) -> SelfTrainResult:
    """The semi-supervised loop: adopt confident predictions, retrain from
    scratch on gold plus pseudo-labels, repeat for the configured rounds."""
    if not unlabeled_docs:
        raise NoUnlabeledDocuments("self-training needs an unlabeled pool")
    gold_ids = {d.document.id for d in gold_docs}
    clash = gold_ids & {d.id for d in unlabeled_docs}
    if clash:
        raise DuplicateId(f"unlabeled ids overlap the gold set: {sorted(clash)}")

    vocab = ner_model.vocab
    ner_cfg, rel_cfg = ner_model.config, rel_model.config
    pool = {d.id: d for d in unlabeled_docs if d.id not in blacklist}
    audit: list[dict] = []
    pseudo: list[AnnotatedDocument] = []
    curves: list[tuple[int, TrainingCurve, TrainingCurve]] = []

    for round_index in range(config.rounds):
        proposals = []
        for doc_id in sorted(pool):
            proposal = propose_pseudo_label(ner_model, rel_model,
                                            pool[doc_id], config)
            if proposal is not None:
                proposals.append(proposal)
        proposals.sort(key=lambda p: (-p.mean_confidence,
                                      p.annotated.document.id))
        adopted = proposals[:config.max_added_per_round]
        if not adopted:
            break
        for proposal in adopted:
            audit.append(proposal.audit_record(round_index))
            pseudo.append(proposal.annotated)
            del pool[proposal.annotated.document.id]
        train_set = gold_docs + pseudo
        ner_model, ner_curve = train_ner(train_set, ner_train, vocab=vocab,
                                         encoder_config=ner_cfg)
        rel_model, rel_curve = train_rel(train_set, rel_train, vocab=vocab,
                                         encoder_config=rel_cfg,
                                         threshold=config.rel_threshold)
        curves.append((round_index, ner_curve, rel_curve))
    return SelfTrainResult(ner_model, rel_model, audit, pseudo, curves)


# --------------------------------------------------------------------------
# annotation-export converter
# --------------------------------------------------------------------------

def convert_export(data: bytes | str) -> list[AnnotatedDocument]:
    """Convert an annotation-tool export into canonical annotated documents.

    Documented input mapping (a JSON array, one object per document):
      - ``document`` or ``text``: the review text (required)
      - ``id``: document id (defaults to the array index as ``doc<i>``)
      - ``annotation``: array of ``{"start", "end", "label"|"tag"}`` char spans
      - ``relations``: array of ``{"head", "tail"}`` indexing ``annotation``
    Metadata keys ``rating``, ``date``, ``source`` pass through.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        rows = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"export is not valid JSON: {exc}") from exc
    if not isinstance(rows, list):
        raise ParseError("export must be a JSON array of documents")
    docs = []
    for i, row in enumerate(rows):
        if not isinstance(row, dict):
            raise ParseError(f"export record {i} is not an object")
        text = row.get("document", row.get("text"))
        if not isinstance(text, str):
            raise ParseError(f"export record {i} lacks a 'document' text")
        entities = []
        for ent in row.get("annotation", []):
            label = ent.get("label", ent.get("tag"))
            entities.append({"start": ent["start"], "end": ent["end"],
                             "label": label})
        relations = [{"head": rel["head"], "tail": rel["tail"],
                      "label": rel.get("label", "ASP-OPI")}
                     for rel in row.get("relations", [])]
        canonical = {"id": str(row.get("id", f"doc{i}")), "text": text,
                     "entities": entities, "relations": relations}
        for key in ("rating", "date", "source"):
            if row.get(key) is not None:
                canonical[key] = row[key]
        docs.append(parse_annotation_file(json.dumps(canonical)))
    return docs


# --------------------------------------------------------------------------
# CLI plumbing
# --------------------------------------------------------------------------

def _encoder_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--d-model", type=int, default=64)
    parser.add_argument("--n-heads", type=int, default=4)
    parser.add_argument("--n-layers", type=int, default=2)
    parser.add_argument("--d-ff", type=int, default=256)
    parser.add_argument("--max-len", type=int, default=128)
    parser.add_argument("--dropout", type=float, default=0.1)


def _encoder_config(args, vocab_size: int) -> EncoderConfig:
    return EncoderConfig(vocab_size=vocab_size, d_model=args.d_model,
                         n_heads=args.n_heads, n_layers=args.n_layers,
                         d_ff=args.d_ff, max_len=args.max_len,
                         dropout_p=args.dropout)


def _load_vocab(project: Project) -> Vocabulary:
    if not project.vocab_path.exists():
        raise AomlError(f"no vocabulary at {project.vocab_path}; "
                        f"run 'aoml build-vocab' first")
    return Vocabulary.load(project.vocab_path)


def _load_annotated(project: Project) -> list[AnnotatedDocument]:
    docs = project.load_annotated_docs()
    if not docs:
        raise AomlError(f"no annotated documents under {project.annotations_dir}")
    return docs


def cmd_convert(args) -> int:
    project = Project(args.project)
    with project.lock():
        project.ensure_layout()
        path = Path(args.input)
        if not path.exists():
            raise AomlError(f"export file not found: {path}")
        docs = convert_export(path.read_bytes())
        existing = ({d.id for d in project.load_gold_corpus()}
                    if project.corpus_path.exists() else set())
        appended = []
        for ann in docs:
            project.save_annotation(ann)
            if ann.document.id not in existing:
                appended.append(ann.document)
        if appended:
            merged = (project.load_gold_corpus()
                      if project.corpus_path.exists() else []) + appended
            save_corpus(merged, project.corpus_path)
        print(f"converted {len(docs)} documents "
              f"({len(appended)} new corpus entries)")
    return 0


def cmd_build_vocab(args) -> int:
    project = Project(args.project)
    with project.lock():
        project.ensure_layout()
        docs = project.load_gold_corpus() + project.load_unlabeled()
        vocab = build_vocab(docs, min_frequency=args.min_frequency,
                            lowercase=not args.no_lowercase)
        vocab.save(project.vocab_path)
        print(f"vocabulary of {vocab.size} ids -> {project.vocab_path}")
    return 0


def cmd_pretrain(args) -> int:
    project = Project(args.project)
    with project.lock():
        project.ensure_layout()
        vocab = _load_vocab(project)
        docs = project.load_unlabeled() or project.load_gold_corpus()
        if not docs:
            raise AomlError(f"no documents in {project.unlabeled_path} "
                            f"or {project.corpus_path}")
        config = _encoder_config(args, vocab.size)
        model, losses = mlm_pretrain(docs, vocab, config, epochs=args.epochs,
                                     rs=RandomSource(args.seed), lr=args.lr)
        save_checkpoint(model, project.checkpoint_path("MLM"))
        run = project.new_run_dir()
        with (run / "mlm_loss.csv").open("w", encoding="utf-8") as fh:
            fh.write("epoch,loss\n")
            for epoch, loss in enumerate(losses):
                fh.write(f"{epoch},{loss:.4f}\n")
        print(f"pretrained {args.epochs} epochs on {len(docs)} docs; "
              f"loss {losses[0]:.4f} -> {losses[-1]:.4f}; "
              f"checkpoint {project.checkpoint_path('MLM')}")
    return 0


def _train_config(args) -> TrainConfig:
    warm = getattr(args, "warm_start", None)
    return TrainConfig(epochs=args.epochs, lr=args.lr, seed=args.seed,
                       validation_fraction=args.validation_fraction,
                       warm_start=warm, freeze_encoder=args.freeze_encoder,
                       overfit=args.overfit)


def cmd_train_ner(args) -> int:
    project = Project(args.project)
    with project.lock():
        project.ensure_layout()
        docs = _load_annotated(project)
        config = _train_config(args)
        if config.warm_start is not None:
            model, curve = train_ner(docs, config)
        else:
            vocab = _load_vocab(project)
            model, curve = train_ner(docs, config,
                                     vocab=vocab,
                                     encoder_config=_encoder_config(args, vocab.size))
        save_checkpoint(model, project.checkpoint_path("NER"))
        run = project.new_run_dir()
        write_curve(curve, run / "ner_curve.csv")
        best = list(curve)[curve.best_f1_epoch()]
        print(f"NER best epoch {best.epoch}: P={best.precision:.4f} "
              f"R={best.recall:.4f} F1={best.f1:.4f}; curve {run / 'ner_curve.csv'}")
    return 0


def cmd_train_rel(args) -> int:
    project = Project(args.project)
    with project.lock():
        project.ensure_layout()
        docs = _load_annotated(project)
        config = _train_config(args)
        if config.warm_start is not None:
            model, curve = train_rel(docs, config, threshold=args.threshold)
        else:
            vocab = _load_vocab(project)
            model, curve = train_rel(docs, config, vocab=vocab,
                                     encoder_config=_encoder_config(args, vocab.size),
                                     threshold=args.threshold)
        save_checkpoint(model, project.checkpoint_path("REL"))
        run = project.new_run_dir()
        write_curve(curve, run / "rel_curve.csv")
        best = list(curve)[curve.best_f1_epoch()]
        print(f"REL best epoch {best.epoch}: P={best.precision:.4f} "
              f"R={best.recall:.4f} F1={best.f1:.4f}; curve {run / 'rel_curve.csv'}")
    return 0


def _load_annotation_set(path: Path) -> dict[str, AnnotatedDocument]:
    if not path.exists():
        raise AomlError(f"annotation directory not found: {path}")
    docs = {}
    for file in sorted(path.glob("*.json")):
        ann = parse_annotation_file(file.read_bytes())
        docs[ann.document.id] = ann
    if not docs:
        raise AomlError(f"no annotation files under {path}")
    return docs


def cmd_evaluate(args) -> int:
    gold_dir = Path(args.gold) if args.gold else Project(args.project).annotations_dir
    gold = _load_annotation_set(gold_dir)
    pred = _load_annotation_set(Path(args.pred))
    gold_spans = {i: list(d.mentions) for i, d in gold.items()}
    pred_spans = {i: list(d.mentions) for i, d in pred.items()}
    span = span_prf(gold_spans, pred_spans)
    gold_rels = {i: [(d.mentions[r.head], d.mentions[r.tail]) for r in d.relations]
                 for i, d in gold.items()}
    pred_rels = {i: [(d.mentions[r.head], d.mentions[r.tail]) for r in d.relations]
                 for i, d in pred.items()}
    rel = rel_prf(gold_rels, pred_rels)
    print(f"span: P={span.precision:.4f} R={span.recall:.4f} F1={span.f1:.4f}")
    print(f"relation: P={rel.precision:.4f} R={rel.recall:.4f} F1={rel.f1:.4f}")
    return 0


def _load_models(project: Project) -> tuple[NerModel, RelModel]:
    ner_path = project.checkpoint_path("NER")
    rel_path = project.checkpoint_path("REL")
    for path in (ner_path, rel_path):
        if not path.exists():
            raise AomlError(f"missing checkpoint: {path}")
    ner_model = load_checkpoint(ner_path, expect_role="NER")
    rel_model = load_checkpoint(rel_path, expect_role="REL")
    return ner_model, rel_model


def cmd_predict(args) -> int:
    project = Project(args.project)
    with project.lock():
        project.ensure_layout()
        ner_model, rel_model = _load_models(project)
        if project.vocab_path.exists():
            vocab = Vocabulary.load(project.vocab_path)
            ner_model.check_vocab(vocab)
            rel_model.check_vocab(vocab)
        if args.text is not None:
            docs = [ReviewDocument(id="input", text=args.text)]
        elif args.input is not None:
            docs = load_corpus(args.input)
        else:
            by_id = {d.id: d for d in
                     project.load_gold_corpus() + project.load_unlabeled()}
            if args.doc_id:
                missing = [i for i in args.doc_id if i not in by_id]
                if missing:
                    raise AomlError(f"unknown doc ids: {missing}")
                docs = [by_id[i] for i in args.doc_id]
            else:
                docs = list(by_id.values())
        per_doc = []
        for doc in docs:
            mentions = predict_ner(ner_model, doc)
            preds = predict_rel(rel_model, doc, mentions,
                                threshold=args.threshold)
            per_doc.append((doc, preds))
        out = project.new_prediction_path()
        with out.open("w", encoding="utf-8") as fh:
            for doc, preds in per_doc:
                for pred in preds:
                    fh.write(json.dumps(prediction_record(doc, pred),
                                        ensure_ascii=False) + "\n")
        print(render_extraction_table(extraction_records(per_doc)))
        print(f"\npredictions -> {out}")
    return 0


def cmd_selftrain(args) -> int:
    project = Project(args.project)
    with project.lock():
        project.ensure_layout()
        ner_model, rel_model = _load_models(project)
        gold = _load_annotated(project)
        unlabeled = project.load_unlabeled()
        config = SelfTrainConfig(tau_ner=args.tau_ner, tau_rel=args.tau_rel,
                                 rounds=args.rounds,
                                 max_added_per_round=args.max_added,
                                 rel_threshold=args.threshold)
        blacklist = project.rejected_ids() | project.decided_ids()
        if args.propose_only:
            proposals = []
            for doc in unlabeled:
                if doc.id in blacklist:
                    continue
                proposal = propose_pseudo_label(ner_model, rel_model, doc, config)
                if proposal is not None:
                    proposals.append(proposal)
            proposals.sort(key=lambda p: (-p.mean_confidence,
                                          p.annotated.document.id))
            project.queue_path.parent.mkdir(parents=True, exist_ok=True)
            with project.queue_path.open("w", encoding="utf-8") as fh:
                for p in proposals:
                    record = {"annotation": annotation_to_json(p.annotated),
                              "mention_confidences": p.mention_confidences,
                              "relation_probabilities": p.relation_probabilities,
                              "mean_confidence": p.mean_confidence}
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            print(f"queued {len(proposals)} proposals -> {project.queue_path}")
            return 0

        ner_train = (TrainConfig.from_json(ner_model.train_info)
                     if ner_model.train_info else TrainConfig(seed=args.seed))
        rel_train = (TrainConfig.from_json(rel_model.train_info)
                     if rel_model.train_info else
                     TrainConfig(epochs=400, seed=args.seed))
        result = self_train(ner_model, rel_model, gold, unlabeled, config,
                            ner_train, rel_train, blacklist=frozenset(blacklist))
        run = project.new_run_dir()
        with (run / "audit.jsonl").open("w", encoding="utf-8") as fh:
            for record in result.audit:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        if result.curves:
            _, ner_curve, rel_curve = result.curves[-1]
            write_curve(ner_curve, run / "ner_curve.csv")
            write_curve(rel_curve, run / "rel_curve.csv")
        for ann in result.pseudo_docs:
            project.adopt_document(ann)
        if result.audit:
            save_checkpoint(result.ner_model, project.checkpoint_path("NER"))
            save_checkpoint(result.rel_model, project.checkpoint_path("REL"))
        print(f"adopted {len(result.audit)} documents; audit {run / 'audit.jsonl'}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_app

    ui_dir = args.ui if args.ui and Path(args.ui).is_dir() else None
    app = build_app(args.project, ui_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoml",
        description="aspect-opinion mining pipeline over a project directory")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--project", required=True,
                       help="project directory (created on demand)")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("convert", help="import an annotation-tool export")
    common(p)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("build-vocab", help="build the token vocabulary")
    common(p)
    p.add_argument("--min-frequency", type=int, default=1)
    p.add_argument("--no-lowercase", action="store_true")
    p.set_defaults(func=cmd_build_vocab)

    p = sub.add_parser("pretrain", help="masked-LM pretrain the encoder")
    common(p)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=1e-3)
    _encoder_flags(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train-ner", help="train the ASP/OPI span tagger")
    common(p)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--validation-fraction", type=float, default=0.2)
    p.add_argument("--warm-start", default=None,
                   help="path to an MLM checkpoint to transfer from")
    p.add_argument("--freeze-encoder", action="store_true")
    p.add_argument("--overfit", action="store_true",
                   help="validate on the training split (sanity checks)")
    _encoder_flags(p)
    p.set_defaults(func=cmd_train_ner)

    p = sub.add_parser("train-rel", help="train the relation scorer")
    common(p)
    p.add_argument("--epochs", type=int, default=400)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--validation-fraction", type=float, default=0.2)
    p.add_argument("--warm-start", default=None,
                   help="path to an MLM checkpoint to transfer from")
    p.add_argument("--freeze-encoder", action="store_true")
    p.add_argument("--overfit", action="store_true")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    _encoder_flags(p)
    p.set_defaults(func=cmd_train_rel)

    p = sub.add_parser("evaluate", help="score prediction annotations against gold")
    common(p)
    p.add_argument("--gold", default=None,
                   help="gold annotation dir (default: project annotations/)")
    p.add_argument("--pred", required=True, help="predicted annotation dir")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="chain NER + REL over documents")
    common(p)
    p.add_argument("--text", default=None, help="predict on a literal text")
    p.add_argument("--input", default=None, help="JSONL corpus file")
    p.add_argument("--doc-id", action="append", default=None,
                   help="project document id (repeatable)")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("selftrain", help="semi-supervised self-training loop")
    common(p)
    p.add_argument("--tau-ner", type=float, default=0.9)
    p.add_argument("--tau-rel", type=float, default=0.9)
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--max-added", type=int, default=50)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--propose-only", action="store_true",
                   help="write the review queue instead of auto-adopting")
    p.set_defaults(func=cmd_selftrain)

    p = sub.add_parser("serve", help="run the annotation/review HTTP service")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.add_argument("--ui", default="frontend/public",
                   help="static UI directory to mount (skipped if absent)")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AomlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
