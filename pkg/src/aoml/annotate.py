"""Span/relation annotation files, char-to-token alignment, BIO encoding.

Annotations travel as character-offset spans (what an annotation UI emits);
models consume token-index mentions.  ``align_spans`` bridges the two by
snapping sloppy character boundaries outward to whole tokens, logging a
warning per snap.  BIO decoding is deliberately lenient: model output on
noisy text will contain ill-formed tag sequences and must still decode.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass
from typing import Sequence

from .corpus import ReviewDocument, Token, tokenize
from .errors import (InvalidRelation, InvalidSpan, OverlappingMentions,
                     ParseError, UnalignableSpan)

logger = logging.getLogger(__name__)

RELATION_LABEL = "ASP-OPI"


class EntityLabel(str, enum.Enum):
    ASP = "ASP"
    OPI = "OPI"


class BioTag(enum.IntEnum):
    """Per-token tags; ordinals are fixed for checkpoint compatibility."""

    O = 0
    B_ASP = 1
    I_ASP = 2
    B_OPI = 3
    I_OPI = 4


N_TAGS = len(BioTag)

_BEGIN = {EntityLabel.ASP: BioTag.B_ASP, EntityLabel.OPI: BioTag.B_OPI}
_INSIDE = {EntityLabel.ASP: BioTag.I_ASP, EntityLabel.OPI: BioTag.I_OPI}
_TAG_LABEL = {BioTag.B_ASP: EntityLabel.ASP, BioTag.I_ASP: EntityLabel.ASP,
              BioTag.B_OPI: EntityLabel.OPI, BioTag.I_OPI: EntityLabel.OPI}


@dataclass(frozen=True)
class CharSpanAnnotation:
    """Character-offset entity span as stored in annotation files."""

    start: int
    end: int
    label: EntityLabel


@dataclass(frozen=True)
class EntityMention:
    """Token-index entity span; confidence present only on predictions."""

    token_start: int
    token_end: int
    label: EntityLabel
    confidence: float | None = None

    def __post_init__(self):
        if not (0 <= self.token_start < self.token_end):
            raise ValueError(f"bad mention range [{self.token_start},{self.token_end})")
        if self.confidence is not None and not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} not in [0,1]")

    def span(self) -> tuple[int, int, EntityLabel]:
        return (self.token_start, self.token_end, self.label)


@dataclass(frozen=True)
class RelationAnnotation:
    """Directed relation between two mentions, by index into the mention list."""

    head: int
    tail: int
    label: str = RELATION_LABEL
    probability: float | None = None

    def __post_init__(self):
        if self.label != RELATION_LABEL:
            raise InvalidRelation(f"unknown relation label {self.label!r}")
        if self.head == self.tail:
            raise InvalidRelation("relation head and tail must differ")
        if self.head < 0 or self.tail < 0:
            raise InvalidRelation("relation indices must be non-negative")


@dataclass(frozen=True)
class AnnotatedDocument:
    """A document plus gold mentions and gold ASP->OPI relations.

    Construction validates every joint invariant; an instance that exists
    is known-good.  Mentions must arrive sorted by token_start (use
    :meth:`build` to sort and remap relation indices first).
    """

    document: ReviewDocument
    tokens: tuple[Token, ...]
    mentions: tuple[EntityMention, ...]
    relations: tuple[RelationAnnotation, ...]

    def __post_init__(self):
        n = len(self.tokens)
        prev_end = 0
        for m in self.mentions:
            if m.token_end > n:
                raise InvalidSpan(
                    f"doc {self.document.id!r}: mention [{m.token_start},{m.token_end}) "
                    f"exceeds {n} tokens")
            if m.token_start < prev_end:
                raise OverlappingMentions(
                    f"doc {self.document.id!r}: mention at token {m.token_start} "
                    f"overlaps the previous one")
            prev_end = m.token_end
        for r in self.relations:
            if r.head >= len(self.mentions) or r.tail >= len(self.mentions):
                raise InvalidRelation(
                    f"doc {self.document.id!r}: relation index out of range")
            if self.mentions[r.head].label is not EntityLabel.ASP:
                raise InvalidRelation(
                    f"doc {self.document.id!r}: gold relation head must be ASP")
            if self.mentions[r.tail].label is not EntityLabel.OPI:
                raise InvalidRelation(
                    f"doc {self.document.id!r}: gold relation tail must be OPI")

    @classmethod
    def build(cls, document: ReviewDocument, tokens: Sequence[Token],
              mentions: Sequence[EntityMention],
              relations: Sequence[RelationAnnotation]) -> "AnnotatedDocument":
        """Sort mentions by token_start and remap relation indices accordingly."""
        order = sorted(range(len(mentions)), key=lambda i: mentions[i].token_start)
        remap = {old: new for new, old in enumerate(order)}
        sorted_mentions = tuple(mentions[i] for i in order)
        remapped = tuple(
            RelationAnnotation(head=remap[r.head], tail=remap[r.tail],
                               label=r.label, probability=r.probability)
            for r in relations)
        return cls(document=document, tokens=tuple(tokens),
                   mentions=sorted_mentions, relations=remapped)

    def mention_text(self, m: EntityMention) -> str:
        start = self.tokens[m.token_start].start
        end = self.tokens[m.token_end - 1].end
        return self.document.text[start:end]


def _align_one(span: CharSpanAnnotation, tokens: Sequence[Token]) -> tuple[int, int]:
    """Minimal token range covering the char span, snapped outward."""
    first = last = None
    for i, tok in enumerate(tokens):
        if tok.start < span.end and tok.end > span.start:
            if first is None:
                first = i
            last = i
    if first is None:
        raise UnalignableSpan(f"span [{span.start},{span.end}) overlaps no token")
    assert last is not None
    if tokens[first].start != span.start or tokens[last].end != span.end:
        logger.warning("snapped span [%d,%d) outward to tokens [%d,%d)",
                       span.start, span.end, first, last + 1)
    return first, last + 1


def align_spans(char_spans: Sequence[CharSpanAnnotation],
                tokens: Sequence[Token]) -> list[EntityMention]:
    """Map char spans to token mentions, sorted by token_start."""
    mentions = [EntityMention(*_align_one(s, tokens), label=s.label)
                for s in char_spans]
    mentions.sort(key=lambda m: m.token_start)
    prev_end = 0
    for m in mentions:
        if m.token_start < prev_end:
            raise OverlappingMentions(
                f"aligned mentions share a token at index {m.token_start}")
        prev_end = m.token_end
    return mentions


def encode_bio(mentions: Sequence[EntityMention], n_tokens: int) -> list[BioTag]:
    """BIO tags of length n_tokens: B-<label> then I-<label> per mention."""
    tags = [BioTag.O] * n_tokens
    for m in mentions:
        if m.token_end > n_tokens:
            raise InvalidSpan(f"mention [{m.token_start},{m.token_end}) "
                              f"exceeds {n_tokens} tokens")
        for i in range(m.token_start, m.token_end):
            if tags[i] is not BioTag.O:
                raise OverlappingMentions(f"mentions overlap at token {i}")
            tags[i] = _BEGIN[m.label] if i == m.token_start else _INSIDE[m.label]
    return tags


def decode_bio(tags: Sequence[BioTag | int]) -> list[EntityMention]:
    """Lenient BIO decode: a stray I-X opens a new X mention (acts as B-X)."""
    mentions: list[EntityMention] = []
    open_start: int | None = None
    open_label: EntityLabel | None = None

    def close(end: int) -> None:
        nonlocal open_start, open_label
        if open_start is not None:
            assert open_label is not None
            mentions.append(EntityMention(open_start, end, open_label))
            open_start = open_label = None

    for i, raw in enumerate(tags):
        tag = BioTag(raw)
        if tag is BioTag.O:
            close(i)
        elif tag in (BioTag.B_ASP, BioTag.B_OPI):
            close(i)
            open_start, open_label = i, _TAG_LABEL[tag]
        else:  # I-tag: continue a same-label run, else treat as B
            label = _TAG_LABEL[tag]
            if open_label is not label:
                close(i)
                open_start, open_label = i, label
    close(len(tags))
    return mentions


def parse_annotation_file(data: bytes | str) -> AnnotatedDocument:
    """Parse one canonical annotation JSON document.

    Schema: {"id", "text", "entities": [{"start","end","label"}...],
    "relations": [{"head","tail","label"}...]} where head/tail index the
    entities array.  Tokens are computed, entities aligned to them.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid annotation JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("annotation root must be a JSON object")
    for key in ("id", "text", "entities", "relations"):
        if key not in obj:
            raise ParseError(f"annotation missing required key {key!r}")
    try:
        document = ReviewDocument(id=str(obj["id"]), text=str(obj["text"]),
                                  rating=obj.get("rating"), date=obj.get("date"),
                                  source=obj.get("source"))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc

    text_len = len(document.text)
    spans: list[CharSpanAnnotation] = []
    for ent in obj["entities"]:
        try:
            start, end, label = int(ent["start"]), int(ent["end"]), str(ent["label"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed entity record {ent!r}") from exc
        if label not in EntityLabel.__members__:
            raise ParseError(f"unknown entity label {label!r}")
        if not (0 <= start < end <= text_len):
            raise InvalidSpan(f"entity span [{start},{end}) out of range "
                              f"for text of length {text_len}")
        spans.append(CharSpanAnnotation(start, end, EntityLabel[label]))

    relations: list[RelationAnnotation] = []
    for rel in obj["relations"]:
        try:
            head, tail = int(rel["head"]), int(rel["tail"])
            label = str(rel.get("label", RELATION_LABEL))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed relation record {rel!r}") from exc
        if head >= len(spans) or tail >= len(spans):
            raise InvalidRelation(f"relation index out of range in {rel!r}")
        relations.append(RelationAnnotation(head=head, tail=tail, label=label))

    tokens = tokenize(document.text)
    aligned = [EntityMention(*_align_one(s, tokens), label=s.label) for s in spans]
    return AnnotatedDocument.build(document, tokens, aligned, relations)


def annotation_to_json(ann: AnnotatedDocument) -> dict:
    """Canonical JSON form: char-offset entities in mention order."""
    entities = []
    for m in ann.mentions:
        entities.append({"start": ann.tokens[m.token_start].start,
                         "end": ann.tokens[m.token_end - 1].end,
                         "label": m.label.value})
    relations = [{"head": r.head, "tail": r.tail, "label": r.label}
                 for r in ann.relations]
    record: dict = {"id": ann.document.id, "text": ann.document.text,
                    "entities": entities, "relations": relations}
    for key in ("rating", "date", "source"):
        value = getattr(ann.document, key)
        if value is not None:
            record[key] = value
    return record


def serialize_annotation(ann: AnnotatedDocument) -> bytes:
    """Stable canonical bytes; equal documents serialize identically."""
    return json.dumps(annotation_to_json(ann), ensure_ascii=False,
                      sort_keys=True).encode("utf-8")
